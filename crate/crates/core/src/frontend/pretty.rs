// SPDX-License-Identifier: Apache-2.0

//! Pretty-printer. Output re-parses to an alpha-equivalent term.

use std::fmt::Write;

use super::parser::Program;
use crate::lang::term::Term;
use crate::stack::guard;

const BINDER: u8 = 0;
const COPOW: u8 = 1;
const SUM: u8 = 2;
const PROD: u8 = 3;
const LAPP: u8 = 4;
const APP: u8 = 5;
const UNARY: u8 = 6;
const ATOM: u8 = 7;

fn level(t: &Term) -> u8 {
    match t {
        Term::Let(..) | Term::LinLet(..) | Term::CopowerElim { .. } | Term::Lam(..) | Term::LinLam(..) => BINDER,
        Term::CopowerIntro(..) => COPOW,
        Term::Plus(..) => SUM,
        Term::PrimOp(op, args) if op == "sub" && args.len() == 2 => SUM,
        Term::PrimOp(op, args) if op == "mul" && args.len() == 2 => PROD,
        Term::LinApp(..) => LAPP,
        Term::App(..) | Term::Map(..) => APP,
        Term::Fst(_) | Term::Snd(_) => UNARY,
        _ => ATOM,
    }
}

pub fn pretty(t: &Term) -> String {
    let mut out = String::new();
    go(t, BINDER, 0, &mut out);
    out
}

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    let binds: Vec<String> = p.ctx.cart.iter().map(|(x, t)| format!("{}:{}", x, t)).collect();
    out.push_str(&binds.join(", "));
    if let Some((v, t)) = &p.ctx.lin {
        let _ = write!(out, "; {}:{}", v, t);
    }
    if !out.is_empty() {
        out.push(' ');
    }
    out.push_str("|-\n");
    out.push_str(&pretty(&p.term));
    out.push('\n');
    out
}

fn newline(indent: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..indent {
        out.push(' ');
    }
}

fn lit(xs: &[f64], out: &mut String) {
    out.push('[');
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{:?}", x);
    }
    out.push(']');
}

fn go(t: &Term, prec: u8, indent: usize, out: &mut String) {
    guard(|| {
        let parens = level(t) < prec;
        if parens {
            out.push('(');
        }
        let ind = if parens { indent + 1 } else { indent };
        body(t, ind, out);
        if parens {
            out.push(')');
        }
    })
}

fn body(t: &Term, indent: usize, out: &mut String) {
    match t {
        Term::Var(x) | Term::LinVar(x) => out.push_str(x.as_str()),
        Term::UnitVal => out.push_str("unit"),
        Term::Zero => out.push_str("zero"),
        Term::RealLit(xs) => lit(xs, out),
        Term::Let(x, a, b) => {
            let _ = write!(out, "let {} = ", x);
            go(a, BINDER, indent + 4, out);
            out.push_str(" in");
            newline(indent, out);
            go(b, BINDER, indent, out);
        }
        Term::LinLet(v, a, b) => {
            let _ = write!(out, "let lin {} = ", v);
            go(a, BINDER, indent + 4, out);
            out.push_str(" in");
            newline(indent, out);
            go(b, BINDER, indent, out);
        }
        Term::CopowerElim {
            scrutinee,
            cart,
            lin,
            body: b,
        } => {
            let _ = write!(out, "let {} ! {} = ", cart, lin);
            go(scrutinee, BINDER, indent + 4, out);
            out.push_str(" in");
            newline(indent, out);
            go(b, BINDER, indent, out);
        }
        Term::Lam(x, ty, b) => {
            let _ = write!(out, "\\{}:{}. ", x, ty);
            go(b, BINDER, indent + 2, out);
        }
        Term::LinLam(v, ty, b) => {
            let _ = write!(out, "\\\\{}:{}. ", v, ty);
            go(b, BINDER, indent + 2, out);
        }
        Term::CopowerIntro(a, b) => {
            go(a, SUM, indent, out);
            out.push_str(" !* ");
            go(b, COPOW, indent, out);
        }
        Term::Plus(a, b) => {
            go(a, SUM, indent, out);
            out.push_str(" + ");
            go(b, PROD, indent, out);
        }
        Term::PrimOp(op, args) if op == "sub" && args.len() == 2 => {
            go(&args[0], SUM, indent, out);
            out.push_str(" - ");
            go(&args[1], PROD, indent, out);
        }
        Term::PrimOp(op, args) if op == "mul" && args.len() == 2 => {
            go(&args[0], PROD, indent, out);
            out.push_str(" * ");
            go(&args[1], LAPP, indent, out);
        }
        Term::LinApp(f, a) => {
            go(f, LAPP, indent, out);
            out.push_str(" @ ");
            go(a, APP, indent, out);
        }
        Term::App(f, a) => {
            go(f, APP, indent, out);
            out.push(' ');
            go(a, UNARY, indent, out);
        }
        Term::Map(x, b, arr) => {
            let _ = write!(out, "map (\\{}. ", x);
            go(b, BINDER, indent + 2, out);
            out.push_str(") ");
            go(arr, UNARY, indent, out);
        }
        Term::Fst(a) => {
            out.push_str("fst ");
            go(a, UNARY, indent, out);
        }
        Term::Snd(a) => {
            out.push_str("snd ");
            go(a, UNARY, indent, out);
        }
        Term::Pair(a, b) => {
            out.push('<');
            go(a, BINDER, indent + 1, out);
            out.push_str(", ");
            go(b, BINDER, indent + 1, out);
            out.push('>');
        }
        Term::PrimOp(op, args) => {
            out.push_str(op);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                go(a, BINDER, indent + 2, out);
            }
            out.push(')');
        }
        Term::LinOp(op, cargs, l) => {
            out.push_str(op);
            out.push('(');
            for (i, a) in cargs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                go(a, BINDER, indent + 2, out);
            }
            out.push_str("; ");
            go(l, BINDER, indent + 2, out);
            out.push(')');
        }
        Term::Foldr(f, i, a) => {
            out.push_str("foldr(");
            go(f, BINDER, indent + 2, out);
            out.push_str(", ");
            go(i, BINDER, indent + 2, out);
            out.push_str(", ");
            go(a, BINDER, indent + 2, out);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse_term;
    use crate::lang::name::Name;
    use crate::lang::ops::alpha_eq;
    use crate::lang::term::{scalar, var};

    #[test]
    fn basic_forms() {
        assert_eq!(pretty(&Term::pair(var("x"), var("y"))), "<x, y>");
        assert_eq!(pretty(&Term::Zero), "zero");
        assert_eq!(
            pretty(&Term::let_(Name::new("x"), scalar(2.0), var("x"))),
            "let x = [2.0] in\nx"
        );
    }

    #[test]
    fn parenthesises_by_precedence() {
        let t = Term::prim("mul", vec![Term::plus(var("a"), var("b")), var("c")]);
        assert_eq!(pretty(&t), "(a + b) * c");
        let t = Term::plus(var("a"), Term::plus(var("b"), var("c")));
        assert_eq!(pretty(&t), "a + (b + c)");
        let t = Term::app(var("f"), Term::app(var("g"), var("x")));
        assert_eq!(pretty(&t), "f (g x)");
    }

    #[test]
    fn round_trips() {
        for src in [
            "let f = \\z:R 1. x * z + 1.0 in map (\\z. f z) zs",
            "\\\\v:lin 1 * lin R 1. lscale(x; snd v) + zero",
            "let a ! w = c in (fst a !* w) + zero",
            "foldr(\\p:R 1 * R 1. fst p * snd p, [1.0], xs)",
            "(\\x:R 1. x) [-2.5, 1e-9]",
            "lid() @ <unit, replicate{3}(x)>",
        ] {
            let t = parse_term(src).unwrap();
            let back = parse_term(&pretty(&t)).unwrap();
            assert!(alpha_eq(&t, &back), "{}\n=> {}", src, pretty(&t));
        }
    }
}
