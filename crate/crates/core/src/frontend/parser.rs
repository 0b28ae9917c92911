// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::fmt;

use super::lexer::{lex, Tok, Token};
use crate::lang::ctx::Ctx;
use crate::lang::name::Name;
use crate::lang::ops::Ns;
use crate::lang::term::Term;
use crate::lang::ty::Ty;
use crate::registry::{is_lin_op_name, is_prim_name, with_param};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: expected ", self.line, self.col)?;
        match self.expected.as_slice() {
            [] => write!(f, "something else")?,
            [one] => write!(f, "{}", one)?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

/// How shape variables such as the `n` in `R n` or `replicate{n}` resolve.
#[derive(Clone, Debug, Default)]
pub struct ParseOptions {
    pub shape_vars: HashMap<String, usize>,
    /// Used for any shape variable without its own entry.
    pub default_n: Option<usize>,
}

impl ParseOptions {
    pub fn with_default_n(n: usize) -> Self {
        ParseOptions {
            shape_vars: HashMap::new(),
            default_n: Some(n),
        }
    }
}

/// A term together with the context it is typed in, from a
/// `x:T, y:T; v:T |- term` header.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub ctx: Ctx,
    pub term: Term,
}

pub fn parse_program(src: &str, opts: &ParseOptions) -> Result<Program, ParseError> {
    let mut p = Parser::new(src, opts)?;
    let ctx = if p.toks.iter().any(|t| t.tok == Tok::Turnstile) {
        p.header()?
    } else {
        Ctx::new()
    };
    let term = p.term()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(Program { ctx, term })
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    parse_term_with(src, &ParseOptions::default())
}

pub fn parse_term_with(src: &str, opts: &ParseOptions) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, opts)?;
    let t = p.term()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(t)
}

pub fn parse_type(src: &str) -> Result<Ty, ParseError> {
    let opts = ParseOptions::default();
    let mut p = Parser::new(src, &opts)?;
    let t = p.ty()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(t)
}

const KEYWORDS: &[&str] = &["let", "in", "fst", "snd", "unit", "zero", "map", "foldr", "lin"];

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    opts: &'a ParseOptions,
    scope: Vec<(String, Ns)>,
}

impl<'a> Parser<'a> {
    fn new(src: &str, opts: &'a ParseOptions) -> Result<Self, ParseError> {
        let toks = lex(src).map_err(|e| ParseError {
            line: e.line,
            col: e.col,
            expected: vec!["a valid token".into()],
            found: e.message,
        })?;
        Ok(Parser {
            toks,
            pos: 0,
            opts,
            scope: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn glued_at(&self, k: usize) -> bool {
        let i = (self.pos + k).min(self.toks.len() - 1);
        self.toks[i].glued
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError {
            line: t.line,
            col: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[what]))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{}`", kw)]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn resolve(&self, name: &str) -> Ns {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, ns)| *ns)
            .unwrap_or(Ns::Cart)
    }

    fn with_binders<R>(&mut self, bs: &[(String, Ns)], f: impl FnOnce(&mut Self) -> R) -> R {
        self.scope.extend(bs.iter().cloned());
        let r = f(self);
        for _ in bs {
            self.scope.pop();
        }
        r
    }

    // ---- header ----

    fn header(&mut self) -> Result<Ctx, ParseError> {
        let mut ctx = Ctx::new();
        if *self.peek() != Tok::Turnstile && *self.peek() != Tok::Semi {
            loop {
                let x = self.ident()?;
                self.expect(Tok::Colon, "`:`")?;
                let t = self.ty()?;
                ctx.push(Name::from(x.clone()), t);
                self.scope.push((x, Ns::Cart));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        if *self.peek() == Tok::Semi {
            self.bump();
            let v = self.ident()?;
            self.expect(Tok::Colon, "`:`")?;
            let t = self.ty()?;
            ctx.lin = Some((Name::from(v.clone()), t));
            self.scope.push((v, Ns::Lin));
        }
        self.expect(Tok::Turnstile, "`|-`")?;
        Ok(ctx)
    }

    // ---- types ----

    fn ty(&mut self) -> Result<Ty, ParseError> {
        let a = self.prod_ty()?;
        match self.peek() {
            Tok::Arrow => {
                self.bump();
                Ok(Ty::fun(a, self.ty()?))
            }
            Tok::FatArrow => {
                self.bump();
                Ok(Ty::power(a, self.ty()?))
            }
            Tok::Lolli => {
                self.bump();
                Ok(Ty::lin_fun(a, self.ty()?))
            }
            _ => Ok(a),
        }
    }

    fn prod_ty(&mut self) -> Result<Ty, ParseError> {
        let a = self.atom_ty()?;
        match self.peek() {
            Tok::Star => {
                self.bump();
                let b = self.prod_ty()?;
                if a.is_linear() || b.is_linear() {
                    Ok(Ty::lin_prod(a, b))
                } else {
                    Ok(Ty::prod(a, b))
                }
            }
            Tok::Bang => {
                self.bump();
                Ok(Ty::copower(a, self.prod_ty()?))
            }
            _ => Ok(a),
        }
    }

    fn atom_ty(&mut self) -> Result<Ty, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "R" => {
                self.bump();
                Ok(Ty::Real(self.shape()?))
            }
            Tok::Ident(s) if s == "lin" => {
                self.bump();
                match self.peek().clone() {
                    Tok::Ident(r) if r == "R" => {
                        self.bump();
                        Ok(Ty::LinReal(self.shape()?))
                    }
                    Tok::Num(x) if x == 1.0 => {
                        self.bump();
                        Ok(Ty::LinUnit)
                    }
                    _ => Err(self.error(&["`R`", "`1`"])),
                }
            }
            Tok::Ident(s) if s == "list" => {
                self.bump();
                Ok(Ty::list(self.atom_ty()?))
            }
            Tok::Num(x) if x == 1.0 => {
                self.bump();
                Ok(Ty::Unit)
            }
            Tok::Question => {
                self.bump();
                Ok(Ty::Unknown)
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => Err(self.error(&["type"])),
        }
    }

    fn shape(&mut self) -> Result<usize, ParseError> {
        match self.peek().clone() {
            Tok::Num(x) if x >= 0.0 && x.fract() == 0.0 => {
                self.bump();
                Ok(x as usize)
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let k = self.opts.shape_vars.get(&s).copied().or(self.opts.default_n);
                match k {
                    Some(k) => {
                        self.bump();
                        Ok(k)
                    }
                    _ => Err(ParseError {
                        expected: vec![format!("a value for shape variable `{}` (use --default-n)", s)],
                        ..self.error(&[])
                    }),
                }
            }
            _ => Err(self.error(&["dimension"])),
        }
    }

    // ---- terms ----

    fn term(&mut self) -> Result<Term, ParseError> {
        if self.eat_kw("let") {
            return self.let_binds();
        }
        match self.peek() {
            Tok::Backslash => {
                self.bump();
                let x = self.ident()?;
                self.expect(Tok::Colon, "`:` and a type annotation")?;
                let t = self.ty()?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.with_binders(&[(x.clone(), Ns::Cart)], |p| p.term())?;
                Ok(Term::lam(Name::from(x), t, body))
            }
            Tok::LinBackslash => {
                self.bump();
                let v = self.ident()?;
                self.expect(Tok::Colon, "`:` and a type annotation")?;
                let t = self.ty()?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.with_binders(&[(v.clone(), Ns::Lin)], |p| p.term())?;
                Ok(Term::lin_lam(Name::from(v), t, body))
            }
            _ => self.copow(),
        }
    }

    /// After `let`: one or more `;`-separated bindings, then `in body`.
    fn let_binds(&mut self) -> Result<Term, ParseError> {
        enum Bind {
            Cart(String, Term),
            Lin(String, Term),
            Elim(String, String, Term),
        }
        let bind = if self.eat_kw("lin") {
            let v = self.ident()?;
            self.expect(Tok::Eq, "`=`")?;
            Bind::Lin(v, self.term()?)
        } else {
            let x = self.ident()?;
            if *self.peek() == Tok::Bang {
                self.bump();
                let v = self.ident()?;
                self.expect(Tok::Eq, "`=`")?;
                Bind::Elim(x, v, self.term()?)
            } else {
                self.expect(Tok::Eq, "`=`")?;
                Bind::Cart(x, self.term()?)
            }
        };
        let binders: Vec<(String, Ns)> = match &bind {
            Bind::Cart(x, _) => vec![(x.clone(), Ns::Cart)],
            Bind::Lin(v, _) => vec![(v.clone(), Ns::Lin)],
            Bind::Elim(x, v, _) => vec![(x.clone(), Ns::Cart), (v.clone(), Ns::Lin)],
        };
        let body = self.with_binders(&binders, |p| -> Result<Term, ParseError> {
            match p.peek() {
                Tok::Semi => {
                    p.bump();
                    p.let_binds()
                }
                _ => {
                    p.expect_kw("in")?;
                    p.term()
                }
            }
        })?;
        Ok(match bind {
            Bind::Cart(x, a) => Term::let_(Name::from(x), a, body),
            Bind::Lin(v, a) => Term::lin_let(Name::from(v), a, body),
            Bind::Elim(x, v, a) => Term::copower_elim(a, Name::from(x), Name::from(v), body),
        })
    }

    fn copow(&mut self) -> Result<Term, ParseError> {
        let a = self.sum()?;
        if *self.peek() == Tok::BangStar {
            self.bump();
            let b = self.copow_rhs()?;
            return Ok(Term::copower_intro(a, b));
        }
        Ok(a)
    }

    fn copow_rhs(&mut self) -> Result<Term, ParseError> {
        if self.starts_binder() {
            self.term()
        } else {
            self.copow()
        }
    }

    fn starts_binder(&self) -> bool {
        self.is_kw("let") || matches!(self.peek(), Tok::Backslash | Tok::LinBackslash)
    }

    fn sum(&mut self) -> Result<Term, ParseError> {
        let mut a = self.product()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let b = self.product()?;
                    a = Term::plus(a, b);
                }
                Tok::Minus => {
                    self.bump();
                    let b = self.product()?;
                    a = Term::prim("sub", vec![a, b]);
                }
                _ => return Ok(a),
            }
        }
    }

    fn product(&mut self) -> Result<Term, ParseError> {
        let mut a = self.lin_app()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let b = self.lin_app()?;
            a = Term::prim("mul", vec![a, b]);
        }
        Ok(a)
    }

    fn lin_app(&mut self) -> Result<Term, ParseError> {
        let mut a = self.app()?;
        while *self.peek() == Tok::At {
            self.bump();
            let b = self.app()?;
            a = Term::lin_app(a, b);
        }
        Ok(a)
    }

    fn starts_arg(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !matches!(s.as_str(), "let" | "in" | "lin"),
            Tok::Num(_) | Tok::LBrack | Tok::LAngle | Tok::LParen => true,
            _ => false,
        }
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        let mut f = self.unary()?;
        while self.starts_arg() {
            let a = self.unary()?;
            f = Term::app(f, a);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Term, ParseError> {
        if self.eat_kw("fst") {
            return Ok(Term::fst(self.unary()?));
        }
        if self.eat_kw("snd") {
            return Ok(Term::snd(self.unary()?));
        }
        self.atom()
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(if neg { -x } else { x })
            }
            _ => Err(self.error(&["number"])),
        }
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Num(_) | Tok::Minus => Ok(Term::RealLit(vec![self.number()?])),
            Tok::LBrack => {
                self.bump();
                let mut xs = vec![self.number()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    xs.push(self.number()?);
                }
                self.expect(Tok::RBrack, "`]`")?;
                Ok(Term::RealLit(xs))
            }
            Tok::LAngle => {
                self.bump();
                let a = self.term()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.term()?;
                self.expect(Tok::RAngle, "`>`")?;
                Ok(Term::pair(a, b))
            }
            Tok::LParen => {
                self.bump();
                let a = self.term()?;
                if *self.peek() == Tok::Comma {
                    self.bump();
                    let b = self.term()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Term::pair(a, b));
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(a)
            }
            Tok::Ident(s) => match s.as_str() {
                "unit" => {
                    self.bump();
                    Ok(Term::UnitVal)
                }
                "zero" => {
                    self.bump();
                    Ok(Term::Zero)
                }
                "map" => {
                    self.bump();
                    self.map_rest()
                }
                "foldr" => {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let f = self.term()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let i = self.term()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let v = self.term()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Term::foldr(f, i, v))
                }
                _ if KEYWORDS.contains(&s.as_str()) => Err(self.error(&["term"])),
                _ => {
                    let call = matches!(self.peek_at(1), Tok::LParen | Tok::LBrace) && self.glued_at(1);
                    if call && (is_prim_name(&s) || is_lin_op_name(&s)) {
                        self.bump();
                        return self.op_call(s);
                    }
                    self.bump();
                    Ok(match self.resolve(&s) {
                        Ns::Cart => Term::Var(Name::from(s)),
                        Ns::Lin => Term::LinVar(Name::from(s)),
                    })
                }
            },
            _ => Err(self.error(&["term"])),
        }
    }

    fn map_rest(&mut self) -> Result<Term, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        self.expect(Tok::Backslash, "`\\`")?;
        let x = self.ident()?;
        if *self.peek() == Tok::Colon {
            self.bump();
            let t = self.ty()?;
            if t != Ty::Real(1) {
                return Err(self.error(&["map binder of type R 1"]));
            }
        }
        self.expect(Tok::Dot, "`.`")?;
        let body = self.with_binders(&[(x.clone(), Ns::Cart)], |p| p.term())?;
        self.expect(Tok::RParen, "`)`")?;
        let arr = self.unary()?;
        Ok(Term::map(Name::from(x), body, arr))
    }

    fn op_call(&mut self, base: String) -> Result<Term, ParseError> {
        let name = if *self.peek() == Tok::LBrace {
            self.bump();
            let k = self.shape()?;
            self.expect(Tok::RBrace, "`}`")?;
            with_param(&base, k)
        } else {
            base.clone()
        };
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        let linear = is_lin_op_name(&base);
        if linear {
            while *self.peek() != Tok::Semi {
                args.push(self.term()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else if *self.peek() != Tok::Semi {
                    return Err(self.error(&["`,`", "`;`"]));
                }
            }
            self.bump();
            let l = self.term()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Term::LinOp(name, args, Box::new(l)));
        }
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.term()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(Term::PrimOp(name, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::term::{lin_var, scalar, var};

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    #[test]
    fn let_with_op() {
        let t = parse_term("let y = mul(x, x) in y").unwrap();
        assert_eq!(
            t,
            Term::let_(n("y"), Term::prim("mul", vec![var("x"), var("x")]), var("y"))
        );
    }

    #[test]
    fn lambda_with_type() {
        let t = parse_term("\\x:R 1. fst <x, x>").unwrap();
        assert_eq!(
            t,
            Term::lam(n("x"), Ty::Real(1), Term::fst(Term::pair(var("x"), var("x"))))
        );
    }

    #[test]
    fn foldr_form() {
        let t = parse_term("foldr(f, i, v)").unwrap();
        assert_eq!(t, Term::foldr(var("f"), var("i"), var("v")));
    }

    #[test]
    fn linear_scope_resolution() {
        let t = parse_term("\\\\v:lin R 1. lscale(x; v) + v").unwrap();
        let body = Term::plus(Term::lin_op("lscale", vec![var("x")], lin_var("v")), lin_var("v"));
        assert_eq!(t, Term::lin_lam(n("v"), Ty::LinReal(1), body));
    }

    #[test]
    fn infix_precedence() {
        let t = parse_term("a + b * c - d").unwrap();
        let bc = Term::prim("mul", vec![var("b"), var("c")]);
        let expected = Term::prim("sub", vec![Term::plus(var("a"), bc), var("d")]);
        assert_eq!(t, expected);
    }

    #[test]
    fn application_binds_tighter_than_plus() {
        let t = parse_term("f x + g y").unwrap();
        assert_eq!(
            t,
            Term::plus(Term::app(var("f"), var("x")), Term::app(var("g"), var("y")))
        );
    }

    #[test]
    fn projections_take_one_atom() {
        let t = parse_term("snd (g z) (zero, z')").unwrap();
        let expected = Term::app(
            Term::snd(Term::app(var("g"), var("z"))),
            Term::pair(Term::Zero, var("z'")),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn multi_let_and_copower() {
        let t = parse_term("let a = 1.0; b ! w = c in a !* w").unwrap();
        let expected = Term::let_(
            n("a"),
            scalar(1.0),
            Term::copower_elim(var("c"), n("b"), n("w"), Term::copower_intro(var("a"), lin_var("w"))),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn header_and_shapes() {
        let opts = ParseOptions::with_default_n(5);
        let p = parse_program("x:R 1, ys:R n |- replicate{n}(x)", &opts).unwrap();
        assert_eq!(p.ctx.cart.len(), 2);
        assert_eq!(p.ctx.cart[1].1, Ty::Real(5));
        assert_eq!(p.term, Term::prim("replicate{5}", vec![var("x")]));
    }

    #[test]
    fn unresolved_shape_is_an_error() {
        assert!(parse_program("x:R n |- x", &ParseOptions::default()).is_err());
    }

    #[test]
    fn spaced_paren_is_application() {
        let t = parse_term("sin (x)").unwrap();
        assert_eq!(t, Term::app(var("sin"), var("x")));
    }

    #[test]
    fn types_round_trip_through_display() {
        for src in [
            "R 3",
            "lin 1 * lin R 2",
            "(R 1 -> R 1) ! lin R 1",
            "lin R 1 -o (lin R 1 * lin R 1)",
            "list (R 1 * R 2)",
        ] {
            let t = parse_type(src).unwrap();
            assert_eq!(parse_type(&t.to_string()).unwrap(), t, "{}", src);
        }
    }

    #[test]
    fn errors_carry_location() {
        let e = parse_term("let x = in x").unwrap_err();
        assert_eq!((e.line, e.col), (1, 9));
        assert!(e.to_string().contains("expected"));
    }
}
