// SPDX-License-Identifier: Apache-2.0

//! Directed rewriting that makes transformed programs readable without
//! changing their cost or meaning.
//!
//! Each pass rewrites children first and then the node itself, trying
//! structural let rules, then projection, plus and array rules, then
//! inlining. Passes repeat until nothing fires or `max_passes` is reached.

use std::collections::{BTreeMap, BTreeSet};

use crate::lang::name::{Name, NameSupply};
use crate::lang::ops::{all_names, alpha_eq, free_vars, occurrences, subst_ns, Ns};
use crate::lang::term::Term;
use crate::lang::ty::Ty;
use crate::registry::split_name;
use crate::stack::guard;

/// The rules of the rewrite table, in the order they are documented.
pub const TABLE_RULES: [&str; 21] = [
    "lamAppLet",
    "letRotate",
    "letPairSplit",
    "letInline",
    "pairProj1",
    "pairProj2",
    "pairEta",
    "letProj1",
    "letProj2",
    "plusZero1",
    "plusZero2",
    "plusPair",
    "plusLet1",
    "plusLet2",
    "algebra",
    "letLamPairSplit",
    "mapPairSplit",
    "mapZero",
    "sumZip",
    "sumZero",
    "sumSingleton",
];

/// Rules beyond the table: projections and applications of `zero`, linear
/// maps applied to `zero`, and floating a let out of a list sum so `sumZip`
/// can see the zip that `mapPairSplit` leaves under its binding.
pub const EXTRA_RULES: [&str; 4] = ["zeroProj", "zeroApp", "linearZero", "sumLet"];

#[derive(Clone, Debug)]
pub struct SimplifyOptions {
    pub max_passes: usize,
    /// Record every firing with the path of the rewritten node.
    pub trace: bool,
    /// Also inline let-bound lambdas used more than once. This is the
    /// by-hand inlining used to compare against hand-simplified listings; it
    /// can duplicate code (never work), so it is off by default.
    pub inline_lambdas: bool,
}

impl Default for SimplifyOptions {
    fn default() -> Self {
        SimplifyOptions {
            max_passes: 64,
            trace: false,
            inline_lambdas: false,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SimplifyStats {
    pub counts: BTreeMap<&'static str, usize>,
    pub passes: usize,
    /// The pass cap was reached before a fixpoint.
    pub hit_cap: bool,
    pub trace: Vec<String>,
}

impl SimplifyStats {
    pub fn fired(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn merge(&mut self, other: &SimplifyStats) {
        for (k, v) in &other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
        self.passes += other.passes;
        self.hit_cap |= other.hit_cap;
        self.trace.extend(other.trace.iter().cloned());
    }
}

pub fn simplify(t: &Term) -> Term {
    simplify_with(t, &SimplifyOptions::default()).0
}

pub fn simplify_with(t: &Term, opts: &SimplifyOptions) -> (Term, SimplifyStats) {
    let mut supply = NameSupply::new();
    let names: BTreeSet<Name> = all_names(t);
    supply.avoid(names);
    let mut s = Simplifier {
        supply: &mut supply,
        trace: opts.trace,
        inline_lambdas: opts.inline_lambdas,
        stats: SimplifyStats::default(),
        path: Vec::new(),
        changed: false,
    };
    let mut cur = t.clone();
    loop {
        if s.stats.passes >= opts.max_passes {
            s.stats.hit_cap = true;
            break;
        }
        s.changed = false;
        s.stats.passes += 1;
        cur = s.rewrite(&cur);
        if !s.changed {
            break;
        }
    }
    (cur, s.stats)
}

/// Free occurrences of `x` in either namespace.
pub fn used_count(x: &Name, t: &Term) -> usize {
    occurrences(Ns::Cart, x, t) + occurrences(Ns::Lin, x, t)
}

/// Terms whose duplication repeats no work.
pub fn is_cheap(t: &Term) -> bool {
    match t {
        Term::Var(_) | Term::LinVar(_) | Term::RealLit(_) | Term::UnitVal | Term::Zero => true,
        Term::Fst(a) | Term::Snd(a) => is_var_projection(a),
        _ => false,
    }
}

fn is_var_projection(t: &Term) -> bool {
    match t {
        Term::Var(_) | Term::LinVar(_) => true,
        Term::Fst(a) | Term::Snd(a) => is_var_projection(a),
        _ => false,
    }
}

fn is_value(t: &Term) -> bool {
    matches!(t, Term::Lam(..) | Term::LinLam(..))
}

/// Does `x` occur under a construct whose body may run more than once?
fn repeated_go(ns: Ns, x: &Name, t: &Term, under: bool) -> bool {
    guard(|| match t {
        Term::Var(y) => under && ns == Ns::Cart && y == x,
        Term::LinVar(y) => under && ns == Ns::Lin && y == x,
        _ => {
            let bs = crate::lang::ops::binders(t);
            t.children().into_iter().enumerate().any(|(i, c)| {
                if bs.iter().any(|(bns, n, j)| *j == i && *bns == ns && *n == x) {
                    return false;
                }
                let loops = match t {
                    Term::Lam(..) | Term::LinLam(..) => true,
                    Term::Map(..) => i == 0,
                    Term::CopowerElim { .. } => i == 1,
                    _ => false,
                };
                repeated_go(ns, x, c, under || loops)
            })
        }
    })
}

fn is_lit(t: &Term, c: f64) -> bool {
    matches!(t, Term::RealLit(xs) if !xs.is_empty() && xs.iter().all(|x| *x == c))
}

fn prim_base(t: &Term) -> Option<(&str, &[Term])> {
    match t {
        Term::PrimOp(op, args) => Some((split_name(op).0, args.as_slice())),
        _ => None,
    }
}

/// Both lists are known to have the same length.
fn same_length(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::PrimOp(f, xs), Term::PrimOp(g, ys)) => {
            let (fb, fp) = split_name(f);
            let (gb, gp) = split_name(g);
            match (fb, gb) {
                ("to_list", "to_list") => fp.is_some() && fp == gp,
                ("list_map", "list_map") => alpha_eq(&xs[1], &ys[1]),
                _ => false,
            }
        }
        _ => false,
    }
}

struct Simplifier<'a> {
    supply: &'a mut NameSupply,
    trace: bool,
    inline_lambdas: bool,
    stats: SimplifyStats,
    path: Vec<String>,
    changed: bool,
}

type Step = Option<(&'static str, Term)>;

fn let_like(t: &Term) -> Option<(Ns, &Name, &Term, &Term)> {
    match t {
        Term::Let(x, a, b) => Some((Ns::Cart, x, a, b)),
        Term::LinLet(x, a, b) => Some((Ns::Lin, x, a, b)),
        _ => None,
    }
}

fn mk_let(ns: Ns, x: Name, a: Term, b: Term) -> Term {
    match ns {
        Ns::Cart => Term::let_(x, a, b),
        Ns::Lin => Term::lin_let(x, a, b),
    }
}

fn var_in(ns: Ns, x: &Name) -> Term {
    match ns {
        Ns::Cart => Term::Var(x.clone()),
        Ns::Lin => Term::LinVar(x.clone()),
    }
}

fn child_label(t: &Term, i: usize) -> String {
    let kind = match t {
        Term::Let(x, ..) => return format!("let {}{}", x, if i == 0 { " =" } else { " in" }),
        Term::LinLet(x, ..) => return format!("let lin {}{}", x, if i == 0 { " =" } else { " in" }),
        Term::Lam(x, ..) => return format!("\\{}", x),
        Term::LinLam(x, ..) => return format!("\\\\{}", x),
        Term::PrimOp(op, _) => op.as_str(),
        Term::LinOp(op, _, _) => op.as_str(),
        Term::Pair(..) => "pair",
        Term::Fst(_) => "fst",
        Term::Snd(_) => "snd",
        Term::App(..) => "app",
        Term::LinApp(..) => "lapp",
        Term::Plus(..) => "plus",
        Term::CopowerIntro(..) => "copower",
        Term::CopowerElim { .. } => "case",
        Term::Map(..) => "map",
        Term::Foldr(..) => "foldr",
        _ => "?",
    };
    format!("{}.{}", kind, i)
}

impl Simplifier<'_> {
    fn fire(&mut self, rule: &'static str) {
        self.changed = true;
        *self.stats.counts.entry(rule).or_insert(0) += 1;
        if self.trace {
            let path = if self.path.is_empty() {
                "<root>".to_string()
            } else {
                self.path.join(" > ")
            };
            self.stats.trace.push(format!("{} @ {}", rule, path));
        }
    }

    fn rewrite(&mut self, t: &Term) -> Term {
        guard(|| {
            let mut i = 0;
            let mut cur = t.map_children(|c| {
                self.path.push(child_label(t, i));
                i += 1;
                let r = self.rewrite(c);
                self.path.pop();
                r
            });
            // A node is re-examined after each local rewrite; the bound only
            // guards against a rule cycle, the pass loop does the rest.
            for _ in 0..256 {
                match self.step(&cur) {
                    Some((rule, next)) => {
                        self.fire(rule);
                        cur = next;
                    }
                    None => break,
                }
            }
            cur
        })
    }

    fn subst(&mut self, t: &Term, ns: Ns, x: &Name, s: &Term) -> Term {
        subst_ns(t, ns, x, s, self.supply)
    }

    /// Renames binder `x` of `body` when moving `body` under a term in which
    /// `x` is free.
    fn avoid_capture(&mut self, ns: Ns, x: &Name, body: &Term, other: &Term) -> (Name, Term) {
        if occurrences(ns, x, other) == 0 {
            return (x.clone(), body.clone());
        }
        let y = self.supply.fresh(x.as_str());
        let b = self.subst(body, ns, x, &var_in(ns, &y));
        (y, b)
    }

    fn step(&mut self, t: &Term) -> Step {
        self.structural(t)
            .or_else(|| self.local(t))
            .or_else(|| self.inlining(t))
    }

    fn structural(&mut self, t: &Term) -> Step {
        if let Some((ns, x, a, e)) = let_like(t) {
            if let Some((ns2, y, a2, b2)) = let_like(a) {
                // `e` moves into the scope of `y`.
                let (y, b2) = self.avoid_capture(ns2, y, b2, e);
                return Some((
                    "letRotate",
                    mk_let(ns2, y, a2.clone(), mk_let(ns, x.clone(), b2, e.clone())),
                ));
            }
            if ns == Ns::Cart {
                if let Term::Pair(p, q) = a {
                    if used_count(x, e) > 0 {
                        let x1 = self.supply.fresh(x.as_str());
                        let x2 = self.supply.fresh(x.as_str());
                        let e2 = self.subst(
                            e,
                            Ns::Cart,
                            x,
                            &Term::pair(Term::Var(x1.clone()), Term::Var(x2.clone())),
                        );
                        return Some((
                            "letPairSplit",
                            Term::let_(x1, (**p).clone(), Term::let_(x2, (**q).clone(), e2)),
                        ));
                    }
                }
            }
        }
        match t {
            Term::Fst(a) | Term::Snd(a) => {
                if let Some((ns, x, v, e)) = let_like(a) {
                    let first = matches!(t, Term::Fst(_));
                    let inner = if first {
                        Term::fst(e.clone())
                    } else {
                        Term::snd(e.clone())
                    };
                    let rule = if first { "letProj1" } else { "letProj2" };
                    return Some((rule, mk_let(ns, x.clone(), v.clone(), inner)));
                }
            }
            // A linear let replaces the linear variable in scope, so it can
            // only float over a summand that does not use that variable.
            Term::Plus(a, b) => {
                let floats = |ns: Ns, other: &Term| ns == Ns::Cart || free_vars(other).lin.is_empty();
                if let Some((ns, x, v, e)) = let_like(a).filter(|(ns, ..)| floats(*ns, b)) {
                    let (x, e) = self.avoid_capture(ns, x, e, b);
                    return Some(("plusLet1", mk_let(ns, x, v.clone(), Term::plus(e, (**b).clone()))));
                }
                if let Some((ns, x, v, e)) = let_like(b).filter(|(ns, ..)| floats(*ns, a)) {
                    let (x, e) = self.avoid_capture(ns, x, e, a);
                    return Some(("plusLet2", mk_let(ns, x, v.clone(), Term::plus((**a).clone(), e))));
                }
            }
            Term::App(f, a) => {
                if let Term::Lam(x, _, e) = &**f {
                    return Some(("lamAppLet", Term::let_(x.clone(), (**a).clone(), (**e).clone())));
                }
            }
            Term::LinApp(f, a) => {
                if let Term::LinLam(x, _, e) = &**f {
                    return Some(("lamAppLet", Term::lin_let(x.clone(), (**a).clone(), (**e).clone())));
                }
            }
            _ => {}
        }
        None
    }

    fn local(&mut self, t: &Term) -> Step {
        match t {
            Term::Fst(a) | Term::Snd(a) => {
                let first = matches!(t, Term::Fst(_));
                match &**a {
                    Term::Pair(p, q) => {
                        return Some(if first {
                            ("pairProj1", (**p).clone())
                        } else {
                            ("pairProj2", (**q).clone())
                        })
                    }
                    Term::Zero => return Some(("zeroProj", Term::Zero)),
                    _ => {}
                }
            }
            Term::Pair(a, b) => {
                if let (Term::Fst(p), Term::Snd(q)) = (&**a, &**b) {
                    if alpha_eq(p, q) {
                        return Some(("pairEta", (**p).clone()));
                    }
                }
            }
            Term::Plus(a, b) => {
                if matches!(**a, Term::Zero) {
                    return Some(("plusZero1", (**b).clone()));
                }
                if matches!(**b, Term::Zero) {
                    return Some(("plusZero2", (**a).clone()));
                }
                if let (Term::Pair(p, q), Term::Pair(r, s)) = (&**a, &**b) {
                    return Some((
                        "plusPair",
                        Term::pair(
                            Term::plus((**p).clone(), (**r).clone()),
                            Term::plus((**q).clone(), (**s).clone()),
                        ),
                    ));
                }
                if is_lit(a, 0.0) {
                    return Some(("algebra", (**b).clone()));
                }
                if is_lit(b, 0.0) {
                    return Some(("algebra", (**a).clone()));
                }
            }
            Term::App(f, _) | Term::LinApp(f, _) if matches!(**f, Term::Zero) => {
                return Some(("zeroApp", Term::Zero));
            }
            Term::LinApp(_, a) if matches!(**a, Term::Zero) => return Some(("linearZero", Term::Zero)),
            Term::LinOp(op, cs, l) => {
                if matches!(**l, Term::Zero) {
                    return Some(("linearZero", Term::Zero));
                }
                if split_name(op).0 == "lscale" {
                    if is_lit(&cs[0], 0.0) {
                        return Some(("algebra", Term::Zero));
                    }
                    if is_lit(&cs[0], 1.0) {
                        return Some(("algebra", (**l).clone()));
                    }
                }
            }
            Term::Map(_, body, _) if matches!(**body, Term::Zero) => return Some(("mapZero", Term::Zero)),
            Term::PrimOp(..) => return self.prim_rules(t),
            _ => {}
        }
        None
    }

    fn prim_rules(&mut self, t: &Term) -> Step {
        let (base, args) = prim_base(t)?;
        match (base, args) {
            ("mul", [a, b]) => {
                if matches!(a, Term::Zero) || matches!(b, Term::Zero) {
                    return Some(("algebra", Term::Zero));
                }
                if is_lit(a, 0.0) {
                    return Some(("algebra", a.clone()));
                }
                if is_lit(b, 0.0) {
                    return Some(("algebra", b.clone()));
                }
                if is_lit(a, 1.0) {
                    return Some(("algebra", b.clone()));
                }
                if is_lit(b, 1.0) {
                    return Some(("algebra", a.clone()));
                }
            }
            ("add", [a, b]) => {
                if matches!(a, Term::Zero) || is_lit(a, 0.0) {
                    return Some(("algebra", b.clone()));
                }
                if matches!(b, Term::Zero) || is_lit(b, 0.0) {
                    return Some(("algebra", a.clone()));
                }
            }
            ("list_map", [f, a]) => {
                if let Term::Lam(x, ty, body) = f {
                    if let Term::Pair(b, c) = &**body {
                        let (bind, arr) = if is_cheap(a) {
                            (None, a.clone())
                        } else {
                            let a2 = self.supply.fresh("a");
                            (Some(a2.clone()), Term::Var(a2))
                        };
                        let m1 = Term::prim(
                            "list_map",
                            vec![Term::lam(x.clone(), ty.clone(), (**b).clone()), arr.clone()],
                        );
                        let m2 = Term::prim("list_map", vec![Term::lam(x.clone(), ty.clone(), (**c).clone()), arr]);
                        let zipped = Term::prim("list_zip", vec![m1, m2]);
                        let out = match bind {
                            Some(a2) => Term::let_(a2, a.clone(), zipped),
                            None => zipped,
                        };
                        return Some(("mapPairSplit", out));
                    }
                }
            }
            ("list_sum" | "from_list", [arg]) => {
                if let Some(("list_map", [Term::Lam(_, _, body), _])) = prim_base(arg) {
                    if matches!(**body, Term::Zero) {
                        return Some(("mapZero", Term::prim(&op_name(t), vec![Term::Zero])));
                    }
                }
                if base == "list_sum" {
                    return self.sum_rules(arg);
                }
                if matches!(arg, Term::Zero) {
                    return Some(("sumZero", Term::Zero));
                }
            }
            _ => {}
        }
        None
    }

    fn sum_rules(&mut self, arg: &Term) -> Step {
        if matches!(arg, Term::Zero) {
            return Some(("sumZero", Term::Zero));
        }
        if let Term::Let(x, a, e) = arg {
            return Some((
                "sumLet",
                Term::let_(x.clone(), (**a).clone(), Term::prim("list_sum", vec![(**e).clone()])),
            ));
        }
        match prim_base(arg) {
            Some(("list_zip", [a, b])) if same_length(a, b) => Some((
                "sumZip",
                Term::pair(
                    Term::prim("list_sum", vec![a.clone()]),
                    Term::prim("list_sum", vec![b.clone()]),
                ),
            )),
            Some(("singleton", [a])) => Some(("sumSingleton", a.clone())),
            Some(("list_map", [Term::Lam(x, ty, body), e])) => {
                let (sb, sargs) = prim_base(body)?;
                if sb != "singleton" {
                    return None;
                }
                let b = &sargs[0];
                if matches!(b, Term::Var(y) if y == x) {
                    Some(("sumSingleton", e.clone()))
                } else {
                    Some((
                        "sumSingleton",
                        Term::prim("list_map", vec![Term::lam(x.clone(), ty.clone(), b.clone()), e.clone()]),
                    ))
                }
            }
            _ => None,
        }
    }

    fn inlining(&mut self, t: &Term) -> Step {
        let (ns, x, a, e) = let_like(t)?;
        let n = occurrences(ns, x, e);
        let inline = n == 0
            || is_cheap(a)
            || (n == 1 && (is_value(a) || !repeated_go(ns, x, e, false)))
            || (self.inline_lambdas && is_value(a));
        if inline {
            return Some(("letInline", self.subst(e, ns, x, a)));
        }
        if ns == Ns::Cart {
            if let Term::Lam(y, ty, body) = a {
                if let Term::Pair(p, q) = &**body {
                    if !(is_split_call(p, y) && is_split_call(q, y)) {
                        return Some(("letLamPairSplit", self.lam_pair_split(x, y, ty, p, q, e)));
                    }
                }
            }
        }
        None
    }

    fn lam_pair_split(&mut self, f: &Name, y: &Name, ty: &Ty, p: &Term, q: &Term, e: &Term) -> Term {
        let f1 = self.supply.fresh(f.as_str());
        let f2 = self.supply.fresh(f.as_str());
        let rebuilt = Term::lam(
            y.clone(),
            ty.clone(),
            Term::pair(
                Term::app(Term::Var(f1.clone()), Term::Var(y.clone())),
                Term::app(Term::Var(f2.clone()), Term::Var(y.clone())),
            ),
        );
        let e2 = self.subst(e, Ns::Cart, f, &rebuilt);
        Term::let_(
            f1,
            Term::lam(y.clone(), ty.clone(), p.clone()),
            Term::let_(f2, Term::lam(y.clone(), ty.clone(), q.clone()), e2),
        )
    }
}

fn op_name(t: &Term) -> String {
    match t {
        Term::PrimOp(op, _) => op.clone(),
        _ => unreachable!(),
    }
}

/// `g y` for a variable `g`: the shape `letLamPairSplit` itself produces.
fn is_split_call(t: &Term, y: &Name) -> bool {
    matches!(t, Term::App(g, a) if matches!(**g, Term::Var(_)) && matches!(&**a, Term::Var(z) if z == y))
}
