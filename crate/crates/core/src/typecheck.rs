// SPDX-License-Identifier: Apache-2.0

//! Both typing judgments, `Γ ⊢ t : τ` and `Γ; v:σ ⊢ t : τ`, for the source
//! fragment, the idealised linear target and the applied target.
//!
//! Checking is syntax-directed synthesis. `zero` synthesizes the wildcard
//! type `?`, which is absorbed by [`Ty::join`] wherever the surrounding
//! term fixes the type.

use std::fmt;

use crate::lang::ctx::Ctx;
use crate::lang::name::Name;
use crate::lang::term::Term;
use crate::lang::ty::{Fragment, Ty};
use crate::registry::{self, is_op_name, lookup_lin, registry, split_name, SOURCE_OPS, TARGET_OPS};
use crate::stack::guard;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Source,
    Idealised,
    Applied,
}

impl Mode {
    fn fragment(self) -> Fragment {
        match self {
            Mode::Source => Fragment::Source,
            Mode::Idealised => Fragment::Idealised,
            Mode::Applied => Fragment::Applied,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct TypeError {
    /// Outermost first, e.g. `["let y", "rhs", "mul arg 2"]`.
    pub path: Vec<String>,
    pub message: String,
    pub expected: Option<Ty>,
    pub found: Option<Ty>,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type error")?;
        if !self.path.is_empty() {
            write!(f, " at {}", self.path.join(" > "))?;
        }
        write!(f, ": {}", self.message)?;
        match (&self.expected, &self.found) {
            (Some(e), Some(g)) => write!(f, " (expected {}, found {})", e, g),
            (Some(e), None) => write!(f, " (expected {})", e),
            (None, Some(g)) => write!(f, " (found {})", g),
            (None, None) => Ok(()),
        }
    }
}

type Res<T> = Result<T, TypeError>;

/// `Γ ⊢ t : τ` in the idealised target (which contains the source language).
pub fn check_cartesian(ctx: &Ctx, t: &Term) -> Res<Ty> {
    check_in(Mode::Idealised, ctx, t)
}

/// `Γ; v:σ ⊢ t : τ` in the idealised target.
pub fn check_linear(ctx: &Ctx, t: &Term) -> Res<Ty> {
    let mut c = Checker::new(Mode::Idealised, ctx)?;
    let lin = match &ctx.lin {
        Some(l) => l.clone(),
        None => return Err(c.err("check_linear needs a linear variable in the context")),
    };
    c.lin(&lin, t)
}

/// `Γ ⊢ t : τ` in the applied (erased) target.
pub fn check_applied(ctx: &Ctx, t: &Term) -> Res<Ty> {
    check_in(Mode::Applied, ctx, t)
}

/// `Γ ⊢ t : τ` restricted to the source fragment.
pub fn check_source(ctx: &Ctx, t: &Term) -> Res<Ty> {
    check_in(Mode::Source, ctx, t)
}

pub fn check_in(mode: Mode, ctx: &Ctx, t: &Term) -> Res<Ty> {
    let mut c = Checker::new(mode, ctx)?;
    if ctx.lin.is_some() {
        return Err(c.err("a Cartesian judgment has no linear variable"));
    }
    c.cart(t)
}

/// Checks a source program and rewrites `+` at real types to `add`.
pub fn elaborate_source(ctx: &Ctx, t: &Term) -> Res<(Term, Ty)> {
    let mut c = Checker::new(Mode::Source, ctx)?;
    let t = c.elaborate(t)?;
    let ty = c.cart(&t)?;
    Ok((t, ty))
}

/// Result shape of an op some of whose arguments are a shapeless `zero`.
fn zero_arg_shape(base: &str, param: Option<usize>, shapes: &[Option<usize>]) -> Option<usize> {
    match base {
        "add" | "sub" | "mul" | "neg" | "sin" | "cos" | "exp" | "sigmoid" => shapes.iter().flatten().next().copied(),
        "sum" => Some(1),
        "replicate" | "matvec" => param,
        _ => None,
    }
}

struct Checker {
    mode: Mode,
    env: Vec<(Name, Ty)>,
    path: Vec<String>,
}

fn is_real(t: &Ty) -> Option<usize> {
    match t {
        Ty::Real(n) => Some(*n),
        _ => None,
    }
}

impl Checker {
    fn new(mode: Mode, ctx: &Ctx) -> Res<Self> {
        let c = Checker {
            mode,
            env: ctx.cart.clone(),
            path: Vec::new(),
        };
        if let Err(e) = ctx.validate() {
            return Err(c.err(&e.to_string()));
        }
        for (x, t) in &ctx.cart {
            if t.validate(mode.fragment()).is_err() || !c.is_cart_ty(t) {
                return Err(c.mismatch(
                    &format!("context variable {} has a non-Cartesian or ill-formed type", x),
                    None,
                    Some(t),
                ));
            }
        }
        if let Some((v, t)) = &ctx.lin {
            if t.validate(mode.fragment()).is_err() || !t.is_linear() {
                return Err(c.mismatch(&format!("linear variable {} needs a linear type", v), None, Some(t)));
            }
        }
        Ok(c)
    }

    fn err(&self, msg: &str) -> TypeError {
        TypeError {
            path: self.path.clone(),
            message: msg.to_string(),
            expected: None,
            found: None,
        }
    }

    fn mismatch(&self, msg: &str, expected: Option<&Ty>, found: Option<&Ty>) -> TypeError {
        TypeError {
            path: self.path.clone(),
            message: msg.to_string(),
            expected: expected.cloned(),
            found: found.cloned(),
        }
    }

    fn at<R>(&mut self, label: impl Into<String>, f: impl FnOnce(&mut Self) -> Res<R>) -> Res<R> {
        self.path.push(label.into());
        let r = f(self);
        if r.is_ok() {
            self.path.pop();
        }
        r
    }

    fn under<R>(&mut self, x: &Name, ty: Ty, f: impl FnOnce(&mut Self) -> Res<R>) -> Res<R> {
        self.env.push((x.clone(), ty));
        let r = f(self);
        self.env.pop();
        r
    }

    fn lookup(&self, x: &Name) -> Res<Ty> {
        self.env
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| self.err(&format!("unbound identifier {}", x)))
    }

    /// Type equality for this mode; applied mode compares representations.
    fn unify(&self, expected: &Ty, found: &Ty, what: &str) -> Res<Ty> {
        let j = if self.mode == Mode::Applied {
            expected.applied_repr().join(&found.applied_repr())
        } else {
            expected.join(found)
        };
        j.ok_or_else(|| self.mismatch(what, Some(expected), Some(found)))
    }

    fn check_ann(&self, ty: &Ty) -> Res<()> {
        ty.validate(self.mode.fragment())
            .map_err(|e| self.mismatch(&e.reason, None, Some(ty)))?;
        // Erasure may annotate a binder whose type only a `zero` determined.
        let unknown_ok = self.mode == Mode::Applied && *ty == Ty::Unknown;
        if !self.is_cart_ty(ty) && !unknown_ok {
            return Err(self.mismatch("lambda binder must have a Cartesian type", None, Some(ty)));
        }
        Ok(())
    }

    /// Cartesian in this mode: applied copowers are lists, hence Cartesian.
    fn is_cart_ty(&self, t: &Ty) -> bool {
        if self.mode == Mode::Applied {
            t.applied_repr().is_cartesian()
        } else {
            t.is_cartesian()
        }
    }

    fn real(&mut self, t: &Term, label: &str) -> Res<usize> {
        let ty = self.at(label, |c| c.cart(t))?;
        match ty {
            Ty::Real(n) => Ok(n),
            other => Err(self.mismatch(&format!("{} must be a real array", label), None, Some(&other))),
        }
    }

    fn as_fun(&self, t: &Ty, what: &str) -> Res<(Ty, Ty)> {
        match t {
            Ty::Fun(a, b) => Ok(((**a).clone(), (**b).clone())),
            Ty::LinFun(a, b) if self.mode == Mode::Applied => Ok(((**a).clone(), (**b).clone())),
            Ty::Unknown => Ok((Ty::Unknown, Ty::Unknown)),
            other => Err(self.mismatch(&format!("{} must be a function", what), None, Some(other))),
        }
    }

    fn as_lin_fun(&self, t: &Ty, what: &str) -> Res<(Ty, Ty)> {
        match t {
            Ty::LinFun(a, b) => Ok(((**a).clone(), (**b).clone())),
            Ty::Fun(a, b) if self.mode == Mode::Applied => Ok(((**a).clone(), (**b).clone())),
            Ty::Unknown => Ok((Ty::Unknown, Ty::Unknown)),
            other => Err(self.mismatch(&format!("{} must be a linear function", what), None, Some(other))),
        }
    }

    fn as_prod(&self, t: &Ty, what: &str) -> Res<(Ty, Ty)> {
        match t {
            Ty::Prod(a, b) | Ty::LinProd(a, b) => Ok(((**a).clone(), (**b).clone())),
            Ty::Unknown => Ok((Ty::Unknown, Ty::Unknown)),
            other => Err(self.mismatch(&format!("{} must be a pair", what), None, Some(other))),
        }
    }

    fn as_list(&self, t: &Ty, what: &str) -> Res<Ty> {
        match t {
            Ty::List(a) => Ok((**a).clone()),
            Ty::Copower(a, b) if self.mode == Mode::Applied => Ok(Ty::prod((**a).clone(), (**b).clone())),
            Ty::Unknown => Ok(Ty::Unknown),
            other => Err(self.mismatch(&format!("{} must be a list", what), None, Some(other))),
        }
    }

    // ---- Cartesian judgment ----

    fn cart(&mut self, t: &Term) -> Res<Ty> {
        guard(|| self.cart_inner(t))
    }

    fn cart_inner(&mut self, t: &Term) -> Res<Ty> {
        let mode = self.mode;
        match t {
            Term::Var(x) => self.lookup(x),
            Term::RealLit(xs) => {
                if xs.is_empty() {
                    Err(self.err("empty real literal"))
                } else {
                    Ok(Ty::Real(xs.len()))
                }
            }
            Term::UnitVal => Ok(Ty::Unit),
            Term::Let(x, a, b) => {
                let ta = self.at(format!("let {}", x), |c| c.cart(a))?;
                if !self.is_cart_ty(&ta) && ta != Ty::Unknown {
                    return Err(self.mismatch("let-bound value must be Cartesian", None, Some(&ta)));
                }
                self.under(x, ta, |c| c.cart(b))
            }
            Term::Pair(a, b) => {
                let ta = self.at("pair fst", |c| c.cart(a))?;
                let tb = self.at("pair snd", |c| c.cart(b))?;
                Ok(Ty::prod(ta, tb))
            }
            Term::Fst(a) => {
                let ta = self.at("fst", |c| c.cart(a))?;
                Ok(self.as_prod(&ta, "argument of fst")?.0)
            }
            Term::Snd(a) => {
                let ta = self.at("snd", |c| c.cart(a))?;
                Ok(self.as_prod(&ta, "argument of snd")?.1)
            }
            Term::Lam(x, ty, b) => {
                self.check_ann(ty)?;
                let tb = self.under(x, ty.clone(), |c| c.at(format!("\\{}", x), |c| c.cart(b)))?;
                Ok(Ty::fun(ty.clone(), tb))
            }
            Term::App(f, a) => {
                let tf = self.at("function", |c| c.cart(f))?;
                let ta = self.at("argument", |c| c.cart(a))?;
                let (dom, cod) = self.as_fun(&tf, "applied term")?;
                self.unify(&dom, &ta, "argument type mismatch")?;
                Ok(cod)
            }
            Term::Map(x, body, arr) => {
                let n = self.real(arr, "map array")?;
                let tb = self.under(x, Ty::Real(1), |c| c.at("map body", |c| c.cart(body)))?;
                self.unify(&Ty::Real(1), &tb, "map body must be a scalar")?;
                Ok(Ty::Real(n))
            }
            Term::Foldr(f, i, arr) => {
                let tf = self.at("foldr function", |c| c.cart(f))?;
                let ti = self.at("foldr init", |c| c.cart(i))?;
                self.real(arr, "foldr array")?;
                let (dom, cod) = self.as_fun(&tf, "foldr function")?;
                let acc = self.unify(&ti, &cod, "foldr function result must match init")?;
                self.unify(&Ty::prod(Ty::Real(1), acc.clone()), &dom, "foldr function domain")?;
                Ok(acc)
            }
            Term::PrimOp(op, args) => self.prim(op, args),
            Term::LinLam(v, ty, b) => {
                if mode != Mode::Idealised {
                    return Err(self.err("linear lambda outside the idealised target"));
                }
                ty.validate(Fragment::Idealised)
                    .map_err(|e| self.mismatch(&e.reason, None, Some(ty)))?;
                if !ty.is_linear() {
                    return Err(self.mismatch("linear lambda binder needs a linear type", None, Some(ty)));
                }
                let tb = self.at(format!("\\\\{}", v), |c| c.lin(&(v.clone(), ty.clone()), b))?;
                Ok(Ty::lin_fun(ty.clone(), tb))
            }
            Term::Zero if mode == Mode::Applied => Ok(Ty::Unknown),
            Term::Plus(a, b) if mode == Mode::Applied => {
                let ta = self.at("plus left", |c| c.cart(a))?;
                let tb = self.at("plus right", |c| c.cart(b))?;
                self.unify(&ta, &tb, "plus operands differ")
            }
            Term::Plus(..) if mode == Mode::Source => {
                Err(self.err("`+` in a source program must be elaborated to add"))
            }
            Term::Zero | Term::Plus(..) => Err(self.err("zero and plus only occur in linear positions")),
            Term::LinVar(v) => Err(self.err(&format!("linear variable {} used in a Cartesian position", v))),
            Term::LinLet(..)
            | Term::LinOp(..)
            | Term::LinApp(..)
            | Term::CopowerIntro(..)
            | Term::CopowerElim { .. } => Err(self.err("linear construct in a Cartesian position")),
        }
    }

    fn prim(&mut self, op: &str, args: &[Term]) -> Res<Ty> {
        let (base, param) = split_name(op);
        let mode = self.mode;
        if is_op_name(base) {
            if mode == Mode::Source && !SOURCE_OPS.contains(&base) {
                return Err(self.err(&format!("{} is a target-only operation", op)));
            }
            debug_assert!(SOURCE_OPS.contains(&base) || TARGET_OPS.contains(&base));
            let mut shapes = Vec::new();
            for (i, a) in args.iter().enumerate() {
                let label = format!("{} arg {}", op, i + 1);
                let ty = self.at(label.clone(), |c| c.cart(a))?;
                match ty {
                    Ty::Real(n) => shapes.push(Some(n)),
                    // Applied code keeps symbolic zeros as op arguments.
                    Ty::Unknown if mode == Mode::Applied => shapes.push(None),
                    other => return Err(self.mismatch(&format!("{} must be a real array", label), None, Some(&other))),
                }
            }
            if shapes.iter().any(|s| s.is_none()) {
                return Ok(zero_arg_shape(base, param, &shapes).map_or(Ty::Unknown, Ty::Real));
            }
            let shapes: Vec<usize> = shapes.into_iter().flatten().collect();
            let sig = registry().lookup(op, &shapes).map_err(|e| self.err(&e.to_string()))?;
            return Ok(Ty::Real(sig.result_shape));
        }
        if mode == Mode::Source || !registry::BUILTINS.contains(&base) {
            return Err(self.err(&format!("unknown operation {}", op)));
        }
        let arity = match base {
            "lid" | "lfst" | "lsnd" => 0,
            "singleton" | "list_sum" | "to_list" | "from_list" | "tail" | "init" | "last" | "lswap" | "leval"
            | "lsing" | "lcopowfold" => 1,
            "list_map" | "list_zip" | "lcomp" | "lpair" => 2,
            _ => 3,
        };
        if args.len() != arity {
            return Err(self.err(&format!("{} takes {} arguments, got {}", base, arity, args.len())));
        }
        let idealised_only = matches!(base, "dmap" | "dmapT" | "dfoldr" | "dfoldrT");
        if idealised_only && mode != Mode::Idealised {
            return Err(self.err(&format!("{} only exists in the idealised target", base)));
        }
        if !idealised_only && mode != Mode::Applied {
            return Err(self.err(&format!("{} only exists in the applied target", base)));
        }
        let mut tys = Vec::new();
        for (i, a) in args.iter().enumerate() {
            tys.push(self.at(format!("{} arg {}", base, i + 1), |c| c.cart(a))?);
        }
        let lr1 = Ty::LinReal(1);
        match base {
            "dmap" => {
                let n = is_real(&tys[1]).ok_or_else(|| self.mismatch("dmap array", None, Some(&tys[1])))?;
                let (sigma, out) = self.as_lin_fun(&tys[2], "dmap tangent")?;
                self.unify(&Ty::LinReal(n), &out, "dmap tangent codomain")?;
                let (d, c) = self.as_fun(&tys[0], "dmap body")?;
                self.unify(&Ty::Real(1), &d, "dmap body domain")?;
                self.unify(
                    &Ty::lin_fun(Ty::lin_prod(sigma.clone(), lr1.clone()), lr1),
                    &c,
                    "dmap body derivative",
                )?;
                Ok(Ty::lin_fun(sigma, Ty::LinReal(n)))
            }
            "dmapT" => {
                let n = is_real(&tys[1]).ok_or_else(|| self.mismatch("dmapT array", None, Some(&tys[1])))?;
                let (inp, sigma) = self.as_lin_fun(&tys[2], "dmapT cotangent")?;
                self.unify(&Ty::LinReal(n), &inp, "dmapT cotangent domain")?;
                let (d, c) = self.as_fun(&tys[0], "dmapT body")?;
                self.unify(&Ty::Real(1), &d, "dmapT body domain")?;
                self.unify(
                    &Ty::lin_fun(lr1.clone(), Ty::lin_prod(sigma.clone(), lr1)),
                    &c,
                    "dmapT body derivative",
                )?;
                Ok(Ty::lin_fun(Ty::LinReal(n), sigma))
            }
            "dfoldr" | "dfoldrT" => {
                let n = is_real(&tys[2]).ok_or_else(|| self.mismatch("fold array", None, Some(&tys[2])))?;
                let (dom, cod) = self.as_fun(&tys[0], "fold function")?;
                let (acc, deriv) = self.as_prod(&cod, "fold function result")?;
                let acc = self.unify(&tys[1], &acc, "fold init")?;
                self.unify(&Ty::prod(Ty::Real(1), acc.clone()), &dom, "fold function domain")?;
                let (a, b) = self.as_lin_fun(&deriv, "fold function derivative")?;
                if base == "dfoldr" {
                    let (_, tau2) = self.as_prod(&a, "fold tangent input")?;
                    let tau2 = self.unify(&b, &tau2, "fold tangent")?;
                    let input = Ty::lin_prod(Ty::power(dom, tau2.clone()), Ty::lin_prod(tau2.clone(), Ty::LinReal(n)));
                    Ok(Ty::lin_fun(input, tau2))
                } else {
                    let (_, tau2) = self.as_prod(&b, "fold cotangent output")?;
                    let tau2 = self.unify(&a, &tau2, "fold cotangent")?;
                    let out = Ty::lin_prod(
                        Ty::copower(dom, tau2.clone()),
                        Ty::lin_prod(tau2.clone(), Ty::LinReal(n)),
                    );
                    Ok(Ty::lin_fun(tau2, out))
                }
            }
            "singleton" => Ok(Ty::list(tys[0].clone())),
            "list_map" => {
                let (a, b) = self.as_fun(&tys[0], "list_map function")?;
                let el = self.as_list(&tys[1], "list_map list")?;
                self.unify(&a, &el, "list_map element type")?;
                Ok(Ty::list(b))
            }
            "list_zip" => {
                let a = self.as_list(&tys[0], "list_zip first list")?;
                let b = self.as_list(&tys[1], "list_zip second list")?;
                Ok(Ty::list(Ty::prod(a, b)))
            }
            "list_sum" => self.as_list(&tys[0], "list_sum argument"),
            "list_foldr" | "scanr" | "scanl" => {
                let (dom, cod) = self.as_fun(&tys[0], &format!("{} function", base))?;
                let el = self.as_list(&tys[2], &format!("{} list", base))?;
                let acc = self.unify(&tys[1], &cod, "fold result must match init")?;
                let expected_dom = if base == "scanl" {
                    Ty::prod(acc.clone(), el)
                } else {
                    Ty::prod(el, acc.clone())
                };
                self.unify(&expected_dom, &dom, "fold function domain")?;
                Ok(if base == "list_foldr" { acc } else { Ty::list(acc) })
            }
            "to_list" => {
                let n = param.ok_or_else(|| self.err("to_list needs a shape parameter"))?;
                self.unify(&Ty::Real(n), &tys[0], "to_list argument")?;
                Ok(Ty::list(Ty::Real(1)))
            }
            "from_list" => {
                let n = param.ok_or_else(|| self.err("from_list needs a shape parameter"))?;
                let el = self.as_list(&tys[0], "from_list argument")?;
                self.unify(&Ty::Real(1), &el, "from_list element")?;
                Ok(Ty::Real(n))
            }
            "tail" | "init" => Ok(Ty::list(self.as_list(&tys[0], base)?)),
            "last" => self.as_list(&tys[0], "last"),
            "vzipwith" => {
                let n = is_real(&tys[1]).ok_or_else(|| self.mismatch("vzipwith array", None, Some(&tys[1])))?;
                self.unify(&Ty::Real(n), &tys[2], "vzipwith second array")?;
                let r1 = Ty::Real(1);
                self.unify(
                    &Ty::fun(r1.clone(), Ty::fun(r1.clone(), r1)),
                    &tys[0],
                    "vzipwith function",
                )?;
                Ok(Ty::Real(n))
            }
            "lid" => Ok(Ty::lin_fun(Ty::Unknown, Ty::Unknown)),
            "lfst" => Ok(Ty::lin_fun(Ty::prod(Ty::Unknown, Ty::Unknown), Ty::Unknown)),
            "lsnd" => Ok(Ty::lin_fun(Ty::prod(Ty::Unknown, Ty::Unknown), Ty::Unknown)),
            "lcomp" => {
                let (a, b) = self.as_lin_fun(&tys[0], "lcomp first")?;
                let (b2, c) = self.as_lin_fun(&tys[1], "lcomp second")?;
                self.unify(&b, &b2, "lcomp middle type")?;
                Ok(Ty::lin_fun(a, c))
            }
            "lswap" => {
                let (a, l) = self.as_fun(&tys[0], "lswap argument")?;
                let (b, c) = self.as_lin_fun(&l, "lswap result")?;
                Ok(Ty::lin_fun(b, Ty::fun(a, c)))
            }
            "leval" => Ok(Ty::lin_fun(Ty::fun(tys[0].clone(), Ty::Unknown), Ty::Unknown)),
            "lsing" => Ok(Ty::lin_fun(Ty::Unknown, Ty::copower(tys[0].clone(), Ty::Unknown))),
            "lcopowfold" => {
                let (a, l) = self.as_fun(&tys[0], "lcopowfold argument")?;
                let (b, c) = self.as_lin_fun(&l, "lcopowfold result")?;
                Ok(Ty::lin_fun(Ty::copower(a, b), c))
            }
            "lpair" => {
                let (a, b) = self.as_lin_fun(&tys[0], "lpair first")?;
                let (a2, c) = self.as_lin_fun(&tys[1], "lpair second")?;
                let a = self.unify(&a, &a2, "lpair domains")?;
                Ok(Ty::lin_fun(a, Ty::prod(b, c)))
            }
            _ => Err(self.err(&format!("unknown builtin {}", base))),
        }
    }

    // ---- linear judgment ----

    fn lin(&mut self, lv: &(Name, Ty), t: &Term) -> Res<Ty> {
        guard(|| self.lin_inner(lv, t))
    }

    fn lin_inner(&mut self, lv: &(Name, Ty), t: &Term) -> Res<Ty> {
        match t {
            Term::LinVar(w) => {
                if *w == lv.0 {
                    Ok(lv.1.clone())
                } else {
                    Err(self.err(&format!(
                        "linear variable {} is not in scope (the linear variable is {})",
                        w, lv.0
                    )))
                }
            }
            Term::Zero => Ok(Ty::Unknown),
            Term::UnitVal => Ok(Ty::LinUnit),
            Term::Plus(a, b) => {
                let ta = self.at("plus left", |c| c.lin(lv, a))?;
                let tb = self.at("plus right", |c| c.lin(lv, b))?;
                self.unify(&ta, &tb, "plus operands differ")
            }
            Term::Pair(a, b) => {
                let ta = self.at("pair fst", |c| c.lin(lv, a))?;
                let tb = self.at("pair snd", |c| c.lin(lv, b))?;
                Ok(Ty::lin_prod(ta, tb))
            }
            Term::Fst(a) => {
                let ta = self.at("fst", |c| c.lin(lv, a))?;
                Ok(self.as_prod(&ta, "argument of fst")?.0)
            }
            Term::Snd(a) => {
                let ta = self.at("snd", |c| c.lin(lv, a))?;
                Ok(self.as_prod(&ta, "argument of snd")?.1)
            }
            Term::LinLet(w, a, b) => {
                let ta = self.at(format!("let lin {}", w), |c| c.lin(lv, a))?;
                self.lin(&(w.clone(), ta), b)
            }
            Term::Let(x, a, b) => {
                let ta = self.at(format!("let {}", x), |c| c.cart(a))?;
                self.under(x, ta, |c| c.lin(lv, b))
            }
            Term::LinOp(op, cargs, l) => {
                let mut shapes = Vec::new();
                for (i, a) in cargs.iter().enumerate() {
                    shapes.push(self.real(a, &format!("{} arg {}", op, i + 1))?);
                }
                let tl = self.at(format!("{} linear arg", op), |c| c.lin(lv, l))?;
                let k = match tl {
                    Ty::LinReal(k) => k,
                    Ty::Unknown => {
                        // `lop(..; zero)`: only shape-preserving ops can infer a shape.
                        match split_name(op).0 {
                            "lscale" => shapes[0],
                            _ => return Ok(Ty::Unknown),
                        }
                    }
                    other => {
                        return Err(self.mismatch("linear op argument must be a linear real array", None, Some(&other)))
                    }
                };
                let sig = lookup_lin(op, &shapes, k).map_err(|e| self.err(&e.to_string()))?;
                Ok(Ty::LinReal(sig.result_shape))
            }
            Term::Lam(x, ty, b) => {
                self.check_ann(ty)?;
                let tb = self.under(x, ty.clone(), |c| c.at(format!("\\{}", x), |c| c.lin(lv, b)))?;
                Ok(Ty::power(ty.clone(), tb))
            }
            Term::App(f, a) => {
                let tf = self.at("function", |c| c.lin(lv, f))?;
                let ta = self.at("argument", |c| c.cart(a))?;
                match tf {
                    Ty::Power(d, r) => {
                        self.unify(&d, &ta, "argument type mismatch")?;
                        Ok(*r)
                    }
                    Ty::Unknown => Ok(Ty::Unknown),
                    other => Err(self.mismatch("applied linear term must have a power type", None, Some(&other))),
                }
            }
            Term::LinApp(f, a) => {
                let tf = self.at("linear function", |c| c.cart(f))?;
                let ta = self.at("linear argument", |c| c.lin(lv, a))?;
                let (d, r) = self.as_lin_fun(&tf, "linearly applied term")?;
                self.unify(&d, &ta, "linear argument type mismatch")?;
                Ok(r)
            }
            Term::CopowerIntro(a, b) => {
                let ta = self.at("copower primal", |c| c.cart(a))?;
                let tb = self.at("copower linear part", |c| c.lin(lv, b))?;
                Ok(Ty::copower(ta, tb))
            }
            Term::CopowerElim {
                scrutinee,
                cart,
                lin,
                body,
            } => {
                let ts = self.at("copower scrutinee", |c| c.lin(lv, scrutinee))?;
                let (a, b) = match ts {
                    Ty::Copower(a, b) => (*a, *b),
                    Ty::Unknown => (Ty::Unknown, Ty::Unknown),
                    other => return Err(self.mismatch("scrutinee must be a copower", None, Some(&other))),
                };
                self.under(cart, a, |c| c.at("copower body", |c| c.lin(&(lin.clone(), b), body)))
            }
            Term::Var(x) => Err(self.err(&format!(
                "Cartesian variable {} used where a linear term is required",
                x
            ))),
            _ => Err(self.err("Cartesian construct in a linear position")),
        }
    }

    // ---- source elaboration ----

    fn elaborate(&mut self, t: &Term) -> Res<Term> {
        guard(|| match t {
            Term::Plus(a, b) => {
                let a = self.elaborate(a)?;
                let b = self.elaborate(b)?;
                let ta = self.cart(&a)?;
                match ta {
                    Ty::Real(_) => Ok(Term::prim("add", vec![a, b])),
                    other => Err(self.mismatch("`+` in source programs adds real arrays", None, Some(&other))),
                }
            }
            Term::Let(x, a, b) => {
                let a = self.elaborate(a)?;
                let ta = self.cart(&a)?;
                let b = self.under(x, ta, |c| c.elaborate(b))?;
                Ok(Term::let_(x.clone(), a, b))
            }
            Term::Lam(x, ty, b) => {
                let b = self.under(x, ty.clone(), |c| c.elaborate(b))?;
                Ok(Term::lam(x.clone(), ty.clone(), b))
            }
            Term::Map(x, b, arr) => {
                let b = self.under(x, Ty::Real(1), |c| c.elaborate(b))?;
                Ok(Term::map(x.clone(), b, self.elaborate(arr)?))
            }
            _ => {
                let mut err = None;
                let out = t.map_children(|c| match self.elaborate(c) {
                    Ok(c) => c,
                    Err(e) => {
                        err.get_or_insert(e);
                        c.clone()
                    }
                });
                match err {
                    Some(e) => Err(e),
                    None => Ok(out),
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::{parse_program, parse_term, ParseOptions};
    use crate::lang::term::var;

    fn ok(ctx: &Ctx, src: &str) -> Ty {
        check_cartesian(ctx, &parse_term(src).unwrap()).unwrap()
    }

    #[test]
    fn lambda_square() {
        assert_eq!(ok(&Ctx::new(), "\\x:R 1. mul(x, x)"), Ty::fun(Ty::Real(1), Ty::Real(1)));
    }

    #[test]
    fn fig1a_type() {
        let p = parse_program(
            "x:R 1 |- let y = 2.0 * x; z = x * y; w = cos(z); v = <y, <z, w>> in v",
            &ParseOptions::default(),
        )
        .unwrap();
        let r = Ty::Real(1);
        assert_eq!(
            check_source(&p.ctx, &p.term).unwrap(),
            Ty::prod(r.clone(), Ty::prod(r.clone(), r))
        );
    }

    #[test]
    fn unbound_variable() {
        let e = check_cartesian(&Ctx::new(), &Term::fst(var("x"))).unwrap_err();
        assert!(e.message.contains("unbound"));
    }

    #[test]
    fn linear_rules() {
        let ctx = Ctx::from_cart([("x", Ty::Real(1))]).with_lin("v", Ty::lin_prod(Ty::LinReal(1), Ty::LinReal(2)));
        assert_eq!(check_linear(&ctx, &parse_term_lin("zero")).unwrap(), Ty::Unknown);
        assert_eq!(check_linear(&ctx, &parse_term_lin("fst v")).unwrap(), Ty::LinReal(1));
        let ctx1 = Ctx::from_cart([("x", Ty::Real(1))]).with_lin("v", Ty::lin_prod(Ty::LinReal(1), Ty::LinReal(1)));
        let d = parse_term_lin("lscale(x; snd v) + lscale(x; fst v)");
        assert_eq!(check_linear(&ctx1, &d).unwrap(), Ty::LinReal(1));
    }

    fn parse_term_lin(src: &str) -> Term {
        let p = parse_program(&format!("x:R 1; v:lin R 1 |- {}", src), &ParseOptions::default()).unwrap();
        p.term
    }

    #[test]
    fn copower_elim_swaps_the_linear_variable() {
        let ctx = Ctx::new().with_lin("c", Ty::copower(Ty::Real(1), Ty::LinReal(1)));
        let t = parse_program(
            "; c:(R 1) ! (lin R 1) |- let a ! w = c in lscale(a; w)",
            &ParseOptions::default(),
        )
        .unwrap()
        .term;
        assert_eq!(check_linear(&ctx, &t).unwrap(), Ty::LinReal(1));
        let bad = parse_program("; c:(R 1) ! (lin R 1) |- let a ! w = c in c", &ParseOptions::default())
            .unwrap()
            .term;
        assert!(check_linear(&ctx, &bad).is_err());
    }

    #[test]
    fn lambda_cannot_bind_linear() {
        let ctx = Ctx::new();
        assert!(check_cartesian(&ctx, &parse_term("\\x:lin R 1. x").unwrap()).is_err());
    }

    #[test]
    fn applied_api() {
        let ctx = Ctx::from_cart([("x", Ty::Real(1))]);
        let t = check_applied(&ctx, &parse_term("lsing(x)").unwrap()).unwrap();
        assert_eq!(t, Ty::lin_fun(Ty::Unknown, Ty::copower(Ty::Real(1), Ty::Unknown)));
        assert_eq!(check_applied(&ctx, &Term::Zero).unwrap(), Ty::Unknown);
        let comp = parse_term("lcomp(\\a:R 1. a * x, \\b:R 1. b)").unwrap();
        assert_eq!(
            check_applied(&ctx, &comp).unwrap(),
            Ty::lin_fun(Ty::Real(1), Ty::Real(1))
        );
    }

    #[test]
    fn source_elaborates_plus() {
        let ctx = Ctx::from_cart([("x", Ty::Real(1))]);
        let (t, ty) = elaborate_source(&ctx, &parse_term("x + 1.0").unwrap()).unwrap();
        assert_eq!(ty, Ty::Real(1));
        assert_eq!(t, Term::prim("add", vec![var("x"), crate::lang::term::scalar(1.0)]));
    }

    #[test]
    fn source_rejects_target_ops() {
        let ctx = Ctx::from_cart([("x", Ty::Real(1))]);
        assert!(check_source(&ctx, &parse_term("singleton(x)").unwrap()).is_err());
        assert!(check_source(&ctx, &parse_term("outer(x, x)").unwrap()).is_err());
    }
}
