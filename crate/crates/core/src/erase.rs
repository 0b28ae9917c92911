// SPDX-License-Identifier: Apache-2.0

//! Erasure of the idealised linear target into the applied target.
//!
//! Linear functions become ordinary functions, copowers become lists of
//! (primal, cotangent) pairs, and `zero`/`+` stay as nodes whose meaning is
//! the type-indexed monoid of [`monoid_for`]. The derivative combinators for
//! `map` and `foldr` are expanded into list code here.

use std::collections::BTreeSet;

use crate::eval::{EvalError, Value};
use crate::lang::ctx::Ctx;
use crate::lang::name::{Name, NameSupply};
use crate::lang::ops::{all_names, free_vars, occurs_free, uniquify_binders, Ns};
use crate::lang::term::Term;
use crate::lang::ty::{Fragment, Ty};
use crate::registry::{erase_lin_op, split_name, with_param};
use crate::scalar::Scalar;
use crate::stack::guard;
use crate::typecheck::{check_cartesian, check_linear, TypeError};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EraseError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("no monoid structure at type {0}")]
    MonoidUnavailable(Ty),
}

type Res<T> = Result<T, EraseError>;

/// `(−)ᵀ` on types. Abstract linear-function and copower types are kept;
/// the applied checker identifies them with functions and pair lists.
pub fn erase_ty(t: &Ty) -> Ty {
    match t {
        Ty::LinReal(n) => Ty::Real(*n),
        Ty::LinUnit => Ty::Unit,
        Ty::LinProd(a, b) | Ty::Prod(a, b) => Ty::prod(erase_ty(a), erase_ty(b)),
        Ty::Power(a, b) | Ty::Fun(a, b) => Ty::fun(erase_ty(a), erase_ty(b)),
        Ty::Copower(a, b) => Ty::copower(erase_ty(a), erase_ty(b)),
        Ty::LinFun(a, b) => Ty::lin_fun(erase_ty(a), erase_ty(b)),
        Ty::List(a) => Ty::list(erase_ty(a)),
        Ty::Real(_) | Ty::Unit | Ty::Unknown => t.clone(),
    }
}

/// Erases an idealised term `Γ ⊢ t : τ` (no linear variable in `Γ`).
pub fn erase(ctx: &Ctx, t: &Term, supply: &mut NameSupply) -> Res<Term> {
    check_cartesian(ctx, t)?;
    let mut taken: BTreeSet<Name> = all_names(t);
    taken.extend(ctx.names().cloned());
    supply.avoid(taken.iter().cloned());
    let fv = free_vars(t);
    let free: BTreeSet<Name> = fv.all().cloned().collect();
    let t = uniquify_binders(t, &free, supply);
    let mut e = Eraser {
        supply,
        env: ctx.cart.clone(),
        lin: None,
    };
    e.cart(&t)
}

struct Eraser<'a> {
    supply: &'a mut NameSupply,
    env: Vec<(Name, Ty)>,
    lin: Option<(Name, Ty)>,
}

fn v(x: &Name) -> Term {
    Term::Var(x.clone())
}

fn app2(f: Term, a: Term, b: Term) -> Term {
    Term::app(Term::app(f, a), b)
}

/// `(let x = b in f) a` as `let x = b in f a`, so the argument meets the
/// lambda that combinator expansion leaves under its shared bindings.
fn apply_through_lets(f: Term, a: Term) -> Term {
    match f {
        Term::Let(x, b, body) if !occurs_free(Ns::Cart, &x, &a) => Term::let_(x, *b, apply_through_lets(*body, a)),
        f => Term::app(f, a),
    }
}

fn is_atomic(t: &Term) -> bool {
    matches!(t, Term::Var(_) | Term::RealLit(_) | Term::UnitVal | Term::Zero)
}

impl Eraser<'_> {
    fn ctx(&self) -> Ctx {
        // Later bindings shadow earlier ones.
        let mut cart: Vec<(Name, Ty)> = Vec::new();
        for (x, t) in self.env.iter().rev() {
            if !cart.iter().any(|(y, _)| y == x) {
                cart.push((x.clone(), t.clone()));
            }
        }
        cart.reverse();
        Ctx { cart, lin: None }
    }

    fn synth_cart(&self, t: &Term) -> Res<Ty> {
        Ok(check_cartesian(&self.ctx(), t)?)
    }

    fn synth_lin(&self, t: &Term) -> Res<Ty> {
        let mut ctx = self.ctx();
        ctx.lin = self.lin.clone();
        Ok(check_linear(&ctx, t)?)
    }

    fn under<R>(&mut self, x: &Name, ty: Ty, f: impl FnOnce(&mut Self) -> R) -> R {
        self.env.push((x.clone(), ty));
        let r = f(self);
        self.env.pop();
        r
    }

    fn with_lin<R>(&mut self, w: &Name, ty: Ty, f: impl FnOnce(&mut Self) -> R) -> R {
        let saved = self.lin.replace((w.clone(), ty));
        let r = f(self);
        self.lin = saved;
        r
    }

    fn fresh(&mut self, hint: &str) -> Name {
        self.supply.fresh(hint)
    }

    /// Binds `t` to a fresh name unless it is atomic or a lambda (copying a
    /// value repeats no work); returns the name's use.
    fn share(&mut self, t: Term, hint: &str, binds: &mut Vec<(Name, Term)>) -> Term {
        if is_atomic(&t) || matches!(t, Term::Lam(..)) {
            t
        } else {
            let x = self.fresh(hint);
            binds.push((x.clone(), t));
            v(&x)
        }
    }

    fn cart(&mut self, t: &Term) -> Res<Term> {
        guard(|| self.cart_inner(t))
    }

    fn cart_inner(&mut self, t: &Term) -> Res<Term> {
        Ok(match t {
            Term::Var(_) | Term::RealLit(_) | Term::UnitVal | Term::Zero => t.clone(),
            Term::Let(x, a, b) => {
                let ta = self.synth_cart(a)?;
                let a2 = self.cart(a)?;
                let b2 = self.under(x, ta, |e| e.cart(b))?;
                Term::let_(x.clone(), a2, b2)
            }
            Term::Lam(x, ty, b) => {
                let b2 = self.under(x, ty.clone(), |e| e.cart(b))?;
                Term::lam(x.clone(), erase_ty(ty), b2)
            }
            Term::Map(x, b, arr) => {
                let b2 = self.under(x, Ty::Real(1), |e| e.cart(b))?;
                Term::map(x.clone(), b2, self.cart(arr)?)
            }
            Term::LinLam(w, ty, b) => {
                let b2 = self.with_lin(w, ty.clone(), |e| e.lin(b))?;
                Term::lam(w.clone(), erase_ty(ty), b2)
            }
            Term::PrimOp(op, args) if matches!(split_name(op).0, "dmap" | "dmapT" | "dfoldr" | "dfoldrT") => {
                self.combinator(t, op, args)?
            }
            Term::Plus(a, b) => Term::plus(self.cart(a)?, self.cart(b)?),
            Term::PrimOp(..) | Term::Pair(..) | Term::Fst(_) | Term::Snd(_) | Term::App(..) | Term::Foldr(..) => {
                let mut err = None;
                let out = t.map_children(|c| match self.cart(c) {
                    Ok(c) => c,
                    Err(e) => {
                        err.get_or_insert(e);
                        Term::Zero
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
                out
            }
            Term::LinVar(_)
            | Term::LinLet(..)
            | Term::LinOp(..)
            | Term::LinApp(..)
            | Term::CopowerIntro(..)
            | Term::CopowerElim { .. } => {
                unreachable!("linear construct in a Cartesian position of a checked term")
            }
        })
    }

    fn lin(&mut self, t: &Term) -> Res<Term> {
        guard(|| self.lin_inner(t))
    }

    fn lin_inner(&mut self, t: &Term) -> Res<Term> {
        Ok(match t {
            Term::LinVar(w) => Term::Var(w.clone()),
            Term::Zero | Term::UnitVal => t.clone(),
            Term::Plus(a, b) => Term::plus(self.lin(a)?, self.lin(b)?),
            Term::Pair(a, b) => Term::pair(self.lin(a)?, self.lin(b)?),
            Term::Fst(a) => Term::fst(self.lin(a)?),
            Term::Snd(a) => Term::snd(self.lin(a)?),
            Term::LinLet(w, a, b) => {
                let ta = self.synth_lin(a)?;
                let a2 = self.lin(a)?;
                let b2 = self.with_lin(w, ta, |e| e.lin(b))?;
                Term::let_(w.clone(), a2, b2)
            }
            Term::Let(x, a, b) => {
                let ta = self.synth_cart(a)?;
                let a2 = self.cart(a)?;
                let b2 = self.under(x, ta, |e| e.lin(b))?;
                Term::let_(x.clone(), a2, b2)
            }
            Term::LinOp(op, cargs, l) => {
                let cs = cargs.iter().map(|c| self.cart(c)).collect::<Res<Vec<_>>>()?;
                erase_lin_op(op, cs, self.lin(l)?)
            }
            Term::Lam(x, ty, b) => {
                let b2 = self.under(x, ty.clone(), |e| e.lin(b))?;
                Term::lam(x.clone(), erase_ty(ty), b2)
            }
            Term::App(f, a) => Term::app(self.lin(f)?, self.cart(a)?),
            Term::LinApp(f, a) => apply_through_lets(self.cart(f)?, self.lin(a)?),
            Term::CopowerIntro(a, b) => Term::prim("singleton", vec![Term::pair(self.cart(a)?, self.lin(b)?)]),
            Term::CopowerElim {
                scrutinee,
                cart,
                lin,
                body,
            } => {
                let (a, b) = match self.synth_lin(scrutinee)? {
                    Ty::Copower(a, b) => (*a, *b),
                    _ => (Ty::Unknown, Ty::Unknown),
                };
                let s2 = self.lin(scrutinee)?;
                let body2 = self.under(cart, a.clone(), |e| e.with_lin(lin, b.clone(), |e| e.lin(body)))?;
                let p = self.fresh("p");
                let entry = Term::lam(
                    p.clone(),
                    Ty::prod(erase_ty(&a), erase_ty(&b)),
                    Term::let_(
                        cart.clone(),
                        Term::fst(v(&p)),
                        Term::let_(lin.clone(), Term::snd(v(&p)), body2),
                    ),
                );
                Term::prim("list_sum", vec![Term::prim("list_map", vec![entry, s2])])
            }
            Term::Var(_) => unreachable!("Cartesian variable in a linear position of a checked term"),
            _ => unreachable!("Cartesian construct in a linear position of a checked term"),
        })
    }

    fn combinator(&mut self, whole: &Term, op: &str, args: &[Term]) -> Res<Term> {
        let ty = self.synth_cart(whole)?;
        let (dom, cod) = match &ty {
            Ty::LinFun(a, b) => ((**a).clone(), (**b).clone()),
            _ => unreachable!("derivative combinators are linear functions"),
        };
        let erased = args.iter().map(|a| self.cart(a)).collect::<Res<Vec<_>>>()?;
        let mut binds = Vec::new();
        let mut it = erased.into_iter();
        let (a0, a1, a2) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
        let body = match op {
            "dmap" | "dmapT" => {
                let n = match self.synth_cart(&args[1])? {
                    Ty::Real(n) => n,
                    _ => unreachable!("dmap over a real array"),
                };
                let g = self.share(a0, "g", &mut binds);
                let s = self.share(a1, "s", &mut binds);
                let r = self.share(a2, "r", &mut binds);
                if op == "dmap" {
                    self.dmap(g, s, r, &dom)
                } else {
                    self.dmap_t(g, s, r, n)
                }
            }
            _ => {
                let n = match self.synth_cart(&args[2])? {
                    Ty::Real(n) => n,
                    _ => unreachable!("foldr over a real array"),
                };
                let f = self.share(a0, "f", &mut binds);
                let i = self.share(a1, "i", &mut binds);
                let arr = self.share(a2, "v", &mut binds);
                if op == "dfoldr" {
                    self.dfoldr(f, i, arr, n, &dom)
                } else {
                    self.dfoldr_t(f, i, arr, n, &cod, &mut binds)
                }
            }
        };
        Ok(binds.into_iter().rev().fold(body, |acc, (x, a)| Term::let_(x, a, acc)))
    }

    /// `λv. vzipwith(λx x'. g x ⟨0, x'⟩, s, r v) + map(λx. g x ⟨v, 0⟩, s)`
    fn dmap(&mut self, g: Term, s: Term, r: Term, sigma: &Ty) -> Term {
        let (w, x, dx, y) = (self.fresh("v"), self.fresh("x"), self.fresh("x'"), self.fresh("x"));
        let inner = Term::lam(
            x.clone(),
            Ty::Real(1),
            Term::lam(
                dx.clone(),
                Ty::Real(1),
                app2(g.clone(), v(&x), Term::pair(Term::Zero, v(&dx))),
            ),
        );
        let zipped = Term::prim("vzipwith", vec![inner, s.clone(), Term::app(r, v(&w))]);
        let mapped = Term::map(y.clone(), app2(g, v(&y), Term::pair(v(&w), Term::Zero)), s);
        Term::lam(w, erase_ty(sigma), Term::plus(zipped, mapped))
    }

    /// `λw. list_sum(list_map(λp. fst(g (fst p) (snd p)), zip(s, w))) + r(vzipwith(λx x'. snd(g x x'), s, w))`
    fn dmap_t(&mut self, g: Term, s: Term, r: Term, n: usize) -> Term {
        let (w, p, x, dx) = (self.fresh("w"), self.fresh("p"), self.fresh("x"), self.fresh("x'"));
        let to_list = |t: Term| Term::prim(&with_param("to_list", n), vec![t]);
        let env_part = Term::prim(
            "list_sum",
            vec![Term::prim(
                "list_map",
                vec![
                    Term::lam(
                        p.clone(),
                        Ty::prod(Ty::Real(1), Ty::Real(1)),
                        Term::fst(app2(g.clone(), Term::fst(v(&p)), Term::snd(v(&p)))),
                    ),
                    Term::prim("list_zip", vec![to_list(s.clone()), to_list(v(&w))]),
                ],
            )],
        );
        let inner = Term::lam(
            x.clone(),
            Ty::Real(1),
            Term::lam(dx.clone(), Ty::Real(1), Term::snd(app2(g, v(&x), v(&dx)))),
        );
        let arr_part = Term::app(r, Term::prim("vzipwith", vec![inner, s, v(&w)]));
        Term::lam(w, Ty::Real(n), Term::plus(env_part, arr_part))
    }

    /// Tangent of a right fold, as a `list_foldr` carrying the primal and
    /// tangent accumulators together.
    fn dfoldr(&mut self, f: Term, i: Term, arr: Term, n: usize, input: &Ty) -> Term {
        let (acc1, acc2) = match input {
            Ty::LinProd(pw, _) => match &**pw {
                Ty::Power(d, t2) => match &**d {
                    Ty::Prod(_, t1) => (erase_ty(t1), erase_ty(t2)),
                    _ => unreachable!("fold domain is a pair"),
                },
                _ => unreachable!("fold tangent input starts with a power"),
            },
            _ => unreachable!("fold tangent input is a triple"),
        };
        let a = self.fresh("a");
        let q = self.fresh("q");
        let (vi, dvi, si, dsi, y) = (
            self.fresh("vi"),
            self.fresh("vi'"),
            self.fresh("si"),
            self.fresh("si'"),
            self.fresh("y"),
        );
        let step = Term::plus(
            Term::app(Term::fst(v(&a)), Term::pair(v(&vi), v(&si))),
            Term::app(Term::snd(v(&y)), Term::pair(v(&dvi), v(&dsi))),
        );
        let lets = [
            (vi.clone(), Term::fst(Term::fst(v(&q)))),
            (dvi.clone(), Term::snd(Term::fst(v(&q)))),
            (si.clone(), Term::fst(Term::snd(v(&q)))),
            (dsi.clone(), Term::snd(Term::snd(v(&q)))),
            (y.clone(), Term::app(f, Term::pair(v(&vi), v(&si)))),
        ];
        let body = lets
            .into_iter()
            .rev()
            .fold(Term::pair(Term::fst(v(&y)), step), |acc, (x, e)| Term::let_(x, e, acc));
        let q_ty = Ty::prod(Ty::prod(Ty::Real(1), Ty::Real(1)), Ty::prod(acc1, acc2));
        let to_list = |t: Term| Term::prim(&with_param("to_list", n), vec![t]);
        let folded = Term::prim(
            "list_foldr",
            vec![
                Term::lam(q, q_ty, body),
                Term::pair(i, Term::fst(Term::snd(v(&a)))),
                Term::prim("list_zip", vec![to_list(arr), to_list(Term::snd(Term::snd(v(&a))))]),
            ],
        );
        Term::lam(a, erase_ty(input), Term::snd(folded))
    }

    /// Cotangent of a right fold: primal accumulators by `scanr`, the
    /// cotangent sweep by `scanl`, and the copower of per-step contributions.
    fn dfoldr_t(&mut self, f: Term, i: Term, arr: Term, n: usize, out: &Ty, binds: &mut Vec<(Name, Term)>) -> Term {
        let (acc1, acc2) = match out {
            Ty::LinProd(c, _) => match &**c {
                Ty::Copower(d, t2) => match &**d {
                    Ty::Prod(_, t1) => (erase_ty(t1), erase_ty(t2)),
                    _ => unreachable!("fold domain is a pair"),
                },
                _ => unreachable!("fold cotangent output starts with a copower"),
            },
            _ => unreachable!("fold cotangent output is a triple"),
        };
        let dom = Ty::prod(Ty::Real(1), acc1.clone());
        let (vl, s, vs) = (self.fresh("vl"), self.fresh("s"), self.fresh("vs"));
        let (q1, q2, q3) = (self.fresh("q"), self.fresh("q"), self.fresh("q"));
        binds.push((vl.clone(), Term::prim(&with_param("to_list", n), vec![arr])));
        binds.push((
            s.clone(),
            Term::prim(
                "scanr",
                vec![
                    Term::lam(q1.clone(), dom.clone(), Term::fst(Term::app(f.clone(), v(&q1)))),
                    i,
                    Term::prim("tail", vec![v(&vl)]),
                ],
            ),
        ));
        binds.push((vs.clone(), Term::prim("list_zip", vec![v(&vl), v(&s)])));
        let (w, svs, vssvs) = (self.fresh("w"), self.fresh("svs"), self.fresh("vssvs"));
        let sweep = Term::prim(
            "scanl",
            vec![
                Term::lam(
                    q2.clone(),
                    Ty::prod(acc2.clone(), dom.clone()),
                    Term::snd(Term::app(
                        Term::snd(Term::app(f.clone(), Term::snd(v(&q2)))),
                        Term::fst(v(&q2)),
                    )),
                ),
                v(&w),
                v(&vs),
            ],
        );
        let dv = Term::prim(
            &with_param("from_list", n),
            vec![Term::prim(
                "list_map",
                vec![
                    Term::lam(
                        q3.clone(),
                        Ty::prod(dom, acc2.clone()),
                        Term::fst(Term::app(Term::snd(Term::app(f, Term::fst(v(&q3)))), Term::snd(v(&q3)))),
                    ),
                    v(&vssvs),
                ],
            )],
        );
        let result = Term::pair(v(&vssvs), Term::pair(Term::prim("last", vec![v(&svs)]), dv));
        let body = Term::let_(
            svs.clone(),
            sweep,
            Term::let_(
                vssvs,
                Term::prim("list_zip", vec![v(&vs), Term::prim("init", vec![v(&svs)])]),
                result,
            ),
        );
        Term::lam(w, acc2, body)
    }
}

/// The commutative monoid `(zero, +)` at an applied type.
#[derive(Clone, Debug, PartialEq)]
pub struct MonoidImpl {
    pub ty: Ty,
}

pub fn monoid_for(ty: &Ty) -> Res<MonoidImpl> {
    if ty.contains_unknown() || ty.validate(Fragment::Applied).is_err() || !ty.applied_repr().is_cartesian() {
        return Err(EraseError::MonoidUnavailable(ty.clone()));
    }
    Ok(MonoidImpl { ty: ty.clone() })
}

impl MonoidImpl {
    /// The materialised zero. At function types it is the constant-zero
    /// function, represented by the symbolic zero value.
    pub fn zero_value<S: Scalar>(&self) -> Value<S> {
        zero_at(&self.ty)
    }

    /// Plus per the type: elementwise on reals, componentwise on pairs,
    /// pointwise on functions and concatenation on lists and copowers.
    pub fn plus<S: Scalar>(&self, a: &Value<S>, b: &Value<S>) -> Result<Value<S>, EvalError> {
        a.plus(b)
    }
}

fn zero_at<S: Scalar>(ty: &Ty) -> Value<S> {
    match ty {
        Ty::Real(n) => Value::reals(vec![S::zero(); *n]),
        Ty::Unit => Value::Unit,
        Ty::Prod(a, b) => Value::pair(zero_at(a), zero_at(b)),
        Ty::List(_) | Ty::Copower(..) => Value::list(Vec::new()),
        _ => Value::Zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eval_closed;
    use crate::frontend::parser::{parse_program, parse_term, ParseOptions};
    use crate::lang::ops::alpha_eq;
    use crate::transform::{ctx_primal, transform, Mode};
    use crate::typecheck::{check_applied, elaborate_source};

    #[test]
    fn linear_identity_becomes_identity() {
        let t = parse_term("\\\\v:lin R 1. v").unwrap();
        let out = erase(&Ctx::new(), &t, &mut NameSupply::new()).unwrap();
        assert!(alpha_eq(&out, &parse_term("\\v:R 1. v").unwrap()), "{:?}", out);
    }

    #[test]
    fn copower_intro_is_a_singleton() {
        let ctx = Ctx::from_cart([("x", Ty::Real(1))]);
        let t = parse_term("\\\\v:lin R 1. x !* v").unwrap();
        let out = erase(&ctx, &t, &mut NameSupply::new()).unwrap();
        assert!(
            alpha_eq(&out, &parse_term("\\v:R 1. singleton(<x, v>)").unwrap()),
            "{:?}",
            out
        );
        check_applied(&ctx, &out).unwrap();
    }

    #[test]
    fn copower_elim_sums_over_the_list() {
        let t = parse_term("\\\\c:R 1 ! lin R 1. let a ! w = c in lscale(a; w)").unwrap();
        let out = erase(&Ctx::new(), &t, &mut NameSupply::new()).unwrap();
        check_applied(&Ctx::new(), &out).unwrap();
        let applied = Term::app(
            out,
            parse_term("singleton(<[2.0], [3.0]>) + singleton(<[5.0], [7.0]>)").unwrap(),
        );
        let val = eval_closed::<f64>(&applied).unwrap();
        assert_eq!(val.flatten().unwrap(), vec![41.0]);
    }

    #[test]
    fn monoid_table() {
        let m = monoid_for(&Ty::Real(3)).unwrap();
        assert_eq!(m.zero_value::<f64>().flatten().unwrap(), vec![0.0; 3]);
        let m = monoid_for(&Ty::prod(Ty::Real(1), Ty::Real(2))).unwrap();
        let a = Value::pair(Value::reals(vec![1.0]), Value::reals(vec![2.0, 3.0]));
        let b = Value::pair(Value::reals(vec![4.0]), Value::reals(vec![5.0, 6.0]));
        assert_eq!(m.plus(&a, &b).unwrap().flatten().unwrap(), vec![5.0, 7.0, 9.0]);
        let m = monoid_for(&Ty::copower(Ty::Real(1), Ty::Real(1))).unwrap();
        let one = |a: f64, x: f64| Value::list(vec![Value::pair(Value::reals(vec![a]), Value::reals(vec![x]))]);
        match m.plus(&one(1.0, 2.0), &one(1.0, 3.0)).unwrap() {
            Value::List(items) => assert_eq!(items.len(), 2),
            other => panic!("expected a list, got {}", other.kind()),
        }
        assert!(monoid_for(&Ty::Unknown).is_err());
        assert!(monoid_for(&Ty::LinReal(1)).is_err());
    }

    fn programs() -> Vec<(&'static str, &'static str)> {
        vec![
            ("fig1a", include_str!("../../../programs/fig1a.chad")),
            ("fig1b", include_str!("../../../programs/fig1b.chad")),
            ("fig2a", include_str!("../../../programs/fig2a.chad")),
            ("fig2b", include_str!("../../../programs/fig2b.chad")),
            (
                "fold",
                "x : R 1, v : R n |- foldr(\\p : R 1 * R 1. mul(fst p, snd p) + x, x, v)",
            ),
            (
                "fold0",
                "v : R 0 |- foldr(\\p : R 1 * R 1. mul(fst p, snd p), [1.0], v)",
            ),
        ]
    }

    #[test]
    fn erased_transforms_check_and_agree() {
        for (name, src) in programs() {
            let p = parse_program(src, &ParseOptions::with_default_n(3)).unwrap();
            let (t, ty) = elaborate_source(&p.ctx, &p.term).unwrap();
            for mode in [Mode::Forward, Mode::Reverse] {
                let mut supply = NameSupply::new();
                let (d, _) = transform(mode, &p.ctx, &t, &mut supply).unwrap();
                let pctx = ctx_primal(mode, &p.ctx);
                let e = erase(&pctx, &d, &mut supply).unwrap_or_else(|e| panic!("{} {:?}: {}", name, mode, e));
                check_applied(&pctx, &e)
                    .unwrap_or_else(|err| panic!("{} {:?}: {}\n{}", name, mode, err, crate::frontend::pretty(&e)));
                let dim: usize = p.ctx.cart.iter().map(|(_, t)| t.flat_dim().unwrap()).sum();
                let point: Vec<f64> = (0..dim).map(|k| 0.3 + 0.25 * k as f64).collect();
                let env = crate::eval::env_from_point::<f64>(&p.ctx, &point).unwrap();
                let tys: Vec<Ty> = p.ctx.cart.iter().map(|(_, t)| t.clone()).collect();
                let out_dim = ty.flat_dim().unwrap();
                let (in_ty, in_dim) = match mode {
                    Mode::Forward => (tys.clone(), dim),
                    Mode::Reverse => (vec![ty.clone()], out_dim),
                };
                let dir: Vec<f64> = (0..in_dim).map(|k| 1.0 - 0.5 * k as f64).collect();
                let run = |term: &Term| {
                    let val = crate::eval::eval(&env, term).unwrap();
                    let lin = val.snd().unwrap();
                    let arg = crate::eval::env_tangent_value(&in_ty, &dir).unwrap();
                    let arg = match mode {
                        Mode::Forward => arg,
                        Mode::Reverse => arg.snd().unwrap(),
                    };
                    let res = crate::eval::apply(&lin, arg).unwrap();
                    (
                        crate::eval::flatten_all(&ty, &val.fst().unwrap()).unwrap(),
                        match mode {
                            Mode::Forward => crate::eval::flatten_all(&ty, &res).unwrap(),
                            Mode::Reverse => crate::eval::flatten_env_tangent(&tys, &res).unwrap(),
                        },
                    )
                };
                let (p1, d1) = run(&d);
                let (p2, d2) = run(&e);
                assert_eq!(p1, p2, "{} {:?}", name, mode);
                assert_eq!(d1, d2, "{} {:?}", name, mode);
            }
        }
    }
}
