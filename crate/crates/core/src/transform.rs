// SPDX-License-Identifier: Apache-2.0

//! The CHAD macros: forward mode `D(t) : D1 τ × (D2 Γ ⊸ D2 τ)` and reverse
//! mode `D(t) : D1 τ × (D2 τ ⊸ D2 Γ)`.
//!
//! Every rule binds each sub-transform once with `let`, so the output grows
//! linearly in the input. Environment (co)tangents are snoc-nested from the
//! linear unit: `[x1:τ1, x2:τ2]` maps to `((1, D2 τ1), D2 τ2)`.

use std::collections::BTreeSet;

use crate::lang::ctx::Ctx;
use crate::lang::name::{Name, NameSupply};
use crate::lang::ops::{all_names, subst, subst_lin, uniquify_binders};
use crate::lang::term::Term;
use crate::lang::ty::Ty;
use crate::registry::{arg_name, lin_arg_name, registry, OpError};
use crate::stack::guard;
use crate::typecheck::{check_source, TypeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Forward,
    Reverse,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Forward => "fwd",
            Mode::Reverse => "rev",
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    UnknownOp(#[from] OpError),
}

/// `D1 τ`.
pub fn type_primal(mode: Mode, t: &Ty) -> Ty {
    match t {
        Ty::Real(_) | Ty::Unit => t.clone(),
        Ty::Prod(a, b) => Ty::prod(type_primal(mode, a), type_primal(mode, b)),
        Ty::Fun(a, b) => {
            let (a1, a2) = (type_primal(mode, a), type_tangent(mode, a));
            let (b1, b2) = (type_primal(mode, b), type_tangent(mode, b));
            let deriv = match mode {
                Mode::Forward => Ty::lin_fun(a2, b2),
                Mode::Reverse => Ty::lin_fun(b2, a2),
            };
            Ty::fun(a1, Ty::prod(b1, deriv))
        }
        other => panic!("type_primal on non-source type {}", other),
    }
}

/// `D2 τ`: tangents in forward mode, cotangents in reverse mode.
pub fn type_tangent(mode: Mode, t: &Ty) -> Ty {
    match t {
        Ty::Real(n) => Ty::LinReal(*n),
        Ty::Unit => Ty::LinUnit,
        Ty::Prod(a, b) => Ty::lin_prod(type_tangent(mode, a), type_tangent(mode, b)),
        Ty::Fun(a, b) => {
            let a1 = type_primal(mode, a);
            let b2 = type_tangent(mode, b);
            match mode {
                Mode::Forward => Ty::power(a1, b2),
                Mode::Reverse => Ty::copower(a1, b2),
            }
        }
        other => panic!("type_tangent on non-source type {}", other),
    }
}

pub fn env_tangent(mode: Mode, ctx: &Ctx) -> Ty {
    env_tangent_of(mode, &ctx.cart)
}

fn env_tangent_of(mode: Mode, env: &[(Name, Ty)]) -> Ty {
    env.iter()
        .fold(Ty::LinUnit, |acc, (_, t)| Ty::lin_prod(acc, type_tangent(mode, t)))
}

/// The primal context `D1 Γ`, under which the transformed term is closed.
pub fn ctx_primal(mode: Mode, ctx: &Ctx) -> Ctx {
    Ctx {
        cart: ctx
            .cart
            .iter()
            .map(|(x, t)| (x.clone(), type_primal(mode, t)))
            .collect(),
        lin: None,
    }
}

/// The type of `transform(mode, Γ, t)` when `Γ ⊢ t : τ`.
pub fn transformed_type(mode: Mode, ctx: &Ctx, t: &Ty) -> Ty {
    let e = env_tangent(mode, ctx);
    let d = match mode {
        Mode::Forward => Ty::lin_fun(e, type_tangent(mode, t)),
        Mode::Reverse => Ty::lin_fun(type_tangent(mode, t), e),
    };
    Ty::prod(type_primal(mode, t), d)
}

/// Component `i` of a snoc-nested environment tangent with `k` entries.
pub fn env_proj(v: Term, i: usize, k: usize) -> Term {
    let mut cur = v;
    for _ in i + 1..k {
        cur = Term::fst(cur);
    }
    Term::snd(cur)
}

/// The snoc-nested environment cotangent that is `w` at slot `i` and zero
/// elsewhere.
pub fn env_coproj(w: Term, i: usize, k: usize) -> Term {
    if i + 1 == k {
        Term::pair(Term::Zero, w)
    } else {
        Term::pair(env_coproj(w, i, k - 1), Term::Zero)
    }
}

/// Transforms a well-typed source term. Returns the target term and the
/// source type of `t`.
pub fn transform(mode: Mode, ctx: &Ctx, t: &Term, supply: &mut NameSupply) -> Result<(Term, Ty), TransformError> {
    let ty = check_source(ctx, t)?;
    let mut taken: BTreeSet<Name> = all_names(t);
    taken.extend(ctx.names().cloned());
    supply.avoid(taken.iter().cloned());
    let t = uniquify_binders(t, &ctx.names().cloned().collect(), supply);
    let mut tr = Transformer {
        mode,
        supply,
        env: ctx.cart.clone(),
    };
    let (out, ty2) = tr.go(&t)?;
    debug_assert_eq!(ty, ty2);
    Ok((out, ty))
}

struct Transformer<'a> {
    mode: Mode,
    supply: &'a mut NameSupply,
    env: Vec<(Name, Ty)>,
}

fn v(x: &Name) -> Term {
    Term::Var(x.clone())
}

fn lv(x: &Name) -> Term {
    Term::LinVar(x.clone())
}

fn at(f: &Name, a: Term) -> Term {
    Term::lin_app(v(f), a)
}

fn sum_all(mut ts: Vec<Term>) -> Term {
    if ts.is_empty() {
        return Term::Zero;
    }
    let first = ts.remove(0);
    ts.into_iter().fold(first, Term::plus)
}

impl Transformer<'_> {
    fn fresh(&mut self, hint: &str) -> Name {
        self.supply.fresh(hint)
    }

    fn env_ty(&self) -> Ty {
        env_tangent_of(self.mode, &self.env)
    }

    fn d1(&self, t: &Ty) -> Ty {
        type_primal(self.mode, t)
    }

    fn d2(&self, t: &Ty) -> Ty {
        type_tangent(self.mode, t)
    }

    /// `let p = e in let x = fst p in let x' = snd p in body(x, x')`.
    fn pletin(&mut self, e: Term, x: Name, hint: &str, body: impl FnOnce(&mut Self, &Name, &Name) -> Term) -> Term {
        let p = self.fresh("p");
        let dx = self.fresh(&format!("{}'", hint));
        let inner = body(self, &x, &dx);
        Term::let_(
            p.clone(),
            e,
            Term::let_(x, Term::fst(v(&p)), Term::let_(dx, Term::snd(v(&p)), inner)),
        )
    }

    /// The linear half as a lambda over the environment tangent (forward) or
    /// the result cotangent (reverse).
    fn lin_half(&mut self, result_ty: &Ty, body: impl FnOnce(&mut Self, &Name) -> Term) -> Term {
        let w = self.fresh("v");
        let ty = match self.mode {
            Mode::Forward => self.env_ty(),
            Mode::Reverse => self.d2(result_ty),
        };
        let b = body(self, &w);
        Term::lin_lam(w, ty, b)
    }

    fn go(&mut self, t: &Term) -> Result<(Term, Ty), TransformError> {
        guard(|| self.go_inner(t))
    }

    fn go_inner(&mut self, t: &Term) -> Result<(Term, Ty), TransformError> {
        let mode = self.mode;
        match t {
            Term::Var(x) => {
                let k = self.env.len();
                let i = self
                    .env
                    .iter()
                    .rposition(|(y, _)| y == x)
                    .expect("typechecked term has bound variables");
                let ty = self.env[i].1.clone();
                let d = self.lin_half(&ty, |_, w| match mode {
                    Mode::Forward => env_proj(lv(w), i, k),
                    Mode::Reverse => env_coproj(lv(w), i, k),
                });
                Ok((Term::pair(v(x), d), ty))
            }
            Term::RealLit(xs) => {
                let ty = Ty::Real(xs.len());
                let d = self.lin_half(&ty, |_, _| Term::Zero);
                Ok((Term::pair(t.clone(), d), ty))
            }
            Term::UnitVal => {
                let d = self.lin_half(&Ty::Unit, |_, _| match mode {
                    Mode::Forward => Term::UnitVal,
                    Mode::Reverse => Term::Zero,
                });
                Ok((Term::pair(Term::UnitVal, d), Ty::Unit))
            }
            Term::Let(x, a, b) => {
                let (da, ta) = self.go(a)?;
                self.env.push((x.clone(), ta));
                let rb = self.go(b);
                self.env.pop();
                let (db, tb) = rb?;
                let y = self.fresh("y");
                let out = self.pletin(da, x.clone(), x.as_str(), |s, _x, dx| {
                    s.pletin(db, y, "y", |s, y, dy| {
                        let d = s.lin_half(&tb, |s, w| match mode {
                            Mode::Forward => at(dy, Term::pair(lv(w), at(dx, lv(w)))),
                            Mode::Reverse => {
                                let u = s.fresh("u");
                                Term::lin_let(
                                    u.clone(),
                                    at(dy, lv(w)),
                                    Term::plus(Term::fst(lv(&u)), at(dx, Term::snd(lv(&u)))),
                                )
                            }
                        });
                        Term::pair(v(y), d)
                    })
                });
                Ok((out, tb))
            }
            Term::Pair(a, b) => {
                let (da, ta) = self.go(a)?;
                let (db, tb) = self.go(b)?;
                let ty = Ty::prod(ta, tb);
                let (x, y) = (self.fresh("x"), self.fresh("y"));
                let out = self.pletin(da, x, "x", |s, x, dx| {
                    s.pletin(db, y, "y", |s, y, dy| {
                        let d = s.lin_half(&ty, |_, w| match mode {
                            Mode::Forward => Term::pair(at(dx, lv(w)), at(dy, lv(w))),
                            Mode::Reverse => Term::plus(at(dx, Term::fst(lv(w))), at(dy, Term::snd(lv(w)))),
                        });
                        Term::pair(Term::pair(v(x), v(y)), d)
                    })
                });
                Ok((out, ty))
            }
            Term::Fst(a) | Term::Snd(a) => {
                let first = matches!(t, Term::Fst(_));
                let (da, ta) = self.go(a)?;
                let ty = match &ta {
                    Ty::Prod(l, r) => {
                        if first {
                            (**l).clone()
                        } else {
                            (**r).clone()
                        }
                    }
                    _ => unreachable!("typechecked projection"),
                };
                let proj = |t: Term| if first { Term::fst(t) } else { Term::snd(t) };
                let x = self.fresh("x");
                let out = self.pletin(da, x, "x", |s, x, dx| {
                    let d = s.lin_half(&ty, |_, w| match mode {
                        Mode::Forward => proj(at(dx, lv(w))),
                        Mode::Reverse => at(
                            dx,
                            if first {
                                Term::pair(lv(w), Term::Zero)
                            } else {
                                Term::pair(Term::Zero, lv(w))
                            },
                        ),
                    });
                    Term::pair(proj(v(x)), d)
                });
                Ok((out, ty))
            }
            Term::Lam(x, sigma, b) => {
                self.env.push((x.clone(), sigma.clone()));
                let rb = self.go(b);
                self.env.pop();
                let (db, tau) = rb?;
                let ty = Ty::fun(sigma.clone(), tau.clone());
                let s1 = self.d1(sigma);
                let y = self.fresh("f");
                let (x2, x3, p) = (self.fresh(x.as_str()), self.fresh(x.as_str()), self.fresh("p"));
                let inner_w = self.fresh("v");
                let inner_ty = match mode {
                    Mode::Forward => self.d2(sigma),
                    Mode::Reverse => self.d2(&tau),
                };
                let snd_p = Term::snd(v(&p));
                let inner_lin = match mode {
                    Mode::Forward => Term::lin_app(snd_p, Term::pair(Term::Zero, lv(&inner_w))),
                    Mode::Reverse => Term::snd(Term::lin_app(snd_p, lv(&inner_w))),
                };
                let primal = Term::lam(
                    x2.clone(),
                    s1.clone(),
                    Term::let_(
                        p.clone(),
                        Term::app(v(&y), v(&x2)),
                        Term::pair(Term::fst(v(&p)), Term::lin_lam(inner_w, inner_ty, inner_lin)),
                    ),
                );
                let d = self.lin_half(&ty, |s, w| match mode {
                    Mode::Forward => Term::lam(
                        x3.clone(),
                        s1.clone(),
                        Term::lin_app(Term::snd(Term::app(v(&y), v(&x3))), Term::pair(lv(w), Term::Zero)),
                    ),
                    Mode::Reverse => {
                        let w2 = s.fresh("v");
                        Term::copower_elim(
                            lv(w),
                            x3.clone(),
                            w2.clone(),
                            Term::fst(Term::lin_app(Term::snd(Term::app(v(&y), v(&x3))), lv(&w2))),
                        )
                    }
                });
                let out = Term::let_(y, Term::lam(x.clone(), s1, db), Term::pair(primal, d));
                Ok((out, ty))
            }
            Term::App(f, a) => {
                let (df, tf) = self.go(f)?;
                let (da, _ta) = self.go(a)?;
                let tau = match &tf {
                    Ty::Fun(_, r) => (**r).clone(),
                    _ => unreachable!("typechecked application"),
                };
                let (x, y, q, z, dz) = (
                    self.fresh("g"),
                    self.fresh("a"),
                    self.fresh("q"),
                    self.fresh("z"),
                    self.fresh("z'"),
                );
                let out = self.pletin(df, x, "g", |s, x, dctx| {
                    s.pletin(da, y, "a", |s, y, dy| {
                        let d = s.lin_half(&tau, |_, w| match mode {
                            Mode::Forward => Term::plus(Term::app(at(dctx, lv(w)), v(y)), at(&dz, at(dy, lv(w)))),
                            Mode::Reverse => {
                                Term::plus(at(dctx, Term::copower_intro(v(y), lv(w))), at(dy, at(&dz, lv(w))))
                            }
                        });
                        Term::let_(
                            q.clone(),
                            Term::app(v(x), v(y)),
                            Term::let_(
                                z.clone(),
                                Term::fst(v(&q)),
                                Term::let_(dz.clone(), Term::snd(v(&q)), Term::pair(v(&z), d)),
                            ),
                        )
                    })
                });
                Ok((out, tau))
            }
            Term::PrimOp(op, args) => self.prim(op, args),
            Term::Map(x, body, arr) => {
                self.env.push((x.clone(), Ty::Real(1)));
                let rb = self.go(body);
                self.env.pop();
                let (dbody, _) = rb?;
                let (darr, tarr) = self.go(arr)?;
                let (g, z, x2, x3) = (
                    self.fresh("f"),
                    self.fresh("z"),
                    self.fresh(x.as_str()),
                    self.fresh(x.as_str()),
                );
                let comb = match mode {
                    Mode::Forward => "dmap",
                    Mode::Reverse => "dmapT",
                };
                let out = self.pletin(darr, z, "z", |s, z, dz| {
                    let primal = Term::map(x2.clone(), Term::fst(Term::app(v(&g), v(&x2))), v(z));
                    let deriv_fn = Term::lam(x3.clone(), Ty::Real(1), Term::snd(Term::app(v(&g), v(&x3))));
                    let d = s.lin_half(&tarr, |_, w| {
                        Term::lin_app(Term::prim(comb, vec![deriv_fn, v(z), v(dz)]), lv(w))
                    });
                    Term::pair(primal, d)
                });
                Ok((Term::let_(g, Term::lam(x.clone(), Ty::Real(1), dbody), out), tarr))
            }
            Term::Foldr(f, i, arr) => {
                let (df, _) = self.go(f)?;
                let (di, ti) = self.go(i)?;
                let (darr, _) = self.go(arr)?;
                let acc1 = self.d1(&ti);
                let dom = Ty::prod(Ty::Real(1), acc1);
                let (f1, i1, v1, pp) = (self.fresh("f"), self.fresh("i"), self.fresh("v"), self.fresh("p"));
                let out = self.pletin(df, f1, "f", |s, f1, df1| {
                    s.pletin(di, i1, "i", |s, i1, di1| {
                        s.pletin(darr, v1, "v", |s, v1, dv1| {
                            let primal = Term::foldr(
                                Term::lam(pp.clone(), dom.clone(), Term::fst(Term::app(v(f1), v(&pp)))),
                                v(i1),
                                v(v1),
                            );
                            let args = vec![v(f1), v(i1), v(v1)];
                            let d = s.lin_half(&ti, |s, w| match mode {
                                Mode::Forward => Term::lin_app(
                                    Term::prim("dfoldr", args),
                                    Term::pair(at(df1, lv(w)), Term::pair(at(di1, lv(w)), at(dv1, lv(w)))),
                                ),
                                Mode::Reverse => {
                                    let r = s.fresh("r");
                                    Term::lin_let(
                                        r.clone(),
                                        Term::lin_app(Term::prim("dfoldrT", args), lv(w)),
                                        sum_all(vec![
                                            at(df1, Term::fst(lv(&r))),
                                            at(di1, Term::fst(Term::snd(lv(&r)))),
                                            at(dv1, Term::snd(Term::snd(lv(&r)))),
                                        ]),
                                    )
                                }
                            });
                            Term::pair(primal, d)
                        })
                    })
                });
                Ok((out, ti))
            }
            _ => unreachable!("non-source construct in a typechecked source term"),
        }
    }

    fn prim(&mut self, op: &str, args: &[Term]) -> Result<(Term, Ty), TransformError> {
        let mut ds = Vec::new();
        let mut shapes = Vec::new();
        for a in args {
            let (d, ty) = self.go(a)?;
            match ty {
                Ty::Real(n) => shapes.push(n),
                _ => unreachable!("typechecked op argument"),
            }
            ds.push(d);
        }
        let sig = registry().lookup(op, &shapes)?;
        let template = match self.mode {
            Mode::Forward => sig.d_op.clone(),
            Mode::Reverse => sig.dt_op.clone(),
        }
        .ok_or_else(|| OpError::NotDifferentiable(op.to_string()))?;
        let ty = Ty::Real(sig.result_shape);
        let k = args.len();
        let xs: Vec<Name> = (0..k).map(|_| self.fresh("x")).collect();
        let dxs: Vec<Name> = (0..k).map(|_| self.fresh("x'")).collect();
        let ps: Vec<Name> = (0..k).map(|_| self.fresh("p")).collect();
        // Instantiate the template's x1..xk with the primal variables.
        let mut body = template;
        for (i, x) in xs.iter().enumerate() {
            body = subst(&body, &arg_name(i), &v(x), self.supply);
        }
        let u = self.fresh("u");
        let mode = self.mode;
        let d = self.lin_half(&ty, |s, w| match mode {
            Mode::Forward => {
                let body = subst_lin(&body, &lin_arg_name(), &lv(&u), s.supply);
                let tangents = dxs.iter().map(|dx| at(dx, lv(w))).collect();
                Term::lin_let(u.clone(), Term::tuple(tangents), body)
            }
            Mode::Reverse => {
                let body = subst_lin(&body, &lin_arg_name(), &lv(w), s.supply);
                let parts = dxs
                    .iter()
                    .enumerate()
                    .map(|(i, dx)| at(dx, Term::tuple_proj(lv(&u), i, k)))
                    .collect();
                Term::lin_let(u.clone(), body, sum_all(parts))
            }
        });
        let mut out = Term::pair(Term::prim(op, xs.iter().map(v).collect()), d);
        for i in (0..k).rev() {
            out = Term::let_(
                ps[i].clone(),
                ds[i].clone(),
                Term::let_(
                    xs[i].clone(),
                    Term::fst(v(&ps[i])),
                    Term::let_(dxs[i].clone(), Term::snd(v(&ps[i])), out),
                ),
            );
        }
        Ok((out, ty))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::{parse_program, ParseOptions};
    use crate::lang::ops::alpha_eq;
    use crate::lang::term::{lin_var, var};
    use crate::typecheck::check_cartesian;

    fn r(n: usize) -> Ty {
        Ty::Real(n)
    }

    #[test]
    fn type_tables() {
        assert_eq!(type_primal(Mode::Forward, &r(4)), r(4));
        assert_eq!(
            type_primal(Mode::Reverse, &Ty::fun(r(1), r(1))),
            Ty::fun(r(1), Ty::prod(r(1), Ty::lin_fun(Ty::LinReal(1), Ty::LinReal(1))))
        );
        assert_eq!(
            type_primal(Mode::Forward, &Ty::prod(Ty::Unit, r(2))),
            Ty::prod(Ty::Unit, r(2))
        );
        assert_eq!(
            type_tangent(Mode::Reverse, &Ty::fun(r(1), r(1))),
            Ty::copower(r(1), Ty::LinReal(1))
        );
        assert_eq!(type_tangent(Mode::Forward, &Ty::Unit), Ty::LinUnit);
        assert_eq!(
            type_tangent(Mode::Forward, &Ty::prod(r(2), r(3))),
            Ty::lin_prod(Ty::LinReal(2), Ty::LinReal(3))
        );
    }

    #[test]
    fn env_tangents() {
        let one = Ctx::from_cart([("x", r(1))]);
        assert_eq!(
            env_tangent(Mode::Forward, &one),
            Ty::lin_prod(Ty::LinUnit, Ty::LinReal(1))
        );
        assert_eq!(env_tangent(Mode::Reverse, &Ctx::new()), Ty::LinUnit);
        let two = Ctx::from_cart([("x1", r(1)), ("x2", r(3))]);
        assert_eq!(
            env_tangent(Mode::Reverse, &two),
            Ty::lin_prod(Ty::lin_prod(Ty::LinUnit, Ty::LinReal(1)), Ty::LinReal(3))
        );
    }

    #[test]
    fn forward_variable() {
        let ctx = Ctx::from_cart([("x", r(1))]);
        let (t, _) = transform(Mode::Forward, &ctx, &var("x"), &mut NameSupply::new()).unwrap();
        let expected = Term::pair(
            var("x"),
            Term::lin_lam(
                Name::new("v"),
                Ty::lin_prod(Ty::LinUnit, Ty::LinReal(1)),
                Term::snd(lin_var("v")),
            ),
        );
        assert!(alpha_eq(&t, &expected), "{:?}", t);
    }

    #[test]
    fn reverse_variable_coprojects() {
        let ctx = Ctx::from_cart([("a", r(1)), ("b", r(2))]);
        let (t, _) = transform(Mode::Reverse, &ctx, &var("a"), &mut NameSupply::new()).unwrap();
        let expected = Term::pair(
            var("a"),
            Term::lin_lam(
                Name::new("w"),
                Ty::LinReal(1),
                Term::pair(Term::pair(Term::Zero, lin_var("w")), Term::Zero),
            ),
        );
        assert!(alpha_eq(&t, &expected), "{:?}", t);
    }

    fn load(name: &str) -> crate::frontend::parser::Program {
        let path = format!("{}/../../programs/{}.chad", env!("CARGO_MANIFEST_DIR"), name);
        let src = std::fs::read_to_string(path).unwrap();
        parse_program(&src, &ParseOptions::with_default_n(3)).unwrap()
    }

    #[test]
    fn paper_programs_preserve_types() {
        for name in ["fig1a", "fig1b", "fig2a", "fig2b"] {
            let p = load(name);
            let (src, ty) = crate::typecheck::elaborate_source(&p.ctx, &p.term).unwrap();
            for mode in [Mode::Forward, Mode::Reverse] {
                let (out, _) = transform(mode, &p.ctx, &src, &mut NameSupply::new()).unwrap();
                let got = check_cartesian(&ctx_primal(mode, &p.ctx), &out)
                    .unwrap_or_else(|e| panic!("{} {:?}: {}", name, mode, e));
                let want = transformed_type(mode, &p.ctx, &ty);
                assert!(got.join(&want).is_some(), "{} {:?}: {} vs {}", name, mode, got, want);
            }
        }
    }

    #[test]
    fn foldr_preserves_types() {
        let src = "x : R 1, v : R n |- foldr(\\p : R 1 * R 1. mul(fst p, snd p) + x, x, v)";
        let p = parse_program(src, &ParseOptions::with_default_n(4)).unwrap();
        let (t, ty) = crate::typecheck::elaborate_source(&p.ctx, &p.term).unwrap();
        for mode in [Mode::Forward, Mode::Reverse] {
            let (out, _) = transform(mode, &p.ctx, &t, &mut NameSupply::new()).unwrap();
            let got = check_cartesian(&ctx_primal(mode, &p.ctx), &out).unwrap();
            assert!(got.join(&transformed_type(mode, &p.ctx, &ty)).is_some());
        }
    }
}
