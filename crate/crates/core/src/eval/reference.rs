// SPDX-License-Identifier: Apache-2.0

//! Substitution-based evaluation of closed terms, following the big-step
//! rules literally: a let or an application substitutes the argument's
//! value term into the body. It is slow and only used to validate the
//! environment evaluator. Builtin list and derivative combinators are out
//! of its scope.

use super::interp;
use super::value::Value;
use super::EvalError;
use crate::lang::name::{Name, NameSupply};
use crate::lang::ops::{all_names, subst_ns, Ns};
use crate::lang::term::Term;
use crate::lang::ty::Ty;
use crate::registry::{eval_lin_op, eval_op, split_name};
use crate::stack::guard;

/// Values as closed terms.
#[derive(Clone, Debug)]
pub enum RefVal {
    Reals(Vec<f64>),
    Unit,
    Pair(Box<RefVal>, Box<RefVal>),
    Lam(Ns, Name, Term),
    Copower(Vec<(RefVal, RefVal)>),
    Sum(Box<RefVal>, Box<RefVal>),
    Zero,
}

type Res = Result<RefVal, EvalError>;

fn err<T>(m: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::new(m))
}

pub struct Reference {
    supply: NameSupply,
}

/// Evaluates a closed term.
pub fn eval_reference(t: &Term) -> Res {
    let mut supply = NameSupply::new();
    supply.avoid(all_names(t));
    Reference { supply }.eval(t)
}

impl RefVal {
    pub fn flatten(&self, out: &mut Vec<f64>) -> Result<(), EvalError> {
        match self {
            RefVal::Reals(x) => out.extend(x),
            RefVal::Unit => {}
            RefVal::Pair(a, b) => {
                a.flatten(out)?;
                b.flatten(out)?;
            }
            _ => return err("cannot flatten a non-first-order value"),
        }
        Ok(())
    }

    fn is_function(&self) -> bool {
        matches!(self, RefVal::Lam(..) | RefVal::Sum(..))
    }

    fn fst(self) -> Res {
        match self {
            RefVal::Pair(a, _) => Ok(*a),
            RefVal::Zero => Ok(RefVal::Zero),
            _ => err("fst of a non-pair"),
        }
    }

    fn snd(self) -> Res {
        match self {
            RefVal::Pair(_, b) => Ok(*b),
            RefVal::Zero => Ok(RefVal::Zero),
            _ => err("snd of a non-pair"),
        }
    }

    fn plus(self, other: RefVal) -> Res {
        Ok(match (self, other) {
            (RefVal::Zero, b) => b,
            (a, RefVal::Zero) => a,
            (RefVal::Reals(a), RefVal::Reals(b)) if a.len() == b.len() => {
                RefVal::Reals(a.iter().zip(&b).map(|(x, y)| x + y).collect())
            }
            (RefVal::Unit, RefVal::Unit) => RefVal::Unit,
            (RefVal::Pair(a1, b1), RefVal::Pair(a2, b2)) => {
                RefVal::Pair(Box::new(a1.plus(*a2)?), Box::new(b1.plus(*b2)?))
            }
            (RefVal::Copower(mut a), RefVal::Copower(b)) => {
                a.extend(b);
                RefVal::Copower(a)
            }
            (a, b) if a.is_function() && b.is_function() => RefVal::Sum(Box::new(a), Box::new(b)),
            _ => return err("ill-typed plus"),
        })
    }

    fn reals(&self) -> Result<&[f64], EvalError> {
        match self {
            RefVal::Reals(x) => Ok(x),
            _ => err("expected reals"),
        }
    }
}

impl Reference {
    /// The value as a closed term, for substitution.
    fn to_term(&mut self, v: &RefVal) -> Term {
        match v {
            RefVal::Reals(x) => Term::RealLit(x.clone()),
            RefVal::Unit => Term::UnitVal,
            RefVal::Pair(a, b) => Term::pair(self.to_term(a), self.to_term(b)),
            RefVal::Lam(Ns::Cart, x, b) => Term::lam(x.clone(), Ty::Unknown, b.clone()),
            RefVal::Lam(Ns::Lin, x, b) => Term::lin_lam(x.clone(), Ty::Unknown, b.clone()),
            RefVal::Copower(items) => {
                let mut parts: Vec<Term> = items
                    .iter()
                    .map(|(a, b)| Term::copower_intro(self.to_term(a), self.to_term(b)))
                    .collect();
                match parts.pop() {
                    None => Term::Zero,
                    Some(last) => parts.into_iter().rev().fold(last, |acc, p| Term::plus(p, acc)),
                }
            }
            RefVal::Sum(f, g) => {
                let ns = match &**f {
                    RefVal::Lam(ns, ..) => *ns,
                    _ => Ns::Cart,
                };
                let z = self.supply.fresh("z");
                let (f, g) = (self.to_term(f), self.to_term(g));
                match ns {
                    Ns::Cart => {
                        let zv = Term::Var(z.clone());
                        Term::lam(z, Ty::Unknown, Term::plus(Term::app(f, zv.clone()), Term::app(g, zv)))
                    }
                    Ns::Lin => {
                        let zv = Term::LinVar(z.clone());
                        Term::lin_lam(
                            z,
                            Ty::Unknown,
                            Term::plus(Term::lin_app(f, zv.clone()), Term::lin_app(g, zv)),
                        )
                    }
                }
            }
            RefVal::Zero => Term::Zero,
        }
    }

    fn subst_val(&mut self, body: &Term, ns: Ns, x: &Name, v: &RefVal) -> Term {
        let vt = self.to_term(v);
        subst_ns(body, ns, x, &vt, &mut self.supply)
    }

    fn apply(&mut self, f: RefVal, a: RefVal) -> Res {
        match f {
            RefVal::Lam(ns, x, body) => {
                let b = self.subst_val(&body, ns, &x, &a);
                self.eval(&b)
            }
            RefVal::Sum(f, g) => {
                let l = self.apply(*f, a.clone())?;
                let r = self.apply(*g, a)?;
                l.plus(r)
            }
            RefVal::Zero => Ok(RefVal::Zero),
            _ => err("application of a non-function"),
        }
    }

    pub fn eval(&mut self, t: &Term) -> Res {
        guard(|| self.eval_inner(t))
    }

    fn eval_inner(&mut self, t: &Term) -> Res {
        match t {
            Term::Var(x) | Term::LinVar(x) => err(format!("free variable {}", x)),
            Term::Let(x, a, b) | Term::LinLet(x, a, b) => {
                let ns = if matches!(t, Term::Let(..)) { Ns::Cart } else { Ns::Lin };
                let va = self.eval(a)?;
                let b = self.subst_val(b, ns, x, &va);
                self.eval(&b)
            }
            Term::RealLit(x) => Ok(RefVal::Reals(x.clone())),
            Term::UnitVal => Ok(RefVal::Unit),
            Term::Zero => Ok(RefVal::Zero),
            Term::Pair(a, b) => Ok(RefVal::Pair(Box::new(self.eval(a)?), Box::new(self.eval(b)?))),
            Term::Fst(a) => self.eval(a)?.fst(),
            Term::Snd(a) => self.eval(a)?.snd(),
            Term::Lam(x, _, b) => Ok(RefVal::Lam(Ns::Cart, x.clone(), (**b).clone())),
            Term::LinLam(x, _, b) => Ok(RefVal::Lam(Ns::Lin, x.clone(), (**b).clone())),
            Term::App(f, a) | Term::LinApp(f, a) => {
                let vf = self.eval(f)?;
                let va = self.eval(a)?;
                self.apply(vf, va)
            }
            Term::Plus(a, b) => {
                let va = self.eval(a)?;
                let vb = self.eval(b)?;
                va.plus(vb)
            }
            Term::PrimOp(op, args) => {
                let vals = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
                prim(op, vals)
            }
            Term::LinOp(op, cargs, l) => {
                let cs = cargs.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
                let vl = self.eval(l)?;
                if matches!(vl, RefVal::Zero) {
                    return Ok(RefVal::Zero);
                }
                let cr = cs.iter().map(|c| c.reals()).collect::<Result<Vec<_>, _>>()?;
                Ok(RefVal::Reals(eval_lin_op(op, &cr, vl.reals()?)))
            }
            Term::CopowerIntro(a, b) => {
                let va = self.eval(a)?;
                let vb = self.eval(b)?;
                Ok(RefVal::Copower(vec![(va, vb)]))
            }
            Term::CopowerElim {
                scrutinee,
                cart,
                lin,
                body,
            } => {
                let items = match self.eval(scrutinee)? {
                    RefVal::Zero => return Ok(RefVal::Zero),
                    RefVal::Copower(items) => items,
                    _ => return err("copower elimination of a non-copower"),
                };
                let mut results = Vec::new();
                for (a, b) in items {
                    let b1 = self.subst_val(body, Ns::Cart, cart, &a);
                    let b2 = self.subst_val(&b1, Ns::Lin, lin, &b);
                    results.push(self.eval(&b2)?);
                }
                let mut acc = match results.pop() {
                    Some(v) => v,
                    None => return Ok(RefVal::Zero),
                };
                while let Some(v) = results.pop() {
                    acc = v.plus(acc)?;
                }
                Ok(acc)
            }
            Term::Map(x, body, arr) => {
                let xs = self.eval(arr)?;
                let mut out = Vec::new();
                for xi in xs.reals()? {
                    let b = self.subst_val(body, Ns::Cart, x, &RefVal::Reals(vec![*xi]));
                    match self.eval(&b)? {
                        RefVal::Reals(r) if r.len() == 1 => out.push(r[0]),
                        RefVal::Zero => out.push(0.0),
                        _ => return err("map body must produce a scalar"),
                    }
                }
                Ok(RefVal::Reals(out))
            }
            Term::Foldr(f, i, arr) => {
                let vf = self.eval(f)?;
                let mut acc = self.eval(i)?;
                let xs = self.eval(arr)?;
                for xi in xs.reals()?.iter().rev() {
                    acc = self.apply(
                        vf.clone(),
                        RefVal::Pair(Box::new(RefVal::Reals(vec![*xi])), Box::new(acc)),
                    )?;
                }
                Ok(acc)
            }
        }
    }
}

/// Cartesian ops share their zero conventions with the environment
/// evaluator by delegating to it on the corresponding values.
fn prim(op: &str, vals: Vec<RefVal>) -> Res {
    let (base, param) = split_name(op);
    let any_zero = vals.iter().any(|v| matches!(v, RefVal::Zero));
    if any_zero {
        let as_values: Vec<Value<f64>> = vals
            .iter()
            .map(|v| match v {
                RefVal::Reals(x) => Ok(Value::reals(x.clone())),
                RefVal::Zero => Ok(Value::Zero),
                _ => err("op argument must be reals"),
            })
            .collect::<Result<_, _>>()?;
        let out = interp::prim_public(base, param, as_values)?;
        return match out {
            Value::Zero => Ok(RefVal::Zero),
            Value::Reals(x) => Ok(RefVal::Reals(x.to_vec())),
            _ => err("op result must be reals"),
        };
    }
    let rs = vals.iter().map(|v| v.reals()).collect::<Result<Vec<_>, _>>()?;
    Ok(RefVal::Reals(eval_op(base, param, &rs)))
}
