// SPDX-License-Identifier: Apache-2.0

//! The environment-based big-step evaluator.

use std::cell::Cell;
use std::sync::Arc;

use super::ir::Ir;
use super::value::{Closure, Env, Native, Value};
use super::EvalError;
use crate::lang::ops::Ns;
use crate::registry::{eval_lin_op, eval_op, lookup_lin, registry, with_param};
use crate::scalar::Scalar;
use crate::stack::guard;

type Res<S> = Result<Value<S>, EvalError>;

fn err<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::new(msg))
}

pub fn eval_ir<S: Scalar>(env: &Env<S>, t: &Arc<Ir>) -> Res<S> {
    guard(|| eval_inner(env, t))
}

fn eval_inner<S: Scalar>(env: &Env<S>, t: &Arc<Ir>) -> Res<S> {
    match &**t {
        Ir::Var(ns, x) => match env.lookup(*ns, x) {
            Some(v) => Ok(v.clone()),
            None => err(format!("unbound variable {}", x)),
        },
        Ir::Let(ns, x, a, b) => {
            let va = eval_ir(env, a)?;
            eval_ir(&env.extend(*ns, x.clone(), va), b)
        }
        Ir::Lit(xs) => Ok(Value::reals(xs.iter().map(|x| S::from_f64(*x)).collect())),
        Ir::Unit => Ok(Value::Unit),
        Ir::Zero => Ok(Value::Zero),
        Ir::Pair(a, b) => Ok(Value::pair(eval_ir(env, a)?, eval_ir(env, b)?)),
        Ir::Fst(a) => eval_ir(env, a)?.fst(),
        Ir::Snd(a) => eval_ir(env, a)?.snd(),
        Ir::Lam(ns, x, body) => Ok(Value::Closure(Arc::new(Closure {
            ns: *ns,
            param: x.clone(),
            body: body.clone(),
            env: env.clone(),
        }))),
        Ir::App(f, a) => {
            let vf = eval_ir(env, f)?;
            let va = eval_ir(env, a)?;
            apply(&vf, va)
        }
        Ir::Plus(a, b) => eval_ir(env, a)?.plus(&eval_ir(env, b)?),
        Ir::Prim(base, param, args) => {
            let vals = args.iter().map(|a| eval_ir(env, a)).collect::<Result<Vec<_>, _>>()?;
            prim(base, *param, vals)
        }
        Ir::LinOp(op, cargs, l) => {
            let cs = cargs.iter().map(|a| eval_ir(env, a)).collect::<Result<Vec<_>, _>>()?;
            let vl = eval_ir(env, l)?;
            lin_op(op, &cs, &vl)
        }
        Ir::CopIntro(a, b) => {
            let va = eval_ir(env, a)?;
            let vb = eval_ir(env, b)?;
            Ok(Value::Copower(Arc::new(vec![(va, vb)])))
        }
        Ir::CopElim(s, x, w, body) => {
            let items = match eval_ir(env, s)? {
                Value::Zero => return Ok(Value::Zero),
                Value::Copower(items) => items,
                other => return err(format!("copower elimination of {}", other.kind())),
            };
            let items = if QUOTIENT.with(|q| q.get()) {
                Arc::new(quotient(&items)?)
            } else {
                items
            };
            let results = items
                .iter()
                .map(|(a, b)| {
                    let e = env
                        .extend(Ns::Cart, x.clone(), a.clone())
                        .extend(Ns::Lin, w.clone(), b.clone());
                    eval_ir(&e, body)
                })
                .collect::<Result<Vec<_>, _>>()?;
            sum_right(results)
        }
        Ir::Map(x, body, arr) => {
            let xs = eval_ir(env, arr)?;
            let xs = xs.as_reals()?;
            let mut out = Vec::with_capacity(xs.len());
            for xi in xs.iter() {
                let e = env.extend(Ns::Cart, x.clone(), Value::scalar(xi.clone()));
                out.push(scalar_of(&eval_ir(&e, body)?)?);
            }
            Ok(Value::reals(out))
        }
        Ir::Foldr(f, i, arr) => {
            let vf = eval_ir(env, f)?;
            let mut acc = eval_ir(env, i)?;
            let xs = eval_ir(env, arr)?;
            for xi in xs.as_reals()?.iter().rev() {
                acc = apply(&vf, Value::pair(Value::scalar(xi.clone()), acc))?;
            }
            Ok(acc)
        }
    }
}

thread_local! {
    static QUOTIENT: Cell<bool> = const { Cell::new(false) };
    static MERGED: Cell<usize> = const { Cell::new(0) };
}

/// Runs `f` with copower elimination first merging `!a ⊗ x + !a ⊗ y` into
/// `!a ⊗ (x + y)` whenever the two `a` are equal first-order values.
/// Returns the result and the number of merges. The copower is a quotient
/// of lists of pairs by exactly this relation, so results must not change
/// beyond rounding.
pub fn with_copower_quotient<T>(f: impl FnOnce() -> T) -> (T, usize) {
    let before = QUOTIENT.with(|q| q.replace(true));
    let merged = MERGED.with(|m| m.replace(0));
    let out = f();
    QUOTIENT.with(|q| q.set(before));
    (out, MERGED.with(|m| m.replace(merged)))
}

fn quotient<S: Scalar>(items: &[(Value<S>, Value<S>)]) -> Result<Vec<(Value<S>, Value<S>)>, EvalError> {
    let mut out: Vec<(Value<S>, Value<S>)> = Vec::with_capacity(items.len());
    for (a, b) in items {
        match out.iter_mut().find(|(c, _)| c.same_first_order(a)) {
            Some(slot) => {
                slot.1 = slot.1.plus(b)?;
                MERGED.with(|m| m.set(m.get() + 1));
            }
            None => out.push((a.clone(), b.clone())),
        }
    }
    Ok(out)
}

/// `w1 + (w2 + (… + wn))`, and zero for no summands.
pub fn sum_right<S: Scalar>(mut items: Vec<Value<S>>) -> Res<S> {
    let mut acc = match items.pop() {
        Some(v) => v,
        None => return Ok(Value::Zero),
    };
    while let Some(v) = items.pop() {
        acc = v.plus(&acc)?;
    }
    Ok(acc)
}

fn scalar_of<S: Scalar>(v: &Value<S>) -> Result<S, EvalError> {
    Ok(v.to_reals(1)?.pop().expect("one element"))
}

pub fn apply<S: Scalar>(f: &Value<S>, a: Value<S>) -> Res<S> {
    match f {
        Value::Closure(c) => {
            let e = c.env.extend(c.ns, c.param.clone(), a);
            eval_ir(&e, &c.body)
        }
        Value::Native(n) => match &**n {
            Native::Sum(g, h) => apply(g, a.clone())?.plus(&apply(h, a)?),
            Native::Partial { name, args } => call(name, args, a),
        },
        Value::Zero => Ok(Value::Zero),
        other => err(format!("cannot apply {}", other.kind())),
    }
}

fn lin_op<S: Scalar>(op: &str, cs: &[Value<S>], l: &Value<S>) -> Res<S> {
    if matches!(l, Value::Zero) {
        return Ok(Value::Zero);
    }
    let cargs = cs.iter().map(|c| c.as_reals()).collect::<Result<Vec<_>, _>>()?;
    let lr = l.as_reals()?;
    let shapes: Vec<usize> = cargs.iter().map(|c| c.len()).collect();
    lookup_lin(op, &shapes, lr.len()).map_err(|e| EvalError::new(e.to_string()))?;
    Ok(Value::reals(eval_lin_op(op, &cargs, lr)))
}

const FUNCTION_BUILTINS: &[&str] = &[
    "dmap",
    "dmapT",
    "dfoldr",
    "dfoldrT",
    "lid",
    "lcomp",
    "lswap",
    "leval",
    "lsing",
    "lcopowfold",
    "lfst",
    "lsnd",
    "lpair",
];

pub(crate) fn prim_public<S: Scalar>(base: &str, param: Option<usize>, args: Vec<Value<S>>) -> Res<S> {
    prim(base, param, args)
}

fn prim<S: Scalar>(base: &str, param: Option<usize>, args: Vec<Value<S>>) -> Res<S> {
    if let Some(name) = FUNCTION_BUILTINS.iter().find(|b| **b == base) {
        return Ok(Value::partial(name, args));
    }
    let zero_at = |i: usize| matches!(args.get(i), Some(Value::Zero));
    let any_zero = args.iter().any(|a| matches!(a, Value::Zero));
    match base {
        "add" if any_zero => {
            return Ok(if zero_at(0) { args[1].clone() } else { args[0].clone() });
        }
        "sub" if zero_at(1) => return Ok(args[0].clone()),
        "sub" if zero_at(0) => return prim("neg", None, vec![args[1].clone()]),
        "mul" | "neg" | "sum" | "replicate" | "matvec" | "matvecT" | "outer" if any_zero => return Ok(Value::Zero),
        "sin" | "cos" | "exp" | "sigmoid" if any_zero => {
            return err(format!("{} applied to a symbolic zero", base));
        }
        _ => {}
    }
    if registry().contains(base) {
        let rs = args.iter().map(|a| a.as_reals()).collect::<Result<Vec<_>, _>>()?;
        let shapes: Vec<usize> = rs.iter().map(|r| r.len()).collect();
        let name = match param {
            Some(k) => with_param(base, k),
            None => base.to_string(),
        };
        registry()
            .result_shape(&name, &shapes)
            .map_err(|e| EvalError::new(e.to_string()))?;
        return Ok(Value::reals(eval_op(base, param, &rs)));
    }
    match base {
        "singleton" => Ok(Value::list(vec![args[0].clone()])),
        "list_map" => {
            let xs = args[1].as_list()?;
            Ok(Value::list(
                xs.into_iter().map(|x| apply(&args[0], x)).collect::<Result<_, _>>()?,
            ))
        }
        "list_zip" => {
            let a = args[0].as_list()?;
            let b = args[1].as_list()?;
            Ok(Value::list(
                a.into_iter().zip(b).map(|(x, y)| Value::pair(x, y)).collect(),
            ))
        }
        "list_sum" => sum_right(args[0].as_list()?),
        "list_foldr" => {
            let mut acc = args[1].clone();
            for x in args[2].as_list()?.into_iter().rev() {
                acc = apply(&args[0], Value::pair(x, acc))?;
            }
            Ok(acc)
        }
        "scanr" => {
            let xs = args[2].as_list()?;
            let mut out = vec![args[1].clone()];
            for x in xs.into_iter().rev() {
                let next = apply(&args[0], Value::pair(x, out.last().expect("nonempty").clone()))?;
                out.push(next);
            }
            out.reverse();
            Ok(Value::list(out))
        }
        "scanl" => {
            let xs = args[2].as_list()?;
            let mut out = vec![args[1].clone()];
            for x in xs {
                let next = apply(&args[0], Value::pair(out.last().expect("nonempty").clone(), x))?;
                out.push(next);
            }
            Ok(Value::list(out))
        }
        "tail" => {
            let xs = args[0].as_list()?;
            Ok(Value::list(xs.into_iter().skip(1).collect()))
        }
        "init" => {
            let mut xs = args[0].as_list()?;
            xs.pop();
            Ok(Value::list(xs))
        }
        "last" => match args[0].as_list()?.pop() {
            Some(x) => Ok(x),
            None => err("last of an empty list"),
        },
        "to_list" => {
            let n = match (param, &args[0]) {
                (Some(n), _) => n,
                (None, Value::Reals(r)) => r.len(),
                (None, _) => return err("to_list of zero needs a shape"),
            };
            let xs = args[0].to_reals(n)?;
            Ok(Value::list(xs.into_iter().map(Value::scalar).collect()))
        }
        "from_list" => {
            if matches!(args[0], Value::Zero) {
                return Ok(Value::Zero);
            }
            let xs = args[0].as_list()?;
            let out = xs.iter().map(scalar_of).collect::<Result<Vec<_>, _>>()?;
            if let Some(n) = param {
                if out.len() != n {
                    return err(format!("from_list{{{}}} got {} elements", n, out.len()));
                }
            }
            Ok(Value::reals(out))
        }
        "vzipwith" => {
            let s = args[1].as_reals()?.to_vec();
            let r = args[2].to_reals(s.len())?;
            let mut out = Vec::with_capacity(s.len());
            for (a, b) in s.into_iter().zip(r) {
                let g = apply(&args[0], Value::scalar(a))?;
                out.push(scalar_of(&apply(&g, Value::scalar(b))?)?);
            }
            Ok(Value::reals(out))
        }
        _ => err(format!("unknown operation {}", base)),
    }
}

/// Saturating application of a function-valued builtin.
fn call<S: Scalar>(name: &'static str, args: &[Value<S>], a: Value<S>) -> Res<S> {
    match name {
        "lid" => Ok(a),
        "lcomp" => apply(&args[1], apply(&args[0], a)?),
        "lswap" => Ok(Value::partial("lswap_at", vec![args[0].clone(), a])),
        "lswap_at" => apply(&apply(&args[0], a)?, args[1].clone()),
        "leval" => apply(&a, args[0].clone()),
        "lsing" => Ok(Value::list(vec![Value::pair(args[0].clone(), a)])),
        "lcopowfold" => {
            let parts = a
                .as_list()?
                .into_iter()
                .map(|p| apply(&apply(&args[0], p.fst()?)?, p.snd()?))
                .collect::<Result<Vec<_>, _>>()?;
            sum_right(parts)
        }
        "lfst" => a.fst(),
        "lsnd" => a.snd(),
        "lpair" => Ok(Value::pair(apply(&args[0], a.clone())?, apply(&args[1], a)?)),
        "dmap" => dmap(&args[0], &args[1], &args[2], a),
        "dmapT" => dmap_t(&args[0], &args[1], &args[2], a),
        "dfoldr" => dfoldr(&args[0], &args[1], &args[2], a),
        "dfoldrT" => dfoldr_t(&args[0], &args[1], &args[2], a),
        _ => err(format!("unknown builtin {}", name)),
    }
}

/// Tangent of `map`: `zipWith(g ⟨0, r v⟩) s + map(g ⟨v, 0⟩) s`, elementwise.
fn dmap<S: Scalar>(g: &Value<S>, s: &Value<S>, r: &Value<S>, v: Value<S>) -> Res<S> {
    let s = s.as_reals()?.to_vec();
    let n = s.len();
    let rv = apply(r, v.clone())?.to_reals(n)?;
    let mut inner = Vec::with_capacity(n);
    let mut outer = Vec::with_capacity(n);
    for (si, rvi) in s.into_iter().zip(rv) {
        let h = apply(g, Value::scalar(si))?;
        inner.push(scalar_of(&apply(&h, Value::pair(Value::Zero, Value::scalar(rvi)))?)?);
        outer.push(scalar_of(&apply(&h, Value::pair(v.clone(), Value::Zero))?)?);
    }
    Value::reals(inner).plus(&Value::reals(outer))
}

/// Cotangent of `map`: per-element environment contributions summed
/// right-nested, plus the array cotangent pushed through `r`.
fn dmap_t<S: Scalar>(g: &Value<S>, s: &Value<S>, r: &Value<S>, w: Value<S>) -> Res<S> {
    let s = s.as_reals()?.to_vec();
    let n = s.len();
    let w = w.to_reals(n)?;
    let mut env_parts = Vec::with_capacity(n);
    let mut arr = Vec::with_capacity(n);
    for (si, wi) in s.into_iter().zip(w) {
        let h = apply(&apply(g, Value::scalar(si))?, Value::scalar(wi))?;
        env_parts.push(h.fst()?);
        arr.push(scalar_of(&h.snd()?)?);
    }
    sum_right(env_parts)?.plus(&apply(r, Value::reals(arr))?)
}

/// Forward pass of a fold: the argument `(v_k, s_{k+1})` fed to `f` at each
/// step, and `f`'s output there.
fn fold_steps<S: Scalar>(f: &Value<S>, i: &Value<S>, v: &Value<S>) -> Result<Vec<(Value<S>, Value<S>)>, EvalError> {
    let vs = v.as_reals()?;
    let mut acc = i.clone();
    let mut steps = Vec::with_capacity(vs.len());
    for vk in vs.iter().rev() {
        let arg = Value::pair(Value::scalar(vk.clone()), acc);
        let out = apply(f, arg.clone())?;
        acc = out.fst()?;
        steps.push((arg, out.snd()?));
    }
    steps.reverse();
    Ok(steps)
}

fn dfoldr<S: Scalar>(f: &Value<S>, i: &Value<S>, v: &Value<S>, input: Value<S>) -> Res<S> {
    let steps = fold_steps(f, i, v)?;
    let df = input.fst()?;
    let rest = input.snd()?;
    let mut t = rest.fst()?;
    let dv = rest.snd()?.to_reals(steps.len())?;
    for ((arg, deriv), dvk) in steps.into_iter().zip(dv).rev() {
        let here = apply(&df, arg)?;
        t = here.plus(&apply(&deriv, Value::pair(Value::scalar(dvk), t))?)?;
    }
    Ok(t)
}

fn dfoldr_t<S: Scalar>(f: &Value<S>, i: &Value<S>, v: &Value<S>, w: Value<S>) -> Res<S> {
    let steps = fold_steps(f, i, v)?;
    let mut cur = w;
    let mut entries = Vec::with_capacity(steps.len());
    let mut dv = Vec::with_capacity(steps.len());
    for (arg, deriv) in steps {
        let r = apply(&deriv, cur.clone())?;
        entries.push((arg, cur));
        dv.push(scalar_of(&r.fst()?)?);
        cur = r.snd()?;
    }
    Ok(Value::pair(
        Value::Copower(Arc::new(entries)),
        Value::pair(cur, Value::reals(dv)),
    ))
}
