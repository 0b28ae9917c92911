// SPDX-License-Identifier: Apache-2.0

//! The canonical flattening of first-order values to `ℝᴺ`: left to right,
//! depth first, unit contributing nothing.

use super::value::{Env, Value};
use super::EvalError;
use crate::lang::ctx::Ctx;
use crate::lang::ops::Ns;
use crate::lang::ty::Ty;
use crate::scalar::Scalar;

/// Dimension of a first-order (Cartesian or linear) type.
pub fn dim(ty: &Ty) -> Result<usize, EvalError> {
    ty.flat_dim()
        .ok_or_else(|| EvalError::new(format!("type {} is not first-order", ty)))
}

pub fn ctx_dim(ctx: &Ctx) -> Result<usize, EvalError> {
    ctx.cart.iter().map(|(_, t)| dim(t)).sum()
}

/// Builds a value of type `ty` from `xs[*pos..]`, advancing `pos`.
pub fn unflatten<S: Scalar>(ty: &Ty, xs: &[S], pos: &mut usize) -> Result<Value<S>, EvalError> {
    match ty {
        Ty::Real(n) | Ty::LinReal(n) => {
            if *pos + n > xs.len() {
                return Err(EvalError::new(format!(
                    "point too short: need {} more values at position {}",
                    n, pos
                )));
            }
            let v = Value::reals(xs[*pos..*pos + n].to_vec());
            *pos += n;
            Ok(v)
        }
        Ty::Unit | Ty::LinUnit => Ok(Value::Unit),
        Ty::Prod(a, b) | Ty::LinProd(a, b) => {
            let va = unflatten(a, xs, pos)?;
            let vb = unflatten(b, xs, pos)?;
            Ok(Value::pair(va, vb))
        }
        other => Err(EvalError::new(format!(
            "cannot build a value of type {} from reals",
            other
        ))),
    }
}

pub fn unflatten_all<S: Scalar>(ty: &Ty, xs: &[S]) -> Result<Value<S>, EvalError> {
    let mut pos = 0;
    let v = unflatten(ty, xs, &mut pos)?;
    if pos != xs.len() {
        return Err(EvalError::new(format!("expected {} values, got {}", pos, xs.len())));
    }
    Ok(v)
}

/// Flattens a value of first-order type `ty`; symbolic zeros expand to
/// zero vectors of the right size.
pub fn flatten_typed<S: Scalar>(ty: &Ty, v: &Value<S>, out: &mut Vec<S>) -> Result<(), EvalError> {
    match (ty, v) {
        (_, Value::Zero) => {
            out.extend(std::iter::repeat_n(S::zero(), dim(ty)?));
            Ok(())
        }
        (Ty::Real(n) | Ty::LinReal(n), Value::Reals(x)) if x.len() == *n => {
            out.extend(x.iter().cloned());
            Ok(())
        }
        (Ty::Unit | Ty::LinUnit, Value::Unit) => Ok(()),
        (Ty::Prod(a, b) | Ty::LinProd(a, b), Value::Pair(p)) => {
            flatten_typed(a, &p.0, out)?;
            flatten_typed(b, &p.1, out)
        }
        (t, v) => Err(EvalError::new(format!("value {} does not have type {}", v.kind(), t))),
    }
}

pub fn flatten_all<S: Scalar>(ty: &Ty, v: &Value<S>) -> Result<Vec<S>, EvalError> {
    let mut out = Vec::new();
    flatten_typed(ty, v, &mut out)?;
    Ok(out)
}

/// Binds the context's variables to consecutive segments of `point`.
pub fn env_from_point<S: Scalar>(ctx: &Ctx, point: &[S]) -> Result<Env<S>, EvalError> {
    let mut env = Env::new();
    let mut pos = 0;
    for (x, t) in &ctx.cart {
        let v = unflatten(t, point, &mut pos)?;
        env = env.extend(Ns::Cart, x.clone(), v);
    }
    if pos != point.len() {
        return Err(EvalError::new(format!(
            "point has {} values but the context needs {}",
            point.len(),
            pos
        )));
    }
    Ok(env)
}

/// Snoc-nested environment (co)tangent `((1, t1), t2)…` from a flat vector,
/// using the per-variable linear types in `tys`.
pub fn env_tangent_value<S: Scalar>(tys: &[Ty], xs: &[S]) -> Result<Value<S>, EvalError> {
    let mut pos = 0;
    let mut acc = Value::Unit;
    for t in tys {
        acc = Value::pair(acc, unflatten(t, xs, &mut pos)?);
    }
    if pos != xs.len() {
        return Err(EvalError::new("environment tangent has the wrong length"));
    }
    Ok(acc)
}

/// Inverse of [`env_tangent_value`].
pub fn flatten_env_tangent<S: Scalar>(tys: &[Ty], v: &Value<S>) -> Result<Vec<S>, EvalError> {
    let mut parts = Vec::with_capacity(tys.len());
    let mut cur = v.clone();
    for t in tys.iter().rev() {
        parts.push(flatten_all(t, &cur.snd()?)?);
        cur = cur.fst()?;
    }
    parts.reverse();
    Ok(parts.concat())
}
