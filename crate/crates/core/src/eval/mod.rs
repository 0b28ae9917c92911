// SPDX-License-Identifier: Apache-2.0

//! Big-step call-by-value evaluation of every fragment.
//!
//! [`eval`] is environment based and generic over the scalar type, so the
//! same interpreter computes primal values (`f64`), dual-number directional
//! derivatives ([`crate::Dual`]) and addition-order traces in tests.
//! [`reference`] is a literal substitution evaluator kept as an executable
//! definition to test against.

mod flatten;
mod interp;
mod ir;
pub mod reference;
mod value;

use crate::lang::ctx::Ctx;
use crate::lang::term::Term;
use crate::lang::ty::Ty;
use crate::scalar::Scalar;

pub use flatten::{
    ctx_dim, dim, env_from_point, env_tangent_value, flatten_all, flatten_env_tangent, flatten_typed, unflatten,
    unflatten_all,
};
pub use interp::{apply, sum_right, with_copower_quotient};
pub use value::{Closure, Env, Native, Value};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("evaluation error: {message}")]
pub struct EvalError {
    pub message: String,
}

impl EvalError {
    pub fn new(message: impl Into<String>) -> Self {
        EvalError {
            message: message.into(),
        }
    }
}

pub fn eval<S: Scalar>(env: &Env<S>, t: &Term) -> Result<Value<S>, EvalError> {
    interp::eval_ir(env, &ir::lower(t))
}

pub fn eval_closed<S: Scalar>(t: &Term) -> Result<Value<S>, EvalError> {
    eval(&Env::new(), t)
}

/// Evaluates a first-order program `Γ ⊢ t : τ` at a flat point.
pub fn eval_source_fn<S: Scalar>(ctx: &Ctx, t: &Term, ty: &Ty, point: &[S]) -> Result<Vec<S>, EvalError> {
    let env = env_from_point(ctx, point)?;
    flatten_all(ty, &eval(&env, t)?)
}
