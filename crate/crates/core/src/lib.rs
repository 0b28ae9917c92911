// SPDX-License-Identifier: Apache-2.0

//! Source-to-source forward and reverse automatic differentiation (CHAD) for
//! a small higher-order array language with a linearly typed target.
//!
//! The pipeline is `frontend` (parse) -> `typecheck` -> `transform`
//! -> `erase` -> `simplify`, with `eval` running every fragment and
//! `verify` checking derivatives against independent oracles.

pub mod erase;
pub mod eval;
pub mod frontend;
pub mod generate;
pub mod golden;
pub mod lang;
pub mod pipeline;
pub mod registry;
pub mod scalar;
pub mod simplify;
pub mod stack;
pub mod transform;
pub mod typecheck;
pub mod verify;

pub use lang::{Ctx, Name, NameSupply, Term, Ty};
pub use scalar::{Dual, Scalar};

/// Values over `f64`, the scalar used everywhere outside the oracles.
pub type Value64 = eval::Value<f64>;
/// Environments over `f64`.
pub type Env64 = eval::Env<f64>;
/// Dual numbers over `f64`.
pub type Dual64 = Dual<f64>;
