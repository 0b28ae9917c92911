// SPDX-License-Identifier: Apache-2.0

pub mod ctx;
pub mod name;
pub mod ops;
pub mod term;
pub mod ty;

pub use ctx::{Ctx, CtxError};
pub use name::{Name, NameSupply};
pub use ops::{alpha_eq, ast_size, free_vars, occurrences, subst, subst_lin, FreeVars, Ns};
pub use term::Term;
pub use ty::{Fragment, Layer, Ty, TyError};
