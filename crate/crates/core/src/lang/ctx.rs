// SPDX-License-Identifier: Apache-2.0

use super::name::Name;
use super::ty::Ty;

/// Typing context: Cartesian variables in order, plus at most one linear
/// variable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ctx {
    pub cart: Vec<(Name, Ty)>,
    pub lin: Option<(Name, Ty)>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CtxError {
    #[error("duplicate variable {0} in context")]
    Duplicate(Name),
    #[error("linear variable {0} clashes with a Cartesian variable")]
    LinearClash(Name),
}

impl Ctx {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_cart<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = (S, Ty)>,
        S: Into<Name>,
    {
        Ctx {
            cart: vars.into_iter().map(|(n, t)| (n.into(), t)).collect(),
            lin: None,
        }
    }

    pub fn with_lin(mut self, v: impl Into<Name>, ty: Ty) -> Self {
        self.lin = Some((v.into(), ty));
        self
    }

    pub fn push(&mut self, x: Name, ty: Ty) {
        self.cart.push((x, ty));
    }

    /// Latest binding wins, so checkers may extend a context with a binder
    /// that shadows an outer one.
    pub fn lookup(&self, x: &Name) -> Option<&Ty> {
        self.cart.iter().rev().find(|(n, _)| n == x).map(|(_, t)| t)
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.cart.iter().map(|(n, _)| n)
    }

    pub fn len(&self) -> usize {
        self.cart.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cart.is_empty() && self.lin.is_none()
    }

    /// Checks the distinctness invariants.
    pub fn validate(&self) -> Result<(), CtxError> {
        for (i, (n, _)) in self.cart.iter().enumerate() {
            if self.cart[..i].iter().any(|(m, _)| m == n) {
                return Err(CtxError::Duplicate(n.clone()));
            }
        }
        if let Some((v, _)) = &self.lin {
            if self.cart.iter().any(|(m, _)| m == v) {
                return Err(CtxError::LinearClash(v.clone()));
            }
        }
        Ok(())
    }

    pub fn without_lin(&self) -> Ctx {
        Ctx {
            cart: self.cart.clone(),
            lin: None,
        }
    }
}
