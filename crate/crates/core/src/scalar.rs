// SPDX-License-Identifier: Apache-2.0

//! The numeric interface the evaluator is generic over.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

/// A field-like scalar with the elementary functions the op registry needs.
///
/// `f64` is the production instance. [`Dual`] runs the same evaluator as a
/// forward-mode oracle, and tests use a tracing instance to observe
/// evaluation order.
pub trait Scalar:
    Clone
    + Debug
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    /// The primal part, for scalars that carry more than a number.
    fn to_f64(&self) -> f64;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
    fn sin(&self) -> Self {
        f32::sin(*self)
    }
    fn cos(&self) -> Self {
        f32::cos(*self)
    }
    fn exp(&self) -> Self {
        f32::exp(*self)
    }
}

/// Dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let eps = self.re.clone() * o.eps + self.eps * o.re.clone();
        Dual::new(self.re * o.re, eps)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let re = self.re.clone() / o.re.clone();
        let eps = (self.eps - re.clone() * o.eps) / o.re;
        Dual::new(re, eps)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Zero for Dual<T> {
    fn zero() -> Self {
        Dual::constant(T::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.eps.is_zero()
    }
}

impl<T: Scalar> One for Dual<T> {
    fn one() -> Self {
        Dual::constant(T::one())
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(x: f64) -> Self {
        Dual::constant(T::from_f64(x))
    }
    fn to_f64(&self) -> f64 {
        self.re.to_f64()
    }
    fn sin(&self) -> Self {
        Dual::new(self.re.sin(), self.re.cos() * self.eps.clone())
    }
    fn cos(&self) -> Self {
        Dual::new(self.re.cos(), -(self.re.sin() * self.eps.clone()))
    }
    fn exp(&self) -> Self {
        let e = self.re.exp();
        Dual::new(e.clone(), e * self.eps.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_product_rule() {
        let x = Dual::new(2.0, 1.0);
        let y = Dual::constant(3.0);
        let p = x * y;
        assert_eq!(p.re, 6.0);
        assert_eq!(p.eps, 3.0);
    }

    #[test]
    fn dual_quotient_and_sin() {
        let x = Dual::new(0.5_f64, 1.0);
        let q = Dual::constant(1.0) / x;
        assert!((q.eps + 4.0).abs() < 1e-15);
        assert!((x.sin().eps - 0.5_f64.cos()).abs() < 1e-15);
    }
}
