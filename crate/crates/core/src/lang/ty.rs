// SPDX-License-Identifier: Apache-2.0

use std::fmt;

/// Types of the unified language.
///
/// `Real` .. `Fun` are the Cartesian source types. The `Lin*`, `Power` and
/// `Copower` formers make up the linear layer of the idealised target.
/// `LinFun` values live in Cartesian contexts. `List` only occurs in the
/// applied (erased) fragment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ty {
    Real(usize),
    Unit,
    Prod(Box<Ty>, Box<Ty>),
    Fun(Box<Ty>, Box<Ty>),
    LinReal(usize),
    LinUnit,
    LinProd(Box<Ty>, Box<Ty>),
    /// `σ => τ`: Cartesian domain, linear codomain.
    Power(Box<Ty>, Box<Ty>),
    /// `σ ! τ`: formal sums of (Cartesian, linear) pairs.
    Copower(Box<Ty>, Box<Ty>),
    /// `σ -o τ`
    LinFun(Box<Ty>, Box<Ty>),
    List(Box<Ty>),
    /// The type of a `zero` whose type no context has fixed yet. Only the
    /// checker produces it; it is compatible with every type.
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    Cartesian,
    Linear,
    Unconstrained,
}

/// Which fragment a type or term is meant to live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fragment {
    Source,
    Idealised,
    Applied,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("ill-formed type {ty}: {reason}")]
pub struct TyError {
    pub ty: String,
    pub reason: String,
}

impl Ty {
    pub fn real(n: usize) -> Ty {
        Ty::Real(n)
    }
    pub fn lin_real(n: usize) -> Ty {
        Ty::LinReal(n)
    }
    pub fn prod(a: Ty, b: Ty) -> Ty {
        Ty::Prod(Box::new(a), Box::new(b))
    }
    pub fn fun(a: Ty, b: Ty) -> Ty {
        Ty::Fun(Box::new(a), Box::new(b))
    }
    pub fn lin_prod(a: Ty, b: Ty) -> Ty {
        Ty::LinProd(Box::new(a), Box::new(b))
    }
    pub fn power(a: Ty, b: Ty) -> Ty {
        Ty::Power(Box::new(a), Box::new(b))
    }
    pub fn copower(a: Ty, b: Ty) -> Ty {
        Ty::Copower(Box::new(a), Box::new(b))
    }
    pub fn lin_fun(a: Ty, b: Ty) -> Ty {
        Ty::LinFun(Box::new(a), Box::new(b))
    }
    pub fn list(a: Ty) -> Ty {
        Ty::List(Box::new(a))
    }

    pub fn layer(&self) -> Layer {
        match self {
            Ty::Real(_) | Ty::Unit | Ty::Prod(..) | Ty::Fun(..) | Ty::LinFun(..) | Ty::List(_) => Layer::Cartesian,
            Ty::LinReal(_) | Ty::LinUnit | Ty::LinProd(..) | Ty::Power(..) | Ty::Copower(..) => Layer::Linear,
            Ty::Unknown => Layer::Unconstrained,
        }
    }

    pub fn is_cartesian(&self) -> bool {
        self.layer() == Layer::Cartesian
    }

    pub fn is_linear(&self) -> bool {
        self.layer() == Layer::Linear
    }

    /// Iterated products of real arrays and unit, in either layer.
    pub fn is_first_order(&self) -> bool {
        match self {
            Ty::Real(_) | Ty::Unit | Ty::LinReal(_) | Ty::LinUnit => true,
            Ty::Prod(a, b) | Ty::LinProd(a, b) => a.is_first_order() && b.is_first_order(),
            _ => false,
        }
    }

    /// Number of reals in the flattening of a first-order type.
    pub fn flat_dim(&self) -> Option<usize> {
        match self {
            Ty::Real(n) | Ty::LinReal(n) => Some(*n),
            Ty::Unit | Ty::LinUnit => Some(0),
            Ty::Prod(a, b) | Ty::LinProd(a, b) => Some(a.flat_dim()? + b.flat_dim()?),
            _ => None,
        }
    }

    pub fn contains_unknown(&self) -> bool {
        match self {
            Ty::Unknown => true,
            Ty::Real(_) | Ty::Unit | Ty::LinReal(_) | Ty::LinUnit => false,
            Ty::List(a) => a.contains_unknown(),
            Ty::Prod(a, b)
            | Ty::Fun(a, b)
            | Ty::LinProd(a, b)
            | Ty::Power(a, b)
            | Ty::Copower(a, b)
            | Ty::LinFun(a, b) => a.contains_unknown() || b.contains_unknown(),
        }
    }

    /// Checks the layer discipline of every constructor for the given fragment.
    pub fn validate(&self, fragment: Fragment) -> Result<(), TyError> {
        let bad = |reason: &str| {
            Err(TyError {
                ty: self.to_string(),
                reason: reason.to_string(),
            })
        };
        // After erasure a copower is an ordinary list, so it may sit anywhere
        // a Cartesian type can.
        let cart = |t: &Ty| match fragment {
            Fragment::Applied => t.applied_repr().is_cartesian() || *t == Ty::Unknown,
            _ => t.is_cartesian() || *t == Ty::Unknown,
        };
        let lin = |t: &Ty| t.is_linear() || *t == Ty::Unknown;
        match self {
            Ty::Real(_) | Ty::Unit | Ty::Unknown => {}
            Ty::LinReal(_) | Ty::LinUnit => {
                if fragment != Fragment::Idealised {
                    return bad("linear type outside the idealised target");
                }
            }
            Ty::Prod(a, b) | Ty::Fun(a, b) => {
                if !cart(a) || !cart(b) {
                    return bad("components must be Cartesian");
                }
            }
            Ty::LinProd(a, b) => {
                if fragment != Fragment::Idealised {
                    return bad("linear type outside the idealised target");
                }
                if !lin(a) || !lin(b) {
                    return bad("components must be linear");
                }
            }
            Ty::Power(a, b) => {
                if fragment != Fragment::Idealised {
                    return bad("power type outside the idealised target");
                }
                if !cart(a) || !lin(b) {
                    return bad("power needs a Cartesian domain and a linear codomain");
                }
            }
            Ty::Copower(a, b) | Ty::LinFun(a, b) => match fragment {
                Fragment::Source => return bad("target-only type in the source fragment"),
                Fragment::Idealised => {
                    if let Ty::Copower(..) = self {
                        if !cart(a) || !lin(b) {
                            return bad("copower needs a Cartesian and a linear component");
                        }
                    } else if !lin(a) || !lin(b) {
                        return bad("linear function between non-linear types");
                    }
                }
                Fragment::Applied => {
                    if !cart(a) || !cart(b) {
                        return bad("applied abstract types take Cartesian arguments");
                    }
                }
            },
            Ty::List(a) => {
                if fragment != Fragment::Applied {
                    return bad("list types only exist in the applied fragment");
                }
                if !cart(a) {
                    return bad("list elements must be Cartesian");
                }
            }
        }
        match self {
            Ty::Prod(a, b)
            | Ty::Fun(a, b)
            | Ty::LinProd(a, b)
            | Ty::Power(a, b)
            | Ty::Copower(a, b)
            | Ty::LinFun(a, b) => {
                a.validate(fragment)?;
                b.validate(fragment)
            }
            Ty::List(a) => a.validate(fragment),
            _ => Ok(()),
        }
    }

    /// Structural equality where `Unknown` matches anything.
    pub fn compatible(&self, other: &Ty) -> bool {
        self.join(other).is_some()
    }

    /// The most specific type compatible with both, if any.
    pub fn join(&self, other: &Ty) -> Option<Ty> {
        use Ty::*;
        Some(match (self, other) {
            (Unknown, t) | (t, Unknown) => t.clone(),
            (Real(n), Real(m)) if n == m => Real(*n),
            (LinReal(n), LinReal(m)) if n == m => LinReal(*n),
            (Unit, Unit) => Unit,
            (LinUnit, LinUnit) => LinUnit,
            (Prod(a, b), Prod(c, d)) => Ty::prod(a.join(c)?, b.join(d)?),
            (Fun(a, b), Fun(c, d)) => Ty::fun(a.join(c)?, b.join(d)?),
            (LinProd(a, b), LinProd(c, d)) => Ty::lin_prod(a.join(c)?, b.join(d)?),
            (Power(a, b), Power(c, d)) => Ty::power(a.join(c)?, b.join(d)?),
            (Copower(a, b), Copower(c, d)) => Ty::copower(a.join(c)?, b.join(d)?),
            (LinFun(a, b), LinFun(c, d)) => Ty::lin_fun(a.join(c)?, b.join(d)?),
            (List(a), List(b)) => Ty::list(a.join(b)?),
            _ => return None,
        })
    }

    /// The representation of an applied-fragment type: abstract linear
    /// functions are functions and copowers are lists of pairs.
    pub fn applied_repr(&self) -> Ty {
        match self {
            Ty::LinFun(a, b) | Ty::Fun(a, b) => Ty::fun(a.applied_repr(), b.applied_repr()),
            Ty::Copower(a, b) => Ty::list(Ty::prod(a.applied_repr(), b.applied_repr())),
            Ty::Prod(a, b) => Ty::prod(a.applied_repr(), b.applied_repr()),
            Ty::List(a) => Ty::list(a.applied_repr()),
            Ty::LinReal(n) => Ty::Real(*n),
            Ty::LinUnit => Ty::Unit,
            Ty::LinProd(a, b) => Ty::prod(a.applied_repr(), b.applied_repr()),
            Ty::Power(a, b) => Ty::fun(a.applied_repr(), b.applied_repr()),
            t => t.clone(),
        }
    }

    /// The linear type with the same shape as a first-order Cartesian type.
    pub fn linearize(&self) -> Option<Ty> {
        match self {
            Ty::Real(n) => Some(Ty::LinReal(*n)),
            Ty::Unit => Some(Ty::LinUnit),
            Ty::Prod(a, b) => Some(Ty::lin_prod(a.linearize()?, b.linearize()?)),
            _ => None,
        }
    }
}

fn is_atom(t: &Ty) -> bool {
    matches!(t, Ty::Real(_) | Ty::Unit | Ty::LinReal(_) | Ty::LinUnit | Ty::Unknown)
}

fn product_level(t: &Ty) -> bool {
    is_atom(t) || matches!(t, Ty::List(_))
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Operands of binary formers are parenthesised unless atomic, so the
        // printed form never depends on associativity conventions.
        let operand = |f: &mut fmt::Formatter<'_>, t: &Ty| {
            if product_level(t) {
                write!(f, "{}", t)
            } else {
                write!(f, "({})", t)
            }
        };
        match self {
            Ty::Real(n) => write!(f, "R {}", n),
            Ty::Unit => write!(f, "1"),
            Ty::LinReal(n) => write!(f, "lin R {}", n),
            Ty::LinUnit => write!(f, "lin 1"),
            Ty::Unknown => write!(f, "?"),
            Ty::List(a) => {
                write!(f, "list ")?;
                if is_atom(a) {
                    write!(f, "{}", a)
                } else {
                    write!(f, "({})", a)
                }
            }
            Ty::Prod(a, b) | Ty::LinProd(a, b) => {
                operand(f, a)?;
                write!(f, " * ")?;
                operand(f, b)
            }
            Ty::Copower(a, b) => {
                operand(f, a)?;
                write!(f, " ! ")?;
                operand(f, b)
            }
            Ty::Fun(a, b) | Ty::Power(a, b) | Ty::LinFun(a, b) => {
                let arrow = match self {
                    Ty::Fun(..) => "->",
                    Ty::Power(..) => "=>",
                    _ => "-o",
                };
                operand(f, a)?;
                write!(f, " {} ", arrow)?;
                operand(f, b)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn applied_copowers_nest_like_lists() {
        let t = Ty::prod(Ty::real(1), Ty::copower(Ty::real(1), Ty::real(1)));
        assert!(t.validate(Fragment::Applied).is_ok());
        assert!(t.validate(Fragment::Idealised).is_err());
        assert!(Ty::prod(Ty::real(1), Ty::lin_real(1))
            .validate(Fragment::Applied)
            .is_err());
    }

    #[test]
    fn power_needs_linear_codomain() {
        assert!(Ty::power(Ty::real(2), Ty::lin_real(1))
            .validate(Fragment::Idealised)
            .is_ok());
        assert!(Ty::power(Ty::real(2), Ty::real(1))
            .validate(Fragment::Idealised)
            .is_err());
        assert!(Ty::power(Ty::real(2), Ty::lin_real(1))
            .validate(Fragment::Source)
            .is_err());
    }

    #[test]
    fn display() {
        assert_eq!(
            Ty::prod(Ty::real(1), Ty::fun(Ty::real(3), Ty::Unit)).to_string(),
            "R 1 * (R 3 -> 1)"
        );
    }
}
