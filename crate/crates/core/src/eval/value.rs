// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::sync::Arc;

use super::ir::Ir;
use super::EvalError;
use crate::lang::name::Name;
use crate::lang::ops::Ns;
use crate::scalar::Scalar;

/// Runtime values of every fragment. `Zero` is the symbolic monoid unit of
/// whatever linear type it inhabits; it is materialized only when a shape is
/// needed.
pub enum Value<S> {
    Reals(Arc<[S]>),
    Unit,
    Pair(Arc<(Value<S>, Value<S>)>),
    Closure(Arc<Closure<S>>),
    /// `!a1 ⊗ b1 + … + !an ⊗ bn`, kept unnormalized.
    Copower(Arc<Vec<(Value<S>, Value<S>)>>),
    List(Arc<Vec<Value<S>>>),
    Native(Arc<Native<S>>),
    Zero,
}

pub struct Closure<S> {
    pub ns: Ns,
    pub param: Name,
    pub body: Arc<Ir>,
    pub env: Env<S>,
}

/// Function values that are not lambdas: partially applied builtins and
/// pointwise sums of functions.
pub enum Native<S> {
    Partial { name: &'static str, args: Vec<Value<S>> },
    Sum(Value<S>, Value<S>),
}

impl<S> Clone for Value<S> {
    fn clone(&self) -> Self {
        match self {
            Value::Reals(x) => Value::Reals(x.clone()),
            Value::Unit => Value::Unit,
            Value::Pair(p) => Value::Pair(p.clone()),
            Value::Closure(c) => Value::Closure(c.clone()),
            Value::Copower(c) => Value::Copower(c.clone()),
            Value::List(l) => Value::List(l.clone()),
            Value::Native(n) => Value::Native(n.clone()),
            Value::Zero => Value::Zero,
        }
    }
}

impl<S: Scalar> Value<S> {
    pub fn reals(xs: Vec<S>) -> Self {
        Value::Reals(Arc::from(xs))
    }

    pub fn scalar(x: S) -> Self {
        Value::Reals(Arc::from(vec![x]))
    }

    pub fn pair(a: Value<S>, b: Value<S>) -> Self {
        Value::Pair(Arc::new((a, b)))
    }

    pub fn list(xs: Vec<Value<S>>) -> Self {
        Value::List(Arc::new(xs))
    }

    pub fn partial(name: &'static str, args: Vec<Value<S>>) -> Self {
        Value::Native(Arc::new(Native::Partial { name, args }))
    }

    pub fn is_function(&self) -> bool {
        matches!(self, Value::Closure(_) | Value::Native(_))
    }

    pub fn as_reals(&self) -> Result<&[S], EvalError> {
        match self {
            Value::Reals(x) => Ok(x),
            other => Err(EvalError::new(format!("expected a real array, found {}", other.kind()))),
        }
    }

    /// Reals of length `n`, materializing a symbolic zero.
    pub fn to_reals(&self, n: usize) -> Result<Vec<S>, EvalError> {
        match self {
            Value::Zero => Ok(vec![S::zero(); n]),
            Value::Reals(x) if x.len() == n => Ok(x.to_vec()),
            Value::Reals(x) => Err(EvalError::new(format!("expected {} reals, found {}", n, x.len()))),
            other => Err(EvalError::new(format!("expected a real array, found {}", other.kind()))),
        }
    }

    pub fn fst(&self) -> Result<Value<S>, EvalError> {
        match self {
            Value::Pair(p) => Ok(p.0.clone()),
            Value::Zero => Ok(Value::Zero),
            other => Err(EvalError::new(format!("fst of {}", other.kind()))),
        }
    }

    pub fn snd(&self) -> Result<Value<S>, EvalError> {
        match self {
            Value::Pair(p) => Ok(p.1.clone()),
            Value::Zero => Ok(Value::Zero),
            other => Err(EvalError::new(format!("snd of {}", other.kind()))),
        }
    }

    /// Elements of a list; symbolic zero is the empty list.
    pub fn as_list(&self) -> Result<Vec<Value<S>>, EvalError> {
        match self {
            Value::List(l) => Ok(l.to_vec()),
            Value::Zero => Ok(Vec::new()),
            Value::Copower(c) => Ok(c.iter().map(|(a, b)| Value::pair(a.clone(), b.clone())).collect()),
            other => Err(EvalError::new(format!("expected a list, found {}", other.kind()))),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Reals(_) => "reals",
            Value::Unit => "unit",
            Value::Pair(_) => "pair",
            Value::Closure(_) => "closure",
            Value::Copower(_) => "copower",
            Value::List(_) => "list",
            Value::Native(_) => "builtin function",
            Value::Zero => "zero",
        }
    }

    /// Value-level monoid plus. Copowers and lists concatenate in order;
    /// functions add pointwise.
    pub fn plus(&self, other: &Value<S>) -> Result<Value<S>, EvalError> {
        match (self, other) {
            (Value::Zero, b) => Ok(b.clone()),
            (a, Value::Zero) => Ok(a.clone()),
            (Value::Reals(a), Value::Reals(b)) if a.len() == b.len() => Ok(Value::reals(
                a.iter().zip(b.iter()).map(|(x, y)| x.clone() + y.clone()).collect(),
            )),
            (Value::Unit, Value::Unit) => Ok(Value::Unit),
            (Value::Pair(a), Value::Pair(b)) => Ok(Value::pair(a.0.plus(&b.0)?, a.1.plus(&b.1)?)),
            (Value::Copower(a), Value::Copower(b)) => {
                let mut out = a.to_vec();
                out.extend(b.iter().cloned());
                Ok(Value::Copower(Arc::new(out)))
            }
            (Value::List(a), Value::List(b)) => {
                let mut out = a.to_vec();
                out.extend(b.iter().cloned());
                Ok(Value::list(out))
            }
            (a, b) if a.is_function() && b.is_function() => {
                Ok(Value::Native(Arc::new(Native::Sum(a.clone(), b.clone()))))
            }
            (a, b) => Err(EvalError::new(format!("cannot add {} and {}", a.kind(), b.kind()))),
        }
    }

    /// Equality of first-order values, comparing reals by their `f64` bits.
    /// Functions and copowers are never equal.
    pub fn same_first_order(&self, other: &Value<S>) -> bool {
        match (self, other) {
            (Value::Reals(a), Value::Reals(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b.iter())
                        .all(|(x, y)| x.to_f64().to_bits() == y.to_f64().to_bits())
            }
            (Value::Unit, Value::Unit) | (Value::Zero, Value::Zero) => true,
            (Value::Pair(a), Value::Pair(b)) => a.0.same_first_order(&b.0) && a.1.same_first_order(&b.1),
            _ => false,
        }
    }

    /// All reals in depth-first, left-to-right order.
    pub fn flatten(&self) -> Result<Vec<S>, EvalError> {
        let mut out = Vec::new();
        self.flatten_into(&mut out)?;
        Ok(out)
    }

    fn flatten_into(&self, out: &mut Vec<S>) -> Result<(), EvalError> {
        match self {
            Value::Reals(x) => out.extend(x.iter().cloned()),
            Value::Unit => {}
            Value::Pair(p) => {
                p.0.flatten_into(out)?;
                p.1.flatten_into(out)?;
            }
            other => return Err(EvalError::new(format!("cannot flatten {}", other.kind()))),
        }
        Ok(())
    }
}

impl<S: Scalar> fmt::Debug for Value<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Reals(x) => {
                let xs: Vec<f64> = x.iter().map(|s| s.to_f64()).collect();
                write!(f, "{:?}", xs)
            }
            Value::Unit => write!(f, "unit"),
            Value::Pair(p) => write!(f, "<{:?}, {:?}>", p.0, p.1),
            Value::Closure(c) => write!(f, "<closure {}>", c.param),
            Value::Copower(c) => {
                write!(f, "copower[")?;
                for (i, (a, b)) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "!{:?} (x) {:?}", a, b)?;
                }
                write!(f, "]")
            }
            Value::List(l) => f.debug_list().entries(l.iter()).finish(),
            Value::Native(_) => write!(f, "<builtin>"),
            Value::Zero => write!(f, "zero"),
        }
    }
}

/// Persistent environment: a linked list of bindings, newest first.
pub struct Env<S>(Option<Arc<EnvNode<S>>>);

pub struct EnvNode<S> {
    ns: Ns,
    name: Name,
    val: Value<S>,
    next: Env<S>,
}

impl<S> Clone for Env<S> {
    fn clone(&self) -> Self {
        Env(self.0.clone())
    }
}

impl<S> Default for Env<S> {
    fn default() -> Self {
        Env(None)
    }
}

impl<S: Scalar> Env<S> {
    pub fn new() -> Self {
        Env(None)
    }

    pub fn extend(&self, ns: Ns, name: Name, val: Value<S>) -> Self {
        Env(Some(Arc::new(EnvNode {
            ns,
            name,
            val,
            next: self.clone(),
        })))
    }

    pub fn lookup(&self, ns: Ns, name: &Name) -> Option<&Value<S>> {
        let mut cur = &self.0;
        while let Some(node) = cur {
            if node.ns == ns && node.name == *name {
                return Some(&node.val);
            }
            cur = &node.next.0;
        }
        None
    }
}

impl<S> Drop for Env<S> {
    // Iterative drop so long environments cannot overflow the stack.
    fn drop(&mut self) {
        let mut cur = self.0.take();
        while let Some(node) = cur {
            match Arc::try_unwrap(node) {
                Ok(mut n) => cur = n.next.0.take(),
                Err(_) => break,
            }
        }
    }
}
