// SPDX-License-Identifier: Apache-2.0

//! Primitive operations, their linear derivative operations, and the
//! target-only builtins the transforms and erasure emit.
//!
//! Op names may carry a static shape parameter, written `replicate{5}`. A
//! [`OpSig`] is always an instance: shapes are fixed at lookup from the
//! argument types.

use std::sync::OnceLock;

use crate::lang::name::Name;
use crate::lang::term::{lin_var, scalar, var, Term};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OpError {
    #[error("unknown operation `{0}`")]
    Unknown(String),
    #[error("operation `{op}` does not accept argument shapes {shapes:?}")]
    BadShapes { op: String, shapes: Vec<usize> },
    #[error("operation `{0}` needs a shape parameter, e.g. `{0}{{3}}`")]
    MissingParam(String),
    #[error("operation `{0}` has no derivative; it may only appear in target programs")]
    NotDifferentiable(String),
}

/// Splits `replicate{5}` into `("replicate", Some(5))`.
pub fn split_name(name: &str) -> (&str, Option<usize>) {
    if let Some(i) = name.find('{') {
        if let Some(stripped) = name[i + 1..].strip_suffix('}') {
            if let Ok(k) = stripped.parse() {
                return (&name[..i], Some(k));
            }
        }
    }
    (name, None)
}

pub fn with_param(base: &str, k: usize) -> String {
    format!("{}{{{}}}", base, k)
}

/// Source-level primitive operations. Every one has derivative templates.
pub const SOURCE_OPS: &[&str] = &[
    "add",
    "sub",
    "mul",
    "neg",
    "sum",
    "replicate",
    "matvec",
    "sin",
    "cos",
    "exp",
    "sigmoid",
];

/// Cartesian operations that only the target language uses.
pub const TARGET_OPS: &[&str] = &["matvecT", "outer"];

pub const LIN_OPS: &[&str] = &[
    "lscale",
    "lneg",
    "lsum",
    "lreplicate",
    "lmatvec",
    "lmatvecT",
    "lmatvec_left",
    "louter",
];

/// Higher-order and list builtins of the idealised and applied targets.
/// Their typing lives in the checker and their meaning in the evaluator.
pub const BUILTINS: &[&str] = &[
    // derivative combinators for map and foldr
    "dmap",
    "dmapT",
    "dfoldr",
    "dfoldrT",
    // lists
    "singleton",
    "list_map",
    "list_zip",
    "list_sum",
    "list_foldr",
    "to_list",
    "from_list",
    "scanr",
    "scanl",
    "tail",
    "init",
    "last",
    "vzipwith",
    // the abstract linear-function and copower API
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

pub fn is_prim_name(base: &str) -> bool {
    SOURCE_OPS.contains(&base) || TARGET_OPS.contains(&base) || BUILTINS.contains(&base)
}

pub fn is_lin_op_name(base: &str) -> bool {
    LIN_OPS.contains(&base)
}

pub fn is_op_name(base: &str) -> bool {
    SOURCE_OPS.contains(&base) || TARGET_OPS.contains(&base)
}

/// An instantiated primitive operation.
#[derive(Clone, Debug, PartialEq)]
pub struct OpSig {
    pub name: String,
    pub arg_shapes: Vec<usize>,
    pub result_shape: usize,
    /// Free `x1..xk` and linear `v : lin(n1 * .. * nk)` (right-nested),
    /// result `lin m`.
    pub d_op: Option<Term>,
    /// Free `x1..xk` and linear `v : lin m`, result `lin(n1 * .. * nk)`.
    pub dt_op: Option<Term>,
}

pub fn arg_name(i: usize) -> Name {
    Name::from(format!("x{}", i + 1))
}

pub fn lin_arg_name() -> Name {
    Name::new("v")
}

fn x(i: usize) -> Term {
    var(&format!("x{}", i + 1))
}

fn v() -> Term {
    lin_var("v")
}

fn lop(name: &str, cargs: Vec<Term>, larg: Term) -> Term {
    Term::lin_op(name, cargs, larg)
}

impl OpSig {
    pub fn arity(&self) -> usize {
        self.arg_shapes.len()
    }

    pub fn is_differentiable(&self) -> bool {
        self.d_op.is_some()
    }

    /// Evaluates on shape-correct real vectors.
    pub fn eval<S: Scalar>(&self, args: &[&[S]]) -> Vec<S> {
        let (base, param) = split_name(&self.name);
        eval_op(base, param, args)
    }
}

pub struct Registry {
    _private: (),
}

pub fn registry() -> &'static Registry {
    static REG: OnceLock<Registry> = OnceLock::new();
    REG.get_or_init(|| Registry { _private: () })
}

impl Registry {
    pub fn names(&self) -> impl Iterator<Item = &'static str> {
        SOURCE_OPS.iter().chain(TARGET_OPS.iter()).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        is_op_name(split_name(name).0)
    }

    /// Instantiates an op at the given argument shapes.
    pub fn lookup(&self, name: &str, shapes: &[usize]) -> Result<OpSig, OpError> {
        let result_shape = self.result_shape(name, shapes)?;
        let (base, param) = split_name(name);
        let (d_op, dt_op) = templates(base, param, shapes);
        Ok(OpSig {
            name: name.to_string(),
            arg_shapes: shapes.to_vec(),
            result_shape,
            d_op,
            dt_op,
        })
    }

    /// The shape rule alone, without building derivative templates.
    pub fn result_shape(&self, name: &str, shapes: &[usize]) -> Result<usize, OpError> {
        let (base, param) = split_name(name);
        let bad = || OpError::BadShapes {
            op: name.to_string(),
            shapes: shapes.to_vec(),
        };
        let need_param = || param.ok_or_else(|| OpError::MissingParam(base.to_string()));
        let result_shape = match (base, shapes) {
            ("add" | "sub" | "mul", [a, b]) if a == b => *a,
            ("neg" | "sin" | "cos" | "exp" | "sigmoid", [a]) => *a,
            ("sum", [_]) => 1,
            ("replicate", [1]) => need_param()?,
            ("matvec", [a, m]) => {
                let n = need_param()?;
                // With no rows the column count could not be recovered.
                if n == 0 || *a != n * m {
                    return Err(bad());
                }
                n
            }
            ("matvecT", [a, n2]) => {
                let n = need_param()?;
                if n == 0 || *n2 != n || a % n != 0 || *a == 0 {
                    return Err(bad());
                }
                a / n
            }
            ("outer", [a, b]) => a * b,
            _ if !is_op_name(base) => return Err(OpError::Unknown(name.to_string())),
            _ => return Err(bad()),
        };
        Ok(result_shape)
    }
}

fn templates(base: &str, param: Option<usize>, shapes: &[usize]) -> (Option<Term>, Option<Term>) {
    let scale = |c: Term, l: Term| lop("lscale", vec![c], l);
    let elementwise = |deriv: Term| (Some(scale(deriv.clone(), v())), Some(scale(deriv, v())));
    match base {
        "add" => (
            Some(Term::plus(Term::fst(v()), Term::snd(v()))),
            Some(Term::pair(v(), v())),
        ),
        "sub" => (
            Some(Term::plus(Term::fst(v()), lop("lneg", vec![], Term::snd(v())))),
            Some(Term::pair(v(), lop("lneg", vec![], v()))),
        ),
        // D(*)((a1,a2),(b1,b2)) = a1*b2 + a2*b1, D^T(*)((a1,a2),b) = (a2*b, a1*b)
        "mul" => (
            Some(Term::plus(scale(x(0), Term::snd(v())), scale(x(1), Term::fst(v())))),
            Some(Term::pair(scale(x(1), v()), scale(x(0), v()))),
        ),
        "neg" => (Some(lop("lneg", vec![], v())), Some(lop("lneg", vec![], v()))),
        "sum" => (
            Some(lop("lsum", vec![], v())),
            Some(lop(&with_param("lreplicate", shapes[0]), vec![], v())),
        ),
        "replicate" => (
            Some(lop(&with_param("lreplicate", param.unwrap_or(1)), vec![], v())),
            Some(lop("lsum", vec![], v())),
        ),
        "matvec" => {
            let n = param.unwrap_or(1);
            (
                Some(Term::plus(
                    lop(&with_param("lmatvec", n), vec![x(0)], Term::snd(v())),
                    lop(&with_param("lmatvec_left", n), vec![x(1)], Term::fst(v())),
                )),
                Some(Term::pair(
                    lop(&with_param("louter", n), vec![x(1)], v()),
                    lop(&with_param("lmatvecT", n), vec![x(0)], v()),
                )),
            )
        }
        "sin" => elementwise(Term::prim("cos", vec![x(0)])),
        "cos" => elementwise(Term::prim("sub", vec![zeros(shapes[0]), Term::prim("sin", vec![x(0)])])),
        "exp" => elementwise(Term::prim("exp", vec![x(0)])),
        "sigmoid" => {
            let s = Term::prim("sigmoid", vec![x(0)]);
            elementwise(Term::prim(
                "mul",
                vec![s.clone(), Term::prim("sub", vec![ones(shapes[0]), s])],
            ))
        }
        _ => (None, None),
    }
}

fn zeros(n: usize) -> Term {
    if n == 1 {
        scalar(0.0)
    } else {
        Term::RealLit(vec![0.0; n])
    }
}

fn ones(n: usize) -> Term {
    Term::RealLit(vec![1.0; n])
}

/// Evaluation of Cartesian ops on real vectors.
pub fn eval_op<S: Scalar>(base: &str, param: Option<usize>, args: &[&[S]]) -> Vec<S> {
    let zip2 = |f: fn(S, S) -> S| -> Vec<S> {
        args[0]
            .iter()
            .zip(args[1].iter())
            .map(|(a, b)| f(a.clone(), b.clone()))
            .collect()
    };
    let map1 = |f: fn(&S) -> S| -> Vec<S> { args[0].iter().map(f).collect() };
    match base {
        "add" => zip2(|a, b| a + b),
        "sub" => zip2(|a, b| a - b),
        "mul" => zip2(|a, b| a * b),
        "neg" => map1(|a| -a.clone()),
        "sin" => map1(|a| a.sin()),
        "cos" => map1(|a| a.cos()),
        "exp" => map1(|a| a.exp()),
        "sigmoid" => map1(sigmoid),
        "sum" => vec![sum(args[0])],
        "replicate" => vec![args[0][0].clone(); param.unwrap_or(1)],
        "matvec" => matvec(param.unwrap_or(1), args[0], args[1]),
        "matvecT" => matvec_t(param.unwrap_or(1), args[0], args[1]),
        "outer" => outer(args[0], args[1]),
        _ => panic!("eval_op: unknown op {}", base),
    }
}

pub fn sigmoid<S: Scalar>(a: &S) -> S {
    S::one() / (S::one() + (-a.clone()).exp())
}

/// Left-to-right sum, so results are reproducible across passes.
pub fn sum<S: Scalar>(xs: &[S]) -> S {
    xs.iter().cloned().fold(S::zero(), |acc, x| acc + x)
}

/// `A` is `n x m`, stored row-major.
pub fn matvec<S: Scalar>(n: usize, a: &[S], x: &[S]) -> Vec<S> {
    let m = x.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| a[i * m + j].clone() * x[j].clone())
                .fold(S::zero(), |acc, t| acc + t)
        })
        .collect()
}

pub fn matvec_t<S: Scalar>(n: usize, a: &[S], w: &[S]) -> Vec<S> {
    let m = a.len() / n;
    (0..m)
        .map(|j| {
            (0..n)
                .map(|i| a[i * m + j].clone() * w[i].clone())
                .fold(S::zero(), |acc, t| acc + t)
        })
        .collect()
}

pub fn outer<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter()
        .flat_map(|ai| b.iter().map(move |bj| ai.clone() * bj.clone()))
        .collect()
}

/// An instantiated linear operation `lop(cargs; larg)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinOpSig {
    pub name: String,
    pub cart_shapes: Vec<usize>,
    pub lin_shape: usize,
    pub result_shape: usize,
}

pub fn lookup_lin(name: &str, cart_shapes: &[usize], lin_shape: usize) -> Result<LinOpSig, OpError> {
    let (base, param) = split_name(name);
    let bad = || OpError::BadShapes {
        op: name.to_string(),
        shapes: cart_shapes.iter().copied().chain([lin_shape]).collect(),
    };
    let need_param = || param.ok_or_else(|| OpError::MissingParam(base.to_string()));
    let result_shape = match (base, cart_shapes) {
        ("lscale", [c]) if *c == lin_shape => lin_shape,
        ("lneg", []) => lin_shape,
        ("lsum", []) => 1,
        ("lreplicate", []) if lin_shape == 1 => need_param()?,
        ("lmatvec", [a]) => {
            let n = need_param()?;
            if *a != n * lin_shape {
                return Err(bad());
            }
            n
        }
        ("lmatvecT", [a]) => {
            let n = need_param()?;
            if n == 0 || lin_shape != n || a % n != 0 {
                return Err(bad());
            }
            a / n
        }
        ("lmatvec_left", [m]) => {
            let n = need_param()?;
            if lin_shape != n * m {
                return Err(bad());
            }
            n
        }
        ("louter", [m]) => {
            let n = need_param()?;
            if lin_shape != n {
                return Err(bad());
            }
            n * m
        }
        _ if !is_lin_op_name(base) => return Err(OpError::Unknown(name.to_string())),
        _ => return Err(bad()),
    };
    Ok(LinOpSig {
        name: name.to_string(),
        cart_shapes: cart_shapes.to_vec(),
        lin_shape,
        result_shape,
    })
}

impl LinOpSig {
    pub fn eval<S: Scalar>(&self, cargs: &[&[S]], l: &[S]) -> Vec<S> {
        eval_lin_op(&self.name, cargs, l)
    }
}

/// Evaluates `lop(cargs; l)` on shape-correct inputs.
pub fn eval_lin_op<S: Scalar>(name: &str, cargs: &[&[S]], l: &[S]) -> Vec<S> {
    let (base, param) = split_name(name);
    let n = param.unwrap_or(1);
    match base {
        "lscale" => eval_op("mul", None, &[cargs[0], l]),
        "lneg" => eval_op("neg", None, &[l]),
        "lsum" => vec![sum(l)],
        "lreplicate" => vec![l[0].clone(); n],
        "lmatvec" => matvec(n, cargs[0], l),
        "lmatvecT" => matvec_t(n, cargs[0], l),
        "lmatvec_left" => matvec(n, l, cargs[0]),
        "louter" => outer(l, cargs[0]),
        _ => panic!("unknown linear op {}", base),
    }
}

/// The applied-fragment Cartesian op implementing a linear op.
pub fn erase_lin_op(name: &str, cargs: Vec<Term>, larg: Term) -> Term {
    let (base, param) = split_name(name);
    let p = |b: &str| match param {
        Some(k) => with_param(b, k),
        None => b.to_string(),
    };
    let mut cargs = cargs;
    match base {
        "lscale" => Term::prim("mul", vec![cargs.remove(0), larg]),
        "lneg" => Term::prim("neg", vec![larg]),
        "lsum" => Term::prim("sum", vec![larg]),
        "lreplicate" => Term::prim(&p("replicate"), vec![larg]),
        "lmatvec" => Term::prim(&p("matvec"), vec![cargs.remove(0), larg]),
        "lmatvecT" => Term::prim(&p("matvecT"), vec![cargs.remove(0), larg]),
        "lmatvec_left" => Term::prim(&p("matvec"), vec![larg, cargs.remove(0)]),
        "louter" => Term::prim("outer", vec![larg, cargs.remove(0)]),
        _ => panic!("unknown linear op {}", base),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_names() {
        assert_eq!(split_name("replicate{5}"), ("replicate", Some(5)));
        assert_eq!(split_name("mul"), ("mul", None));
        assert_eq!(split_name("odd{x}"), ("odd{x}", None));
    }

    #[test]
    fn mul_instance_has_product_rule() {
        let sig = registry().lookup("mul", &[1, 1]).unwrap();
        assert_eq!(sig.result_shape, 1);
        assert!(sig.is_differentiable());
        let out: Vec<f64> = sig.eval(&[&[2.0], &[3.0]]);
        assert_eq!(out, vec![6.0]);
    }

    #[test]
    fn shape_errors() {
        assert!(registry().lookup("add", &[1, 2]).is_err());
        assert!(matches!(
            registry().lookup("replicate", &[1]),
            Err(OpError::MissingParam(_))
        ));
        assert!(matches!(registry().lookup("frob", &[1]), Err(OpError::Unknown(_))));
        assert_eq!(registry().lookup("matvec{2}", &[6, 3]).unwrap().result_shape, 2);
        assert!(registry().lookup("matvec{2}", &[5, 3]).is_err());
    }

    #[test]
    fn matvec_transpose_by_hand() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(matvec(2, &a, &[1.0, 0.0, 1.0]), vec![4.0, 10.0]);
        assert_eq!(matvec_t(2, &a, &[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
        assert_eq!(outer(&[1.0, 2.0], &[3.0, 4.0]), vec![3.0, 4.0, 6.0, 8.0]);
    }
}
