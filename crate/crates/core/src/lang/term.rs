// SPDX-License-Identifier: Apache-2.0

use super::name::Name;
use super::ty::Ty;

/// Terms of the unified language: source programs, the idealised linear
/// target and the applied target all share this grammar.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(Name),
    Let(Name, Box<Term>, Box<Term>),
    /// Primitive or builtin operation applied to Cartesian arguments.
    PrimOp(String, Vec<Term>),
    UnitVal,
    Pair(Box<Term>, Box<Term>),
    Fst(Box<Term>),
    Snd(Box<Term>),
    Lam(Name, Ty, Box<Term>),
    App(Box<Term>, Box<Term>),
    LinVar(Name),
    LinLet(Name, Box<Term>, Box<Term>),
    /// Linear operation: Cartesian arguments, then the single linear argument.
    LinOp(String, Vec<Term>, Box<Term>),
    Zero,
    Plus(Box<Term>, Box<Term>),
    LinLam(Name, Ty, Box<Term>),
    LinApp(Box<Term>, Box<Term>),
    /// `!t ⊗ s`
    CopowerIntro(Box<Term>, Box<Term>),
    /// `case scrutinee of !x ⊗ v -> body`
    CopowerElim {
        scrutinee: Box<Term>,
        cart: Name,
        lin: Name,
        body: Box<Term>,
    },
    /// `map (\x. body) array` over a real array.
    Map(Name, Box<Term>, Box<Term>),
    /// Uncurried right fold `foldr(f, init, array)`.
    Foldr(Box<Term>, Box<Term>, Box<Term>),
    RealLit(Vec<f64>),
}

pub fn var(x: &str) -> Term {
    Term::Var(Name::new(x))
}

pub fn lin_var(v: &str) -> Term {
    Term::LinVar(Name::new(v))
}

pub fn lit(xs: &[f64]) -> Term {
    Term::RealLit(xs.to_vec())
}

pub fn scalar(x: f64) -> Term {
    Term::RealLit(vec![x])
}

impl Term {
    pub fn let_(x: Name, a: Term, body: Term) -> Term {
        Term::Let(x, Box::new(a), Box::new(body))
    }
    pub fn lin_let(v: Name, a: Term, body: Term) -> Term {
        Term::LinLet(v, Box::new(a), Box::new(body))
    }
    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }
    pub fn fst(a: Term) -> Term {
        Term::Fst(Box::new(a))
    }
    pub fn snd(a: Term) -> Term {
        Term::Snd(Box::new(a))
    }
    pub fn lam(x: Name, ty: Ty, body: Term) -> Term {
        Term::Lam(x, ty, Box::new(body))
    }
    pub fn lin_lam(v: Name, ty: Ty, body: Term) -> Term {
        Term::LinLam(v, ty, Box::new(body))
    }
    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }
    pub fn lin_app(f: Term, a: Term) -> Term {
        Term::LinApp(Box::new(f), Box::new(a))
    }
    pub fn plus(a: Term, b: Term) -> Term {
        Term::Plus(Box::new(a), Box::new(b))
    }
    pub fn prim(op: &str, args: Vec<Term>) -> Term {
        Term::PrimOp(op.to_string(), args)
    }
    pub fn lin_op(op: &str, cargs: Vec<Term>, larg: Term) -> Term {
        Term::LinOp(op.to_string(), cargs, Box::new(larg))
    }
    pub fn copower_intro(a: Term, b: Term) -> Term {
        Term::CopowerIntro(Box::new(a), Box::new(b))
    }
    pub fn copower_elim(scrutinee: Term, cart: Name, lin: Name, body: Term) -> Term {
        Term::CopowerElim {
            scrutinee: Box::new(scrutinee),
            cart,
            lin,
            body: Box::new(body),
        }
    }
    pub fn map(x: Name, body: Term, arr: Term) -> Term {
        Term::Map(x, Box::new(body), Box::new(arr))
    }
    pub fn foldr(f: Term, init: Term, arr: Term) -> Term {
        Term::Foldr(Box::new(f), Box::new(init), Box::new(arr))
    }

    /// Right-nested tuple `<a, <b, <c, ...>>>`; a single element is itself.
    pub fn tuple(mut items: Vec<Term>) -> Term {
        match items.len() {
            0 => Term::UnitVal,
            1 => items.pop().unwrap(),
            _ => {
                let last = items.pop().unwrap();
                items.into_iter().rev().fold(last, |acc, t| Term::pair(t, acc))
            }
        }
    }

    /// Projection of component `i` out of a right-nested tuple of `k` items.
    pub fn tuple_proj(t: Term, i: usize, k: usize) -> Term {
        assert!(i < k);
        if k == 1 {
            return t;
        }
        let mut cur = t;
        for _ in 0..i {
            cur = Term::snd(cur);
        }
        if i + 1 < k {
            Term::fst(cur)
        } else {
            cur
        }
    }

    pub fn is_value_var(&self) -> bool {
        matches!(self, Term::Var(_) | Term::LinVar(_))
    }

    /// Immediate subterms, in evaluation order.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::LinVar(_) | Term::UnitVal | Term::Zero | Term::RealLit(_) => vec![],
            Term::Let(_, a, b) | Term::LinLet(_, a, b) => vec![a, b],
            Term::PrimOp(_, args) => args.iter().collect(),
            Term::LinOp(_, cs, l) => cs.iter().chain(std::iter::once(&**l)).collect(),
            Term::Pair(a, b) | Term::App(a, b) | Term::Plus(a, b) | Term::LinApp(a, b) | Term::CopowerIntro(a, b) => {
                vec![a, b]
            }
            Term::Fst(a) | Term::Snd(a) | Term::Lam(_, _, a) | Term::LinLam(_, _, a) => vec![a],
            Term::CopowerElim { scrutinee, body, .. } => vec![scrutinee, body],
            Term::Map(_, body, arr) => vec![body, arr],
            Term::Foldr(f, i, a) => vec![f, i, a],
        }
    }

    /// Rebuilds the node with each immediate subterm replaced by `f(child)`.
    /// Binder names are kept, so `f` must not move terms across binders.
    pub fn map_children<F: FnMut(&Term) -> Term>(&self, mut f: F) -> Term {
        match self {
            Term::Var(_) | Term::LinVar(_) | Term::UnitVal | Term::Zero | Term::RealLit(_) => self.clone(),
            Term::Let(x, a, b) => Term::let_(x.clone(), f(a), f(b)),
            Term::LinLet(x, a, b) => Term::lin_let(x.clone(), f(a), f(b)),
            Term::PrimOp(op, args) => Term::PrimOp(op.clone(), args.iter().map(f).collect()),
            Term::LinOp(op, cs, l) => {
                let cs = cs.iter().map(&mut f).collect();
                Term::LinOp(op.clone(), cs, Box::new(f(l)))
            }
            Term::Pair(a, b) => Term::pair(f(a), f(b)),
            Term::App(a, b) => Term::app(f(a), f(b)),
            Term::Plus(a, b) => Term::plus(f(a), f(b)),
            Term::LinApp(a, b) => Term::lin_app(f(a), f(b)),
            Term::CopowerIntro(a, b) => Term::copower_intro(f(a), f(b)),
            Term::Fst(a) => Term::fst(f(a)),
            Term::Snd(a) => Term::snd(f(a)),
            Term::Lam(x, ty, a) => Term::lam(x.clone(), ty.clone(), f(a)),
            Term::LinLam(x, ty, a) => Term::lin_lam(x.clone(), ty.clone(), f(a)),
            Term::CopowerElim {
                scrutinee,
                cart,
                lin,
                body,
            } => Term::copower_elim(f(scrutinee), cart.clone(), lin.clone(), f(body)),
            Term::Map(x, body, arr) => Term::map(x.clone(), f(body), f(arr)),
            Term::Foldr(g, i, a) => Term::foldr(f(g), f(i), f(a)),
        }
    }
}
