// SPDX-License-Identifier: Apache-2.0

//! A shared-pointer mirror of [`Term`], so closures capture their bodies
//! without copying.

use std::sync::Arc;

use crate::lang::name::Name;
use crate::lang::ops::Ns;
use crate::lang::term::Term;
use crate::registry::split_name;
use crate::stack::guard;

pub enum Ir {
    Var(Ns, Name),
    Let(Ns, Name, Arc<Ir>, Arc<Ir>),
    Lit(Vec<f64>),
    Unit,
    Zero,
    Pair(Arc<Ir>, Arc<Ir>),
    Fst(Arc<Ir>),
    Snd(Arc<Ir>),
    Lam(Ns, Name, Arc<Ir>),
    App(Arc<Ir>, Arc<Ir>),
    Plus(Arc<Ir>, Arc<Ir>),
    Prim(String, Option<usize>, Vec<Arc<Ir>>),
    LinOp(String, Vec<Arc<Ir>>, Arc<Ir>),
    CopIntro(Arc<Ir>, Arc<Ir>),
    CopElim(Arc<Ir>, Name, Name, Arc<Ir>),
    Map(Name, Arc<Ir>, Arc<Ir>),
    Foldr(Arc<Ir>, Arc<Ir>, Arc<Ir>),
}

pub fn lower(t: &Term) -> Arc<Ir> {
    guard(|| {
        let l = |t: &Term| lower(t);
        Arc::new(match t {
            Term::Var(x) => Ir::Var(Ns::Cart, x.clone()),
            Term::LinVar(x) => Ir::Var(Ns::Lin, x.clone()),
            Term::Let(x, a, b) => Ir::Let(Ns::Cart, x.clone(), l(a), l(b)),
            Term::LinLet(x, a, b) => Ir::Let(Ns::Lin, x.clone(), l(a), l(b)),
            Term::RealLit(xs) => Ir::Lit(xs.clone()),
            Term::UnitVal => Ir::Unit,
            Term::Zero => Ir::Zero,
            Term::Pair(a, b) => Ir::Pair(l(a), l(b)),
            Term::Fst(a) => Ir::Fst(l(a)),
            Term::Snd(a) => Ir::Snd(l(a)),
            Term::Lam(x, _, b) => Ir::Lam(Ns::Cart, x.clone(), l(b)),
            Term::LinLam(x, _, b) => Ir::Lam(Ns::Lin, x.clone(), l(b)),
            Term::App(f, a) | Term::LinApp(f, a) => Ir::App(l(f), l(a)),
            Term::Plus(a, b) => Ir::Plus(l(a), l(b)),
            Term::PrimOp(op, args) => {
                let (base, param) = split_name(op);
                Ir::Prim(base.to_string(), param, args.iter().map(l).collect())
            }
            Term::LinOp(op, cs, a) => Ir::LinOp(op.clone(), cs.iter().map(l).collect(), l(a)),
            Term::CopowerIntro(a, b) => Ir::CopIntro(l(a), l(b)),
            Term::CopowerElim {
                scrutinee,
                cart,
                lin,
                body,
            } => Ir::CopElim(l(scrutinee), cart.clone(), lin.clone(), l(body)),
            Term::Map(x, b, a) => Ir::Map(x.clone(), l(b), l(a)),
            Term::Foldr(f, i, a) => Ir::Foldr(l(f), l(i), l(a)),
        })
    })
}
