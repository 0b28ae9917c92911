// SPDX-License-Identifier: Apache-2.0

//! Structural utilities: free variables, alpha-equivalence, size and
//! capture-avoiding substitution.

use std::collections::{BTreeSet, HashMap};

use super::name::{Name, NameSupply};
use super::term::Term;
use crate::stack::guard;

/// The two variable namespaces. Linear and Cartesian identifiers never
/// capture each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ns {
    Cart,
    Lin,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeVars {
    pub cart: BTreeSet<Name>,
    pub lin: BTreeSet<Name>,
}

impl FreeVars {
    pub fn contains(&self, ns: Ns, x: &Name) -> bool {
        match ns {
            Ns::Cart => self.cart.contains(x),
            Ns::Lin => self.lin.contains(x),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cart.is_empty() && self.lin.is_empty()
    }

    pub fn all(&self) -> impl Iterator<Item = &Name> {
        self.cart.iter().chain(self.lin.iter())
    }
}

/// Binders introduced by a node, paired with the index (into `children()`)
/// of the subterm they scope over.
pub fn binders(t: &Term) -> Vec<(Ns, &Name, usize)> {
    match t {
        Term::Let(x, _, _) => vec![(Ns::Cart, x, 1)],
        Term::LinLet(v, _, _) => vec![(Ns::Lin, v, 1)],
        Term::Lam(x, _, _) => vec![(Ns::Cart, x, 0)],
        Term::LinLam(v, _, _) => vec![(Ns::Lin, v, 0)],
        Term::CopowerElim { cart, lin, .. } => vec![(Ns::Cart, cart, 1), (Ns::Lin, lin, 1)],
        Term::Map(x, _, _) => vec![(Ns::Cart, x, 0)],
        _ => vec![],
    }
}

pub fn free_vars(t: &Term) -> FreeVars {
    let mut out = FreeVars::default();
    let mut bound: HashMap<(Ns, Name), usize> = HashMap::new();
    fv_go(t, &mut bound, &mut out);
    out
}

fn fv_go(t: &Term, bound: &mut HashMap<(Ns, Name), usize>, out: &mut FreeVars) {
    guard(|| match t {
        Term::Var(x) => {
            if !bound.contains_key(&(Ns::Cart, x.clone())) {
                out.cart.insert(x.clone());
            }
        }
        Term::LinVar(v) => {
            if !bound.contains_key(&(Ns::Lin, v.clone())) {
                out.lin.insert(v.clone());
            }
        }
        _ => {
            let bs = binders(t);
            for (i, c) in t.children().into_iter().enumerate() {
                let scoped: Vec<(Ns, Name)> = bs
                    .iter()
                    .filter(|(_, _, j)| *j == i)
                    .map(|(ns, n, _)| (*ns, (*n).clone()))
                    .collect();
                for k in &scoped {
                    *bound.entry(k.clone()).or_insert(0) += 1;
                }
                fv_go(c, bound, out);
                for k in scoped {
                    let e = bound.get_mut(&k).unwrap();
                    *e -= 1;
                    if *e == 0 {
                        bound.remove(&k);
                    }
                }
            }
        }
    })
}

/// Number of free occurrences of `x` in namespace `ns`.
pub fn occurrences(ns: Ns, x: &Name, t: &Term) -> usize {
    guard(|| match t {
        Term::Var(y) => usize::from(ns == Ns::Cart && y == x),
        Term::LinVar(y) => usize::from(ns == Ns::Lin && y == x),
        _ => {
            let bs = binders(t);
            t.children()
                .into_iter()
                .enumerate()
                .map(|(i, c)| {
                    if bs.iter().any(|(bns, n, j)| *j == i && *bns == ns && *n == x) {
                        0
                    } else {
                        occurrences(ns, x, c)
                    }
                })
                .sum()
        }
    })
}

pub fn occurs_free(ns: Ns, x: &Name, t: &Term) -> bool {
    occurrences(ns, x, t) > 0
}

/// Node count; a real literal counts once whatever its length.
pub fn ast_size(t: &Term) -> usize {
    guard(|| 1 + t.children().into_iter().map(ast_size).sum::<usize>())
}

pub fn depth(t: &Term) -> usize {
    guard(|| 1 + t.children().into_iter().map(depth).max().unwrap_or(0))
}

/// Alpha-equivalence. Bound variables are compared by their de Bruijn
/// position, free ones by name; literals are compared bitwise.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    let mut env = AlphaEnv::default();
    alpha_go(a, b, &mut env)
}

#[derive(Default)]
struct AlphaEnv {
    left: Vec<(Ns, Name)>,
    right: Vec<(Ns, Name)>,
}

impl AlphaEnv {
    fn same_var(&self, ns: Ns, x: &Name, y: &Name) -> bool {
        let l = self.left.iter().rposition(|(n, m)| *n == ns && m == x);
        let r = self.right.iter().rposition(|(n, m)| *n == ns && m == y);
        match (l, r) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        }
    }
}

fn alpha_go(a: &Term, b: &Term, env: &mut AlphaEnv) -> bool {
    use Term::*;
    guard(|| match (a, b) {
        (Var(x), Var(y)) => env.same_var(Ns::Cart, x, y),
        (LinVar(x), LinVar(y)) => env.same_var(Ns::Lin, x, y),
        (UnitVal, UnitVal) | (Zero, Zero) => true,
        (RealLit(x), RealLit(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()),
        (PrimOp(f, xs), PrimOp(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_go(x, y, env))
        }
        (LinOp(f, xs, l), LinOp(g, ys, m)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_go(x, y, env)) && alpha_go(l, m, env)
        }
        (Lam(x, t, p), Lam(y, u, q)) | (LinLam(x, t, p), LinLam(y, u, q)) => {
            let ns = if matches!(a, Lam(..)) { Ns::Cart } else { Ns::Lin };
            t == u && under(env, &[(ns, x, y)], |env| alpha_go(p, q, env))
        }
        (Let(x, p1, p2), Let(y, q1, q2)) => {
            alpha_go(p1, q1, env) && under(env, &[(Ns::Cart, x, y)], |env| alpha_go(p2, q2, env))
        }
        (LinLet(x, p1, p2), LinLet(y, q1, q2)) => {
            alpha_go(p1, q1, env) && under(env, &[(Ns::Lin, x, y)], |env| alpha_go(p2, q2, env))
        }
        (Map(x, p1, p2), Map(y, q1, q2)) => {
            under(env, &[(Ns::Cart, x, y)], |env| alpha_go(p1, q1, env)) && alpha_go(p2, q2, env)
        }
        (
            CopowerElim {
                scrutinee: s1,
                cart: c1,
                lin: l1,
                body: b1,
            },
            CopowerElim {
                scrutinee: s2,
                cart: c2,
                lin: l2,
                body: b2,
            },
        ) => {
            alpha_go(s1, s2, env)
                && under(env, &[(Ns::Cart, c1, c2), (Ns::Lin, l1, l2)], |env| {
                    alpha_go(b1, b2, env)
                })
        }
        (Pair(p1, p2), Pair(q1, q2))
        | (App(p1, p2), App(q1, q2))
        | (Plus(p1, p2), Plus(q1, q2))
        | (LinApp(p1, p2), LinApp(q1, q2))
        | (CopowerIntro(p1, p2), CopowerIntro(q1, q2)) => {
            std::mem::discriminant(a) == std::mem::discriminant(b) && alpha_go(p1, q1, env) && alpha_go(p2, q2, env)
        }
        (Fst(p), Fst(q)) | (Snd(p), Snd(q)) => alpha_go(p, q, env),
        (Foldr(p1, p2, p3), Foldr(q1, q2, q3)) => {
            alpha_go(p1, q1, env) && alpha_go(p2, q2, env) && alpha_go(p3, q3, env)
        }
        _ => false,
    })
}

fn under<R>(env: &mut AlphaEnv, bs: &[(Ns, &Name, &Name)], f: impl FnOnce(&mut AlphaEnv) -> R) -> R {
    for (ns, x, y) in bs {
        env.left.push((*ns, (*x).clone()));
        env.right.push((*ns, (*y).clone()));
    }
    let r = f(env);
    for _ in bs {
        env.left.pop();
        env.right.pop();
    }
    r
}

/// Capture-avoiding substitution of `s` for the Cartesian variable `x`.
pub fn subst(t: &Term, x: &Name, s: &Term, supply: &mut NameSupply) -> Term {
    subst_ns(t, Ns::Cart, x, s, supply)
}

/// Capture-avoiding substitution of `s` for the linear variable `v`.
pub fn subst_lin(t: &Term, v: &Name, s: &Term, supply: &mut NameSupply) -> Term {
    subst_ns(t, Ns::Lin, v, s, supply)
}

pub fn subst_ns(t: &Term, ns: Ns, x: &Name, s: &Term, supply: &mut NameSupply) -> Term {
    let fvs = free_vars(s);
    let mut st = SubstState {
        ns,
        x,
        s,
        fvs: &fvs,
        supply,
    };
    st.go(t)
}

struct SubstState<'a> {
    ns: Ns,
    x: &'a Name,
    s: &'a Term,
    fvs: &'a FreeVars,
    supply: &'a mut NameSupply,
}

impl SubstState<'_> {
    fn go(&mut self, t: &Term) -> Term {
        guard(|| match t {
            Term::Var(y) if self.ns == Ns::Cart && y == self.x => self.s.clone(),
            Term::LinVar(y) if self.ns == Ns::Lin && y == self.x => self.s.clone(),
            Term::Var(_) | Term::LinVar(_) | Term::UnitVal | Term::Zero | Term::RealLit(_) => t.clone(),
            Term::Let(y, a, b) => {
                let a = self.go(a);
                let (y, b) = self.binder(Ns::Cart, y, b);
                Term::let_(y, a, b)
            }
            Term::LinLet(y, a, b) => {
                let a = self.go(a);
                let (y, b) = self.binder(Ns::Lin, y, b);
                Term::lin_let(y, a, b)
            }
            Term::Lam(y, ty, b) => {
                let (y, b) = self.binder(Ns::Cart, y, b);
                Term::lam(y, ty.clone(), b)
            }
            Term::LinLam(y, ty, b) => {
                let (y, b) = self.binder(Ns::Lin, y, b);
                Term::lin_lam(y, ty.clone(), b)
            }
            Term::Map(y, body, arr) => {
                let (y, body) = self.binder(Ns::Cart, y, body);
                let arr = self.go(arr);
                Term::map(y, body, arr)
            }
            Term::CopowerElim {
                scrutinee,
                cart,
                lin,
                body,
            } => {
                let scrutinee = self.go(scrutinee);
                let shadowed = (self.ns == Ns::Cart && cart == self.x) || (self.ns == Ns::Lin && lin == self.x);
                if shadowed || !occurs_free(self.ns, self.x, body) {
                    return Term::copower_elim(scrutinee, cart.clone(), lin.clone(), (**body).clone());
                }
                let mut body = (**body).clone();
                let mut cart = cart.clone();
                let mut lin = lin.clone();
                if self.fvs.contains(Ns::Cart, &cart) {
                    let c2 = self.supply.fresh(cart.as_str());
                    body = subst_ns(&body, Ns::Cart, &cart, &Term::Var(c2.clone()), self.supply);
                    cart = c2;
                }
                if self.fvs.contains(Ns::Lin, &lin) {
                    let l2 = self.supply.fresh(lin.as_str());
                    body = subst_ns(&body, Ns::Lin, &lin, &Term::LinVar(l2.clone()), self.supply);
                    lin = l2;
                }
                let body = self.go(&body);
                Term::copower_elim(scrutinee, cart, lin, body)
            }
            _ => t.map_children(|c| self.go(c)),
        })
    }

    fn binder(&mut self, bns: Ns, y: &Name, body: &Term) -> (Name, Term) {
        if (bns == self.ns && y == self.x) || !occurs_free(self.ns, self.x, body) {
            return (y.clone(), body.clone());
        }
        if self.fvs.contains(bns, y) {
            let y2 = self.supply.fresh(y.as_str());
            let renamed = match bns {
                Ns::Cart => subst_ns(body, Ns::Cart, y, &Term::Var(y2.clone()), self.supply),
                Ns::Lin => subst_ns(body, Ns::Lin, y, &Term::LinVar(y2.clone()), self.supply),
            };
            (y2, self.go(&renamed))
        } else {
            (y.clone(), self.go(body))
        }
    }
}

/// Renames every binder to a fresh name. The result is alpha-equivalent to
/// the input and no two binders share a name, nor shadow a free variable.
pub fn freshen_binders(t: &Term, supply: &mut NameSupply) -> Term {
    let mut env: Vec<(Ns, Name, Name)> = Vec::new();
    freshen_go(t, &mut env, supply)
}

fn freshen_go(t: &Term, env: &mut Vec<(Ns, Name, Name)>, supply: &mut NameSupply) -> Term {
    let lookup = |env: &Vec<(Ns, Name, Name)>, ns: Ns, x: &Name| {
        env.iter()
            .rev()
            .find(|(n, old, _)| *n == ns && old == x)
            .map(|(_, _, new)| new.clone())
    };
    guard(|| match t {
        Term::Var(x) => Term::Var(lookup(env, Ns::Cart, x).unwrap_or_else(|| x.clone())),
        Term::LinVar(x) => Term::LinVar(lookup(env, Ns::Lin, x).unwrap_or_else(|| x.clone())),
        Term::Let(x, a, b) => {
            let a = freshen_go(a, env, supply);
            let x2 = supply.fresh(x.as_str());
            env.push((Ns::Cart, x.clone(), x2.clone()));
            let b = freshen_go(b, env, supply);
            env.pop();
            Term::let_(x2, a, b)
        }
        Term::LinLet(x, a, b) => {
            let a = freshen_go(a, env, supply);
            let x2 = supply.fresh(x.as_str());
            env.push((Ns::Lin, x.clone(), x2.clone()));
            let b = freshen_go(b, env, supply);
            env.pop();
            Term::lin_let(x2, a, b)
        }
        Term::Lam(x, ty, b) | Term::LinLam(x, ty, b) => {
            let ns = if matches!(t, Term::Lam(..)) { Ns::Cart } else { Ns::Lin };
            let x2 = supply.fresh(x.as_str());
            env.push((ns, x.clone(), x2.clone()));
            let b = freshen_go(b, env, supply);
            env.pop();
            match ns {
                Ns::Cart => Term::lam(x2, ty.clone(), b),
                Ns::Lin => Term::lin_lam(x2, ty.clone(), b),
            }
        }
        Term::Map(x, body, arr) => {
            let x2 = supply.fresh(x.as_str());
            env.push((Ns::Cart, x.clone(), x2.clone()));
            let body = freshen_go(body, env, supply);
            env.pop();
            let arr = freshen_go(arr, env, supply);
            Term::map(x2, body, arr)
        }
        Term::CopowerElim {
            scrutinee,
            cart,
            lin,
            body,
        } => {
            let scrutinee = freshen_go(scrutinee, env, supply);
            let c2 = supply.fresh(cart.as_str());
            let l2 = supply.fresh(lin.as_str());
            env.push((Ns::Cart, cart.clone(), c2.clone()));
            env.push((Ns::Lin, lin.clone(), l2.clone()));
            let body = freshen_go(body, env, supply);
            env.pop();
            env.pop();
            Term::copower_elim(scrutinee, c2, l2, body)
        }
        _ => t.map_children(|c| freshen_go(c, env, supply)),
    })
}

/// Like [`freshen_binders`] but only renames a binder whose name is already
/// taken by a free variable, a name in `taken`, or an earlier binder. Output
/// stays readable when the input had no shadowing.
pub fn uniquify_binders(t: &Term, taken: &BTreeSet<Name>, supply: &mut NameSupply) -> Term {
    let mut seen: BTreeSet<Name> = taken.clone();
    seen.extend(free_vars(t).all().cloned());
    let mut env: Vec<(Ns, Name, Name)> = Vec::new();
    uniquify_go(t, &mut env, &mut seen, supply)
}

fn uniquify_go(t: &Term, env: &mut Vec<(Ns, Name, Name)>, seen: &mut BTreeSet<Name>, supply: &mut NameSupply) -> Term {
    let lookup = |env: &Vec<(Ns, Name, Name)>, ns: Ns, x: &Name| {
        env.iter()
            .rev()
            .find(|(n, old, _)| *n == ns && old == x)
            .map(|(_, _, new)| new.clone())
    };
    let pick = |x: &Name, seen: &mut BTreeSet<Name>, supply: &mut NameSupply| {
        let y = if seen.contains(x) {
            supply.fresh(x.as_str())
        } else {
            x.clone()
        };
        seen.insert(y.clone());
        y
    };
    guard(|| match t {
        Term::Var(x) => Term::Var(lookup(env, Ns::Cart, x).unwrap_or_else(|| x.clone())),
        Term::LinVar(x) => Term::LinVar(lookup(env, Ns::Lin, x).unwrap_or_else(|| x.clone())),
        _ => {
            let bs: Vec<(Ns, Name, usize)> = binders(t).into_iter().map(|(n, x, i)| (n, x.clone(), i)).collect();
            if bs.is_empty() {
                return t.map_children(|c| uniquify_go(c, env, seen, supply));
            }
            let renamed: Vec<(Ns, Name, Name, usize)> = bs
                .iter()
                .map(|(n, x, i)| (*n, x.clone(), pick(x, seen, supply), *i))
                .collect();
            let mut idx = 0;
            let out = t.map_children(|c| {
                let here: Vec<_> = renamed.iter().filter(|r| r.3 == idx).collect();
                idx += 1;
                for (n, old, new, _) in &here {
                    env.push((*n, old.clone(), new.clone()));
                }
                let c2 = uniquify_go(c, env, seen, supply);
                for _ in &here {
                    env.pop();
                }
                c2
            });
            rename_binders(out, &renamed.iter().map(|r| r.2.clone()).collect::<Vec<_>>())
        }
    })
}

/// Replaces the binder names of the outermost node, in [`binders`] order.
fn rename_binders(t: Term, names: &[Name]) -> Term {
    match t {
        Term::Let(_, a, b) => Term::Let(names[0].clone(), a, b),
        Term::LinLet(_, a, b) => Term::LinLet(names[0].clone(), a, b),
        Term::Lam(_, ty, b) => Term::Lam(names[0].clone(), ty, b),
        Term::LinLam(_, ty, b) => Term::LinLam(names[0].clone(), ty, b),
        Term::Map(_, b, a) => Term::Map(names[0].clone(), b, a),
        Term::CopowerElim { scrutinee, body, .. } => Term::CopowerElim {
            scrutinee,
            cart: names[0].clone(),
            lin: names[1].clone(),
            body,
        },
        other => other,
    }
}

/// All names occurring anywhere in `t`, bound or free.
pub fn all_names(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    all_names_go(t, &mut out);
    out
}

fn all_names_go(t: &Term, out: &mut BTreeSet<Name>) {
    guard(|| {
        match t {
            Term::Var(x) | Term::LinVar(x) => {
                out.insert(x.clone());
            }
            _ => {
                for (_, n, _) in binders(t) {
                    out.insert(n.clone());
                }
            }
        }
        for c in t.children() {
            all_names_go(c, out);
        }
    })
}
