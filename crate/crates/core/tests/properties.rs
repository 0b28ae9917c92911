// SPDX-License-Identifier: Apache-2.0

//! Property tests for the invariants each stage promises, over random
//! syntax, types, values and generated programs.

use std::cell::Cell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chad_core::erase::monoid_for;
use chad_core::eval::{
    apply, env_from_point, env_tangent_value, eval, eval_closed, flatten_all, reference::eval_reference, Value,
};
use chad_core::frontend::parser::{parse_program, parse_term, ParseOptions};
use chad_core::frontend::pretty::pretty;
use chad_core::generate::{generate, GenConfig, Generated};
use chad_core::lang::ops::{alpha_eq, ast_size, free_vars, freshen_binders, occurrences, subst, Ns};
use chad_core::lang::{Fragment, Layer, Name, NameSupply, Term, Ty};
use chad_core::pipeline::{check_compiled, compile, Compiled, PipelineConfig, Source};
use chad_core::simplify::simplify_with;
use chad_core::transform::{ctx_primal, transform, transformed_type, type_primal, type_tangent, Mode};
use chad_core::typecheck::{check_cartesian, elaborate_source};
use chad_core::verify::{
    chad_fwd_jacobian, chad_rev_jacobian, copower_quotient_check, dual_jacobian, eval_at, linearity_check, max_rel_err,
    random_point, simplify_soundness, transpose_check, Evaluated, EXACT_ABS, EXACT_REL, LINEAR_REL, QUOTIENT_REL,
    SIMPLIFY_REL,
};
use chad_core::Scalar;

const MODES: [Mode; 2] = [Mode::Forward, Mode::Reverse];

fn program(seed: u64) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate(&mut rng, &GenConfig::default()).expect("generated programs load")
}

fn input_dim(src: &Source) -> usize {
    src.ctx.cart.iter().map(|(_, t)| t.flat_dim().unwrap()).sum()
}

fn cfg(simplify: bool, erase: bool) -> PipelineConfig {
    PipelineConfig {
        simplify,
        erase,
        ..PipelineConfig::default()
    }
}

fn compiled(src: &Source, mode: Mode, simplify: bool, erase: bool) -> Compiled {
    compile(src, mode, &cfg(simplify, erase)).expect("generated programs compile")
}

fn cheap_cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        ..ProptestConfig::default()
    }
}

/// Replaces the first `let` in pre-order by the substitution it stands for.
fn inline_first_let(t: &Term, supply: &mut NameSupply) -> Option<Term> {
    if let Term::Let(x, a, b) = t {
        return Some(subst(b, x, a, supply));
    }
    let mut done = false;
    let out = t.map_children(|c| {
        if done {
            return c.clone();
        }
        match inline_first_let(c, supply) {
            Some(n) => {
                done = true;
                n
            }
            None => c.clone(),
        }
    });
    done.then_some(out)
}

/// Substitutes a literal for every context variable.
fn close(src: &Source, point: &[f64]) -> Term {
    let mut supply = NameSupply::new();
    let mut t = src.term.clone();
    let mut pos = 0;
    for (x, ty) in &src.ctx.cart {
        let k = ty.flat_dim().unwrap();
        t = subst(&t, x, &Term::RealLit(point[pos..pos + k].to_vec()), &mut supply);
        pos += k;
    }
    t
}

// Syntax.

proptest! {
    #[test]
    fn alpha_eq_is_an_equivalence(seed in any::<u64>()) {
        let t = program(seed).source.term;
        let mut supply = NameSupply::new();
        let a = freshen_binders(&t, &mut supply);
        let b = freshen_binders(&a, &mut supply);
        prop_assert!(alpha_eq(&t, &t));
        prop_assert!(alpha_eq(&t, &a) && alpha_eq(&a, &t));
        prop_assert!(alpha_eq(&a, &b) && alpha_eq(&t, &b));
    }

    #[test]
    fn substituting_a_variable_for_itself_is_the_identity(seed in any::<u64>()) {
        let g = program(seed);
        let mut supply = NameSupply::new();
        for (x, _) in &g.source.ctx.cart {
            let t = subst(&g.source.term, x, &Term::Var(x.clone()), &mut supply);
            prop_assert!(alpha_eq(&t, &g.source.term));
        }
    }

    #[test]
    fn substitution_is_capture_avoiding_and_size_exact(seed in any::<u64>(), pick in 0usize..4) {
        // The replacement mentions names the generator uses for binders.
        let s = parse_term(["sin(y2) * x1", "<z3, p4>", "f5 (x6)", "x2"][pick]).unwrap();
        let g = program(seed);
        let t = &g.source.term;
        let x = Name::new("x1");
        let k = occurrences(Ns::Cart, &x, t);
        let out = subst(t, &x, &s, &mut NameSupply::new());
        prop_assert_eq!(ast_size(&out), ast_size(t) + k * (ast_size(&s) - 1));
        if k > 0 {
            let fv = free_vars(&out);
            prop_assert!(free_vars(&s).cart.iter().all(|y| fv.cart.contains(y)));
        }
        prop_assert!(!free_vars(&out).cart.contains(&x) || free_vars(&s).cart.contains(&x));
    }

    #[test]
    fn pretty_then_parse_round_trips_sources(seed in any::<u64>()) {
        let t = program(seed).source.term;
        let back = parse_term(&pretty(&t));
        prop_assert!(back.is_ok(), "{}", pretty(&t));
        prop_assert!(alpha_eq(&back.unwrap(), &t), "{}", pretty(&t));
    }

    #[test]
    fn parser_is_total(s in "[a-z0-9 \\\\.,:;|<>()+*{}=!_-]{0,60}") {
        let _ = parse_program(&s, &ParseOptions::with_default_n(3));
        let _ = parse_term(&s);
    }

    #[test]
    fn parser_is_total_on_damaged_programs(seed in any::<u64>(), cut in any::<prop::sample::Index>()) {
        let text = program(seed).text;
        let chars: Vec<char> = text.chars().collect();
        let i = cut.index(chars.len());
        let damaged: String = chars[..i].iter().chain(&chars[i + 1..]).collect();
        let _ = parse_program(&damaged, &ParseOptions::with_default_n(3));
    }
}

proptest! {
    #![proptest_config(cheap_cases(64))]

    #[test]
    fn pretty_then_parse_round_trips_compiled_outputs(seed in any::<u64>(), erase in any::<bool>()) {
        let g = program(seed);
        for mode in MODES {
            let c = compiled(&g.source, mode, true, erase);
            let back = parse_term(&pretty(&c.term));
            prop_assert!(back.is_ok(), "{}", pretty(&c.term));
            prop_assert!(alpha_eq(&back.unwrap(), &c.term), "{}", pretty(&c.term));
        }
    }
}

// Types.

fn any_ty() -> impl Strategy<Value = Ty> {
    let leaf = prop_oneof![
        (0usize..4).prop_map(Ty::Real),
        Just(Ty::Unit),
        (0usize..4).prop_map(Ty::LinReal),
        Just(Ty::LinUnit),
        Just(Ty::Unknown),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        (0u8..8, inner.clone(), inner).prop_map(|(k, a, b)| match k {
            0 => Ty::prod(a, b),
            1 => Ty::fun(a, b),
            2 => Ty::lin_prod(a, b),
            3 => Ty::power(a, b),
            4 => Ty::copower(a, b),
            5 => Ty::lin_fun(a, b),
            6 => Ty::list(a),
            _ => Ty::prod(a, b),
        })
    })
}

fn source_ty() -> impl Strategy<Value = Ty> {
    let leaf = prop_oneof![(0usize..4).prop_map(Ty::Real), Just(Ty::Unit)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        (any::<bool>(), inner.clone(), inner).prop_map(|(f, a, b)| if f { Ty::fun(a, b) } else { Ty::prod(a, b) })
    })
}

fn children(t: &Ty) -> Vec<&Ty> {
    match t {
        Ty::Prod(a, b) | Ty::Fun(a, b) | Ty::LinProd(a, b) | Ty::Power(a, b) | Ty::Copower(a, b) | Ty::LinFun(a, b) => {
            vec![a, b]
        }
        Ty::List(a) => vec![a],
        _ => vec![],
    }
}

proptest! {
    #[test]
    fn layers_partition_types(t in any_ty()) {
        let layers = [t.is_cartesian(), t.is_linear(), t.layer() == Layer::Unconstrained];
        prop_assert_eq!(layers.iter().filter(|b| **b).count(), 1);
        prop_assert_eq!(t.layer() == Layer::Unconstrained, t == Ty::Unknown);
    }

    #[test]
    fn valid_types_have_valid_components(t in any_ty()) {
        for f in [Fragment::Source, Fragment::Idealised, Fragment::Applied] {
            if t.validate(f).is_ok() {
                prop_assert!(children(&t).iter().all(|c| c.validate(f).is_ok()));
                if f == Fragment::Source {
                    prop_assert!(!t.is_linear());
                }
            }
        }
    }

    #[test]
    fn transformed_types_land_in_their_layers(t in source_ty()) {
        prop_assert!(t.validate(Fragment::Source).is_ok());
        for mode in MODES {
            let p = type_primal(mode, &t);
            let d = type_tangent(mode, &t);
            prop_assert!(p.is_cartesian() && p.validate(Fragment::Idealised).is_ok(), "{}", p);
            prop_assert!(d.is_linear() && d.validate(Fragment::Idealised).is_ok(), "{}", d);
        }
    }
}

// Typechecking and the transform.

proptest! {
    #![proptest_config(cheap_cases(128))]

    #[test]
    fn types_are_unique_up_to_renaming(seed in any::<u64>()) {
        let g = program(seed);
        let renamed = freshen_binders(&g.source.term, &mut NameSupply::new());
        let (_, ty) = elaborate_source(&g.source.ctx, &renamed).unwrap();
        prop_assert_eq!(ty, g.source.ty);
    }

    #[test]
    fn transform_preserves_types(seed in any::<u64>()) {
        let g = program(seed);
        let src = &g.source;
        for mode in MODES {
            let (t, ty) = transform(mode, &src.ctx, &src.term, &mut NameSupply::new()).unwrap();
            prop_assert_eq!(&ty, &src.ty);
            let got = check_cartesian(&ctx_primal(mode, &src.ctx), &t);
            prop_assert!(got.is_ok(), "{}", got.unwrap_err());
            let want = transformed_type(mode, &src.ctx, &ty);
            prop_assert!(got.unwrap().compatible(&want));
            for (simplify, erase) in [(false, true), (true, true), (true, false)] {
                let c = compiled(src, mode, simplify, erase);
                let got = check_compiled(&c);
                prop_assert!(got.is_ok(), "{}", got.unwrap_err());
                let got = got.unwrap();
                prop_assert!(got.applied_repr().compatible(&c.ty.applied_repr()), "{} vs {}", got, c.ty);
            }
        }
    }
}

proptest! {
    #![proptest_config(cheap_cases(64))]

    /// `let x = a in b` and `b[a/x]` have the same derivatives.
    #[test]
    fn transform_respects_let_substitution(seed in any::<u64>(), pseed in any::<u64>()) {
        let g = program(seed);
        let src = &g.source;
        let Some(inlined) = inline_first_let(&src.term, &mut NameSupply::new()) else {
            return Ok(());
        };
        let other = Source { term: inlined, ..src.clone() };
        let x = random_point(&mut ChaCha8Rng::seed_from_u64(pseed), input_dim(src));
        let err = max_rel_err(&eval_at(src, &x).unwrap(), &eval_at(&other, &x).unwrap(), EXACT_REL, EXACT_ABS);
        prop_assert!(err <= EXACT_REL);
        let jf = |s: &Source| chad_fwd_jacobian(s, &compiled(s, Mode::Forward, true, true), &x).unwrap();
        let jr = |s: &Source| chad_rev_jacobian(s, &compiled(s, Mode::Reverse, true, true), &x).unwrap();
        prop_assert!(jf(src).max_rel_err(&jf(&other), EXACT_REL, EXACT_ABS) <= EXACT_REL);
        prop_assert!(jr(src).max_rel_err(&jr(&other), EXACT_REL, EXACT_ABS) <= EXACT_REL);
    }

    #[test]
    fn modes_agree_with_the_dual_oracle(seed in any::<u64>(), pseed in any::<u64>()) {
        let g = program(seed);
        let src = &g.source;
        let x = random_point(&mut ChaCha8Rng::seed_from_u64(pseed), input_dim(src));
        let dual = dual_jacobian(src, &x).unwrap();
        let fwd = chad_fwd_jacobian(src, &compiled(src, Mode::Forward, true, true), &x).unwrap();
        let rev = chad_rev_jacobian(src, &compiled(src, Mode::Reverse, true, true), &x).unwrap();
        prop_assert!(fwd.max_rel_err(&dual, EXACT_REL, EXACT_ABS) <= EXACT_REL, "{}", g.text);
        prop_assert!(rev.max_rel_err(&fwd, EXACT_REL, EXACT_ABS) <= EXACT_REL, "{}", g.text);
    }

    #[test]
    fn derivatives_are_linear_and_transposes(seed in any::<u64>(), pseed in any::<u64>()) {
        let g = program(seed);
        let src = &g.source;
        let mut rng = ChaCha8Rng::seed_from_u64(pseed);
        let x = random_point(&mut rng, input_dim(src));
        let fwd = compiled(src, Mode::Forward, true, true);
        let rev = compiled(src, Mode::Reverse, true, true);
        for c in [&fwd, &rev] {
            let l = linearity_check(&Evaluated::new(src, c, &x).unwrap(), 3, &mut rng).unwrap();
            prop_assert!(l.zero_exact, "{}", g.text);
            prop_assert!(l.max_rel_err <= LINEAR_REL, "{}", g.text);
        }
        let t = transpose_check(src, &fwd, &rev, &x, 3, &mut rng).unwrap();
        prop_assert!(t.max_rel_discrepancy <= LINEAR_REL, "{}", g.text);
    }

    /// Erasing before evaluation changes nothing observable.
    #[test]
    fn erasure_commutes_with_evaluation(seed in any::<u64>(), pseed in any::<u64>()) {
        let g = program(seed);
        let src = &g.source;
        let mut rng = ChaCha8Rng::seed_from_u64(pseed);
        let x = random_point(&mut rng, input_dim(src));
        for mode in MODES {
            let ideal = Evaluated::new(src, &compiled(src, mode, false, false), &x).unwrap();
            let erased = Evaluated::new(src, &compiled(src, mode, false, true), &x).unwrap();
            prop_assert_eq!(&ideal.primal, &erased.primal);
            let k = match mode {
                Mode::Forward => input_dim(src),
                Mode::Reverse => src.ty.flat_dim().unwrap(),
            };
            let dx = random_point(&mut rng, k);
            let err = max_rel_err(&ideal.apply(&dx).unwrap(), &erased.apply(&dx).unwrap(), EXACT_REL, EXACT_ABS);
            prop_assert!(err <= EXACT_REL, "{}", g.text);
        }
    }
}

// The simplifier.

thread_local! {
    static OPS: Cell<u64> = const { Cell::new(0) };
}

fn tick() {
    OPS.with(|c| c.set(c.get() + 1));
}

/// `f64` that counts arithmetic and elementary-function evaluations.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Counted(f64);

macro_rules! counted_binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for Counted {
            type Output = Self;
            fn $f(self, o: Self) -> Self {
                tick();
                Counted(self.0 $op o.0)
            }
        }
    };
}

counted_binop!(Add, add, +);
counted_binop!(Sub, sub, -);
counted_binop!(Mul, mul, *);
counted_binop!(Div, div, /);

impl Neg for Counted {
    type Output = Self;
    fn neg(self) -> Self {
        tick();
        Counted(-self.0)
    }
}

impl Zero for Counted {
    fn zero() -> Self {
        Counted(0.0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
}

impl One for Counted {
    fn one() -> Self {
        Counted(1.0)
    }
}

impl Scalar for Counted {
    fn from_f64(x: f64) -> Self {
        Counted(x)
    }
    fn to_f64(&self) -> f64 {
        self.0
    }
    fn sin(&self) -> Self {
        tick();
        Counted(self.0.sin())
    }
    fn cos(&self) -> Self {
        tick();
        Counted(self.0.cos())
    }
    fn exp(&self) -> Self {
        tick();
        Counted(self.0.exp())
    }
}

/// Scalar operations spent evaluating `c` at `x` and applying its
/// derivative to `dx`.
fn work(src: &Source, c: &Compiled, x: &[f64], dx: &[f64]) -> u64 {
    let point: Vec<Counted> = x.iter().map(|v| Counted(*v)).collect();
    let dx: Vec<Counted> = dx.iter().map(|v| Counted(*v)).collect();
    OPS.with(|o| o.set(0));
    let env = env_from_point(&c.ctx, &point).unwrap();
    let v = eval(&env, &c.term).unwrap();
    let d = v.snd().unwrap();
    match c.mode {
        Mode::Forward => {
            let tys: Vec<Ty> = src
                .ctx
                .cart
                .iter()
                .map(|(_, t)| type_tangent(Mode::Forward, t))
                .collect();
            apply(&d, env_tangent_value(&tys, &dx).unwrap()).unwrap();
        }
        Mode::Reverse => {
            let out = type_tangent(Mode::Reverse, &src.ty);
            apply(&d, chad_core::eval::unflatten_all(&out, &dx).unwrap()).unwrap();
        }
    }
    OPS.with(|o| o.get())
}

proptest! {
    #![proptest_config(cheap_cases(64))]

    #[test]
    fn simplification_never_adds_work(seed in any::<u64>(), pseed in any::<u64>()) {
        let g = program(seed);
        let src = &g.source;
        let mut rng = ChaCha8Rng::seed_from_u64(pseed);
        let x = random_point(&mut rng, input_dim(src));
        for mode in MODES {
            let raw = compiled(src, mode, false, true);
            let simp = Compiled { term: simplify_with(&raw.term, &Default::default()).0, ..raw.clone() };
            let k = match mode {
                Mode::Forward => input_dim(src),
                Mode::Reverse => src.ty.flat_dim().unwrap(),
            };
            let dx = random_point(&mut rng, k);
            let (before, after) = (work(src, &raw, &x, &dx), work(src, &simp, &x, &dx));
            prop_assert!(after <= before, "{} -> {}: {}", before, after, g.text);
        }
    }

    #[test]
    fn simplification_preserves_types_and_meaning(seed in any::<u64>(), pseed in any::<u64>()) {
        let g = program(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(pseed);
        let r = simplify_soundness(&g.source, &PipelineConfig::default(), 2, &mut rng).unwrap();
        prop_assert!(r.type_preserved, "{}", g.text);
        prop_assert!(r.max_rel_err <= SIMPLIFY_REL, "{}: {}", g.text, r.max_rel_err);
    }

    #[test]
    fn simplification_is_idempotent(seed in any::<u64>()) {
        let g = program(seed);
        for mode in MODES {
            let c = compiled(&g.source, mode, true, true);
            let (again, st) = simplify_with(&c.term, &Default::default());
            prop_assert!(alpha_eq(&again, &c.term), "{}", g.text);
            prop_assert_eq!(st.fired(), 0);
        }
    }
}

// Copowers and monoids.

proptest! {
    #![proptest_config(cheap_cases(32))]

    #[test]
    fn copower_results_respect_the_quotient(seed in any::<u64>(), pseed in any::<u64>()) {
        let g = program(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(pseed);
        let r = copower_quotient_check(&g.source, &PipelineConfig::default(), 2, &mut rng).unwrap();
        prop_assert!(r.max_rel_err <= QUOTIENT_REL, "{}", g.text);
    }
}

fn lcopowfold_of(f: &str, items: Vec<(f64, f64)>) -> Value<f64> {
    let f: Value<f64> = eval_closed(&parse_term(f).unwrap()).unwrap();
    let list = Value::list(
        items
            .into_iter()
            .map(|(a, b)| Value::pair(Value::scalar(a), Value::scalar(b)))
            .collect(),
    );
    apply(&Value::partial("lcopowfold", vec![f]), list).unwrap()
}

const SCALE: &str = "\\a : R 1. \\\\v : lin R 1. lscale(sin(a); v)";

proptest! {
    #[test]
    fn lcopowfold_identifies_equal_cartesian_parts(a in -3.0f64..3.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let split = lcopowfold_of(SCALE, vec![(a, x), (a, y)]).as_reals().unwrap()[0];
        let merged = lcopowfold_of(SCALE, vec![(a, x + y)]).as_reals().unwrap()[0];
        prop_assert!((split - merged).abs() <= 1e-12 * split.abs().max(1.0));
    }

    #[test]
    fn lcopowfold_sends_zero_to_zero(_a in 0u8..1) {
        prop_assert!(matches!(lcopowfold_of(SCALE, vec![]), Value::Zero));
    }
}

fn first_order_ty() -> impl Strategy<Value = Ty> {
    let leaf = prop_oneof![(0usize..4).prop_map(Ty::Real), Just(Ty::Unit)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| Ty::prod(a, b))
    })
}

/// Integer-valued reals, so addition is exact and the laws hold bitwise.
fn value_of(ty: &Ty, rng: &mut ChaCha8Rng) -> Value<f64> {
    match ty {
        Ty::Real(n) => Value::reals((0..*n).map(|_| f64::from(rng.gen_range(-100i32..100))).collect()),
        Ty::Unit => Value::Unit,
        Ty::Prod(a, b) => Value::pair(value_of(a, rng), value_of(b, rng)),
        _ => unreachable!(),
    }
}

proptest! {
    #[test]
    fn plus_is_a_commutative_monoid(ty in first_order_ty(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (value_of(&ty, &mut rng), value_of(&ty, &mut rng), value_of(&ty, &mut rng));
        let m = monoid_for(&ty).unwrap();
        let z = m.zero_value::<f64>();
        prop_assert!(m.plus(&z, &a).unwrap().same_first_order(&a));
        prop_assert!(m.plus(&a, &z).unwrap().same_first_order(&a));
        prop_assert!(Value::Zero.plus(&a).unwrap().same_first_order(&a));
        prop_assert!(a.plus(&Value::Zero).unwrap().same_first_order(&a));
        prop_assert!(a.plus(&b).unwrap().same_first_order(&b.plus(&a).unwrap()));
        let l = a.plus(&b).unwrap().plus(&c).unwrap();
        let r = a.plus(&b.plus(&c).unwrap()).unwrap();
        prop_assert!(l.same_first_order(&r));
    }
}

// The evaluator.

proptest! {
    #![proptest_config(cheap_cases(128))]

    #[test]
    fn evaluation_is_deterministic_and_well_typed(seed in any::<u64>(), pseed in any::<u64>()) {
        let g = program(seed);
        let src = &g.source;
        let x = random_point(&mut ChaCha8Rng::seed_from_u64(pseed), input_dim(src));
        let env = env_from_point(&src.ctx, &x).unwrap();
        let a = eval(&env, &src.term).unwrap();
        let b = eval(&env, &src.term).unwrap();
        prop_assert!(a.same_first_order(&b));
        let flat = flatten_all(&src.ty, &a);
        prop_assert!(flat.is_ok());
        prop_assert_eq!(flat.unwrap().len(), src.ty.flat_dim().unwrap());
        for mode in MODES {
            let c = compiled(src, mode, true, true);
            let v = eval(&env_from_point(&c.ctx, &x).unwrap(), &c.term).unwrap();
            let primal = flatten_all(&src.ty, &v.fst().unwrap()).unwrap();
            prop_assert_eq!(&primal, &flatten_all(&src.ty, &a).unwrap());
        }
    }

    /// Environments and substitution of literals give the same value, and
    /// the substitution-based reference evaluator agrees.
    #[test]
    fn environments_agree_with_substitution(seed in any::<u64>(), pseed in any::<u64>()) {
        let g = program(seed);
        let src = &g.source;
        let x = random_point(&mut ChaCha8Rng::seed_from_u64(pseed), input_dim(src));
        let want = eval_at(src, &x).unwrap();
        let closed = close(src, &x);
        let v: Value<f64> = eval_closed(&closed).unwrap();
        prop_assert_eq!(&flatten_all(&src.ty, &v).unwrap(), &want);
        let mut got = Vec::new();
        eval_reference(&closed).unwrap().flatten(&mut got).unwrap();
        prop_assert!(max_rel_err(&got, &want, EXACT_REL, EXACT_ABS) <= EXACT_REL, "{}", g.text);
    }
}
