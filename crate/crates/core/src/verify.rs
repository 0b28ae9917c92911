// SPDX-License-Identifier: Apache-2.0

//! Derivative oracles and the checks that compare them against the
//! transformed programs: finite differences, dual numbers, Jacobians
//! assembled from both CHAD modes, and transpose and linearity checks.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eval::{
    apply, env_from_point, env_tangent_value, eval, flatten_all, flatten_env_tangent, with_copower_quotient, EvalError,
    Value,
};
use crate::lang::ty::Ty;
use crate::pipeline::{check_compiled, compile, Compiled, PipelineConfig, PipelineError, Source};
use crate::scalar::Dual;
use crate::simplify::{simplify_with, SimplifyOptions, SimplifyStats};
use crate::transform::{type_tangent, Mode};
use crate::typecheck::check_cartesian;

/// Relative tolerance of comparisons between exact derivative modes.
pub const EXACT_REL: f64 = 1e-9;
/// Absolute floor of comparisons between exact derivative modes.
pub const EXACT_ABS: f64 = 1e-12;
/// Relative tolerance against finite differences.
pub const FD_REL: f64 = 1e-4;
/// Absolute floor against finite differences.
pub const FD_ABS: f64 = 1e-7;
/// Tolerance of the linearity and transpose checks.
pub const LINEAR_REL: f64 = 1e-10;
/// Tolerance of Jacobians computed with and without simplification.
pub const SIMPLIFY_REL: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("non-finite result at {0:?}")]
    NonFiniteResult(Vec<f64>),
    #[error("program is not first-order: {0}")]
    NotFirstOrder(Ty),
    #[error("transformed program did not produce a (primal, derivative) pair")]
    Shape,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

type Res<T> = Result<T, VerifyError>;

/// Row-major `rows × cols` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobian {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
}

impl Jacobian {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Jacobian {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.entries[i * self.cols + j] = x;
    }

    fn from_columns(rows: usize, cols: Vec<Vec<f64>>) -> Self {
        let mut j = Jacobian::zeros(rows, cols.len());
        for (c, col) in cols.iter().enumerate() {
            for (r, x) in col.iter().enumerate() {
                j.set(r, c, *x);
            }
        }
        j
    }

    fn from_rows(cols: usize, rows: Vec<Vec<f64>>) -> Self {
        Jacobian {
            rows: rows.len(),
            cols,
            entries: rows.concat(),
        }
    }

    /// Largest entrywise error of `self` against `reference`, see [`rel_err`].
    pub fn max_rel_err(&self, reference: &Jacobian, rel: f64, abs: f64) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (reference.rows, reference.cols),
            "Jacobian shapes differ"
        );
        max_rel_err(&self.entries, &reference.entries, rel, abs)
    }
}

/// `|a − b|` relative to the larger magnitude, where magnitudes below
/// `abs / rel` count as `abs / rel`. The result is at most `rel` exactly when
/// `|a − b| ≤ max(rel·max(|a|, |b|), abs)`.
pub fn rel_err(a: f64, b: f64, rel: f64, abs: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let d = (a - b).abs();
    if !d.is_finite() {
        return f64::INFINITY;
    }
    d / a.abs().max(b.abs()).max(abs / rel)
}

pub fn max_rel_err(a: &[f64], b: &[f64], rel: f64, abs: f64) -> f64 {
    assert_eq!(a.len(), b.len(), "vectors differ in length");
    a.iter()
        .zip(b)
        .map(|(x, y)| rel_err(*x, *y, rel, abs))
        .fold(0.0, f64::max)
}

fn dims(src: &Source) -> Res<(usize, usize)> {
    let mut n = 0;
    for (_, t) in &src.ctx.cart {
        n += t.flat_dim().ok_or_else(|| VerifyError::NotFirstOrder(t.clone()))?;
    }
    let m = src
        .ty
        .flat_dim()
        .ok_or_else(|| VerifyError::NotFirstOrder(src.ty.clone()))?;
    Ok((m, n))
}

fn finite(xs: Vec<f64>, at: &[f64]) -> Res<Vec<f64>> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(xs)
    } else {
        Err(VerifyError::NonFiniteResult(at.to_vec()))
    }
}

/// Evaluates the source program at a flat point.
pub fn eval_at(src: &Source, point: &[f64]) -> Res<Vec<f64>> {
    let env = env_from_point(&src.ctx, point)?;
    Ok(flatten_all(&src.ty, &eval(&env, &src.term)?)?)
}

/// Central differences, `h = h_rel · max(1, |x_j|)` per coordinate.
pub fn fd_jacobian(src: &Source, point: &[f64], h_rel: f64) -> Res<Jacobian> {
    let (m, n) = dims(src)?;
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let h = h_rel * point[j].abs().max(1.0);
        let mut up = point.to_vec();
        let mut down = point.to_vec();
        up[j] += h;
        down[j] -= h;
        let fu = finite(eval_at(src, &up)?, &up)?;
        let fd = finite(eval_at(src, &down)?, &down)?;
        cols.push(fu.iter().zip(&fd).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    Ok(Jacobian::from_columns(m, cols))
}

/// `J · direction` by evaluating the source program over dual numbers.
pub fn dual_jacobian_column(src: &Source, point: &[f64], direction: &[f64]) -> Res<Vec<f64>> {
    let xs: Vec<Dual<f64>> = point.iter().zip(direction).map(|(x, d)| Dual::new(*x, *d)).collect();
    let env = env_from_point(&src.ctx, &xs)?;
    let out = flatten_all(&src.ty, &eval(&env, &src.term)?)?;
    finite(out.iter().map(|d| d.eps).collect(), point)
}

pub fn dual_jacobian(src: &Source, point: &[f64]) -> Res<Jacobian> {
    let (m, n) = dims(src)?;
    let cols = (0..n)
        .map(|j| dual_jacobian_column(src, point, &basis(n, j)))
        .collect::<Res<Vec<_>>>()?;
    Ok(Jacobian::from_columns(m, cols))
}

fn basis(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}

/// A transformed program evaluated at one point: the primal result and the
/// emitted (transposed) derivative as a function on flat vectors.
pub struct Evaluated {
    pub mode: Mode,
    pub primal: Vec<f64>,
    derivative: Value<f64>,
    env_tys: Vec<Ty>,
    out_ty: Ty,
}

impl Evaluated {
    pub fn new(src: &Source, c: &Compiled, point: &[f64]) -> Res<Self> {
        let env = env_from_point(&c.ctx, point)?;
        let v = eval(&env, &c.term)?;
        let (p, d) = match &v {
            Value::Pair(p) => (p.0.clone(), p.1.clone()),
            _ => return Err(VerifyError::Shape),
        };
        Ok(Evaluated {
            mode: c.mode,
            primal: flatten_all(&src.ty, &p)?,
            derivative: d,
            env_tys: src.ctx.cart.iter().map(|(_, t)| type_tangent(c.mode, t)).collect(),
            out_ty: type_tangent(c.mode, &src.ty),
        })
    }

    /// Applies the derivative: tangent to tangent in forward mode, output
    /// cotangent to environment cotangent in reverse mode.
    pub fn apply(&self, xs: &[f64]) -> Res<Vec<f64>> {
        match self.mode {
            Mode::Forward => {
                let arg = env_tangent_value(&self.env_tys, xs)?;
                let out = apply(&self.derivative, arg)?;
                Ok(flatten_all(&self.out_ty, &out)?)
            }
            Mode::Reverse => {
                let arg = crate::eval::unflatten_all(&self.out_ty, xs)?;
                let out = apply(&self.derivative, arg)?;
                Ok(flatten_env_tangent(&self.env_tys, &out)?)
            }
        }
    }

    fn input_dim(&self) -> usize {
        match self.mode {
            Mode::Forward => self.env_tys.iter().map(|t| t.flat_dim().unwrap_or(0)).sum(),
            Mode::Reverse => self.out_ty.flat_dim().unwrap_or(0),
        }
    }
}

pub fn chad_fwd_jacobian(src: &Source, c: &Compiled, point: &[f64]) -> Res<Jacobian> {
    let (m, n) = dims(src)?;
    let ev = Evaluated::new(src, c, point)?;
    let cols = (0..n)
        .map(|j| ev.apply(&basis(n, j)).and_then(|c| finite(c, point)))
        .collect::<Res<Vec<_>>>()?;
    Ok(Jacobian::from_columns(m, cols))
}

pub fn chad_rev_jacobian(src: &Source, c: &Compiled, point: &[f64]) -> Res<Jacobian> {
    let (m, n) = dims(src)?;
    let ev = Evaluated::new(src, c, point)?;
    let rows = (0..m)
        .map(|i| ev.apply(&basis(m, i)).and_then(|r| finite(r, point)))
        .collect::<Res<Vec<_>>>()?;
    Ok(Jacobian::from_rows(n, rows))
}

/// Uniform point in `[−2, 2)ⁿ`.
pub fn random_point(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransposeReport {
    pub trials: usize,
    /// Largest `|⟨Lᵀw, v⟩ − ⟨w, Lv⟩|` relative to the larger pairing.
    pub max_rel_discrepancy: f64,
}

/// Compares `⟨Dᵀf(x)(w), v⟩` with `⟨w, Df(x)(v)⟩` for random `v`, `w`
/// without assembling either matrix.
pub fn transpose_check(
    src: &Source,
    fwd: &Compiled,
    rev: &Compiled,
    point: &[f64],
    trials: usize,
    rng: &mut impl Rng,
) -> Res<TransposeReport> {
    let (m, n) = dims(src)?;
    let f = Evaluated::new(src, fwd, point)?;
    let r = Evaluated::new(src, rev, point)?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let v = random_point(rng, n);
        let w = random_point(rng, m);
        let lhs = dot(&r.apply(&w)?, &v);
        let rhs = dot(&w, &f.apply(&v)?);
        worst = worst.max(rel_err(lhs, rhs, LINEAR_REL, EXACT_ABS));
    }
    Ok(TransposeReport {
        trials,
        max_rel_discrepancy: worst,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearityReport {
    /// `L(0)` was exactly zero.
    pub zero_exact: bool,
    pub max_rel_err: f64,
}

/// `L(0) = 0` and `L(αv + w) = αL(v) + L(w)` for the emitted derivative.
pub fn linearity_check(ev: &Evaluated, trials: usize, rng: &mut impl Rng) -> Res<LinearityReport> {
    let k = ev.input_dim();
    let zero_exact = ev.apply(&vec![0.0; k])?.iter().all(|x| *x == 0.0);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let a: f64 = rng.gen_range(-2.0..2.0);
        let v = random_point(rng, k);
        let w = random_point(rng, k);
        let comb: Vec<f64> = v.iter().zip(&w).map(|(x, y)| a * x + y).collect();
        let lhs = ev.apply(&comb)?;
        let lv = ev.apply(&v)?;
        let lw = ev.apply(&w)?;
        let rhs: Vec<f64> = lv.iter().zip(&lw).map(|(x, y)| a * x + y).collect();
        worst = worst.max(max_rel_err(&lhs, &rhs, LINEAR_REL, EXACT_ABS));
    }
    Ok(LinearityReport {
        zero_exact,
        max_rel_err: worst,
    })
}

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub program: String,
    /// Which comparison, e.g. `fwd-vs-dual`.
    pub mode: String,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<ReportRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn to_text(&self) -> String {
        let w = self.rows.iter().map(|r| r.program.len()).max().unwrap_or(7).max(7);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<w$}  {:<20}  {:>12}  {:>9}  {:>6}  result",
            "program", "mode", "max-rel-err", "tolerance", "seed"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<w$}  {:<20}  {:>12.3e}  {:>9.0e}  {:>6}  {}",
                r.program,
                r.mode,
                r.max_rel_err,
                r.tolerance,
                r.seed,
                if r.passed { "ok" } else { "FAIL" }
            );
        }
        s
    }

    pub fn to_jsonl(&self) -> String {
        self.rows
            .iter()
            .map(|r| serde_json::to_string(r).expect("report rows serialize") + "\n")
            .collect()
    }
}

/// Everything the oracles need for one program: the source and its two
/// transforms, plus unsimplified ones for the simplify-invariance check.
pub struct Prepared {
    pub src: Source,
    pub fwd: Compiled,
    pub rev: Compiled,
    pub fwd_raw: Compiled,
    pub rev_raw: Compiled,
}

pub fn prepare(src: Source, cfg: &PipelineConfig) -> Res<Prepared> {
    let raw = PipelineConfig {
        simplify: false,
        ..cfg.clone()
    };
    Ok(Prepared {
        fwd: compile(&src, Mode::Forward, cfg)?,
        rev: compile(&src, Mode::Reverse, cfg)?,
        fwd_raw: compile(&src, Mode::Forward, &raw)?,
        rev_raw: compile(&src, Mode::Reverse, &raw)?,
        src,
    })
}

#[derive(Default)]
struct Worst {
    fwd_dual: f64,
    rev_fwd: f64,
    fwd_fd: f64,
    rev_fd: f64,
    primal: f64,
    transpose: f64,
    linear: f64,
    zero_exact: bool,
    simplify: f64,
}

/// Runs every oracle comparison at `cfg.trials` seeded random points.
pub fn verify_program(name: &str, p: &Prepared, cfg: &PipelineConfig) -> Res<VerifyReport> {
    let (_, n) = dims(&p.src)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = Worst {
        zero_exact: true,
        ..Worst::default()
    };
    for _ in 0..cfg.trials {
        let x = random_point(&mut rng, n);
        let dual = dual_jacobian(&p.src, &x)?;
        let fd = fd_jacobian(&p.src, &x, cfg.h_rel)?;
        let jf = chad_fwd_jacobian(&p.src, &p.fwd, &x)?;
        let jr = chad_rev_jacobian(&p.src, &p.rev, &x)?;
        w.fwd_dual = w.fwd_dual.max(jf.max_rel_err(&dual, EXACT_REL, EXACT_ABS));
        w.rev_fwd = w.rev_fwd.max(jr.max_rel_err(&jf, EXACT_REL, EXACT_ABS));
        w.fwd_fd = w.fwd_fd.max(jf.max_rel_err(&fd, FD_REL, FD_ABS));
        w.rev_fd = w.rev_fd.max(jr.max_rel_err(&fd, FD_REL, FD_ABS));

        let base = eval_at(&p.src, &x)?;
        for c in [&p.fwd, &p.rev] {
            let ev = Evaluated::new(&p.src, c, &x)?;
            if ev
                .primal
                .iter()
                .map(|v| v.to_bits())
                .ne(base.iter().map(|v| v.to_bits()))
            {
                w.primal = f64::INFINITY;
            }
            let lin = linearity_check(&ev, 3, &mut rng)?;
            w.zero_exact &= lin.zero_exact;
            w.linear = w.linear.max(lin.max_rel_err);
        }
        let t = transpose_check(&p.src, &p.fwd, &p.rev, &x, 3, &mut rng)?;
        w.transpose = w.transpose.max(t.max_rel_discrepancy);

        let jf_raw = chad_fwd_jacobian(&p.src, &p.fwd_raw, &x)?;
        let jr_raw = chad_rev_jacobian(&p.src, &p.rev_raw, &x)?;
        w.simplify = w
            .simplify
            .max(jf.max_rel_err(&jf_raw, SIMPLIFY_REL, EXACT_ABS))
            .max(jr.max_rel_err(&jr_raw, SIMPLIFY_REL, EXACT_ABS));
    }
    let row = |mode: &str, err: f64, tol: f64| ReportRow {
        program: name.to_string(),
        mode: mode.to_string(),
        max_rel_err: err,
        tolerance: tol,
        seed: cfg.seed,
        passed: err <= tol,
    };
    Ok(VerifyReport {
        rows: vec![
            row("fwd-vs-dual", w.fwd_dual, EXACT_REL),
            row("rev-vs-fwd", w.rev_fwd, EXACT_REL),
            row("fwd-vs-fd", w.fwd_fd, FD_REL),
            row("rev-vs-fd", w.rev_fd, FD_REL),
            row("primal-bit-exact", w.primal, 0.0),
            row("transpose", w.transpose, LINEAR_REL),
            row(
                "linearity",
                if w.zero_exact { w.linear } else { f64::INFINITY },
                LINEAR_REL,
            ),
            row("simplify-invariance", w.simplify, SIMPLIFY_REL),
        ],
    })
}

#[derive(Clone, Debug)]
pub struct SoundnessReport {
    /// Every simplified term re-checked at the type it had before, up to
    /// the unknown type `zero` synthesizes.
    pub type_preserved: bool,
    pub max_rel_err: f64,
    pub stats: SimplifyStats,
}

/// Simplifies the source program and its unsimplified transforms, erased
/// and not, and compares types and values before and after. For the
/// transforms both the primal and the derivative applied to a random
/// vector are compared.
pub fn simplify_soundness(
    src: &Source,
    cfg: &PipelineConfig,
    points: usize,
    rng: &mut impl Rng,
) -> Res<SoundnessReport> {
    let (_, n) = dims(src)?;
    let mut stats = SimplifyStats::default();
    let mut type_preserved = true;
    let mut worst: f64 = 0.0;

    let (s, st) = simplify_with(&src.term, &SimplifyOptions::default());
    stats.merge(&st);
    type_preserved &= check_cartesian(&src.ctx, &s).is_ok_and(|t| t.compatible(&src.ty));
    let simplified = Source { term: s, ..src.clone() };
    for _ in 0..points {
        let x = random_point(rng, n);
        worst = worst.max(max_rel_err(
            &eval_at(&simplified, &x)?,
            &eval_at(src, &x)?,
            SIMPLIFY_REL,
            EXACT_ABS,
        ));
    }

    for mode in [Mode::Forward, Mode::Reverse] {
        for erase in [true, false] {
            let raw_cfg = PipelineConfig {
                simplify: false,
                erase,
                ..cfg.clone()
            };
            let raw = compile(src, mode, &raw_cfg)?;
            let before = check_compiled(&raw).map_err(PipelineError::from)?;
            let (s, st) = simplify_with(&raw.term, &SimplifyOptions::default());
            stats.merge(&st);
            let simp = Compiled { term: s, ..raw.clone() };
            type_preserved &= check_compiled(&simp).is_ok_and(|t| t.compatible(&before));
            for _ in 0..points {
                let x = random_point(rng, n);
                let a = Evaluated::new(src, &raw, &x)?;
                let b = Evaluated::new(src, &simp, &x)?;
                worst = worst.max(max_rel_err(&b.primal, &a.primal, SIMPLIFY_REL, EXACT_ABS));
                let dx = random_point(rng, a.input_dim());
                worst = worst.max(max_rel_err(&b.apply(&dx)?, &a.apply(&dx)?, SIMPLIFY_REL, EXACT_ABS));
            }
        }
    }
    Ok(SoundnessReport {
        type_preserved,
        max_rel_err: worst,
        stats,
    })
}

/// Tolerance of gradients computed with and without copower merging.
pub const QUOTIENT_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct QuotientReport {
    pub max_rel_err: f64,
    /// Pairs merged across all evaluations; zero means the check was vacuous.
    pub merged: usize,
}

/// Reverse Jacobians of the idealised (unerased) program, simplified and
/// not, with and without merging copower entries at equal points.
pub fn copower_quotient_check(
    src: &Source,
    cfg: &PipelineConfig,
    points: usize,
    rng: &mut impl Rng,
) -> Res<QuotientReport> {
    let (_, n) = dims(src)?;
    let mut report = QuotientReport {
        max_rel_err: 0.0,
        merged: 0,
    };
    for simplify in [false, true] {
        let c = compile(
            src,
            Mode::Reverse,
            &PipelineConfig {
                simplify,
                erase: false,
                ..cfg.clone()
            },
        )?;
        for _ in 0..points {
            let x = random_point(rng, n);
            let plain = chad_rev_jacobian(src, &c, &x)?;
            let (merged, k) = with_copower_quotient(|| chad_rev_jacobian(src, &c, &x));
            report.merged += k;
            report.max_rel_err = report
                .max_rel_err
                .max(merged?.max_rel_err(&plain, QUOTIENT_REL, EXACT_ABS));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::load;

    fn src(text: &str) -> Source {
        load(text, 3).unwrap()
    }

    fn both(s: &Source, x: &[f64]) -> (Jacobian, Jacobian) {
        let cfg = PipelineConfig::default();
        let f = compile(s, Mode::Forward, &cfg).unwrap();
        let r = compile(s, Mode::Reverse, &cfg).unwrap();
        (
            chad_fwd_jacobian(s, &f, x).unwrap(),
            chad_rev_jacobian(s, &r, x).unwrap(),
        )
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn fd_of_square_and_sine() {
        let j = fd_jacobian(&src("x : R 1 |- x * x"), &[3.0], 1e-5).unwrap();
        close(&j.entries, &[6.0], 1e-6);
        let j = fd_jacobian(&src("x : R 1 |- sin(x)"), &[0.0], 1e-5).unwrap();
        close(&j.entries, &[1.0], 1e-9);
    }

    #[test]
    fn fd_of_constant_is_zero() {
        let j = fd_jacobian(&src("x : R 1, y : R 1 |- <2.0, cos(1.0)>"), &[0.3, -1.0], 1e-5).unwrap();
        assert!(j.entries.iter().all(|e| e.abs() <= 1e-10));
    }

    #[test]
    fn dual_columns() {
        let s = src("x : R 1, y : R 1 |- x * y");
        assert_eq!(dual_jacobian_column(&s, &[2.0, 3.0], &[1.0, 0.0]).unwrap(), vec![3.0]);
        let fold = src("v : R 3 |- foldr(\\p : R 1 * R 1. fst p + snd p, 0.0, v)");
        let d = [0.5, -2.0, 4.0];
        assert_eq!(dual_jacobian_column(&fold, &[1.0, 2.0, 3.0], &d).unwrap(), vec![2.5]);
    }

    #[test]
    fn fig1a_column() {
        let s = src("x : R 1 |- let y = 2.0 * x; z = x * y; w = cos(z) in <<y, z>, w>");
        for x in [0.7f64, -1.3, 2.0] {
            let want = [2.0, 4.0 * x, -4.0 * x * (2.0 * x * x).sin()];
            let (f, r) = both(&s, &[x]);
            close(&f.entries, &want, 1e-12);
            close(&r.entries, &want, 1e-12);
            close(
                &dual_jacobian_column(&s, &[x], &[1.0]).unwrap(),
                &fd_jacobian(&s, &[x], 1e-5).unwrap().entries,
                1e-6,
            );
        }
    }

    #[test]
    fn fig1b_row() {
        let s = src("x1 : R 1, x2 : R 1, x3 : R 1, x4 : R 1 |- \
             let y = x1 * x4 + 2.0 * x2; w = y * x3 + x4 in sin(w)");
        let [x1, x2, x3, x4]: [f64; 4] = [0.4, -1.1, 0.9, 1.7];
        let y = x1 * x4 + 2.0 * x2;
        let c = (y * x3 + x4).cos();
        let want = [x3 * c * x4, 2.0 * x3 * c, y * c, c + x1 * x3 * c];
        let (f, r) = both(&s, &[x1, x2, x3, x4]);
        close(&r.entries, &want, 1e-12);
        close(&f.entries, &want, 1e-12);
    }

    #[test]
    fn fig2b_row() {
        let s = src("x1 : R 1, x2 : R n |- sum(map (\\z. x1 * z) x2)");
        let x = [1.5, 0.25, -2.0, 3.0];
        let (_, r) = both(&s, &x);
        close(&r.entries, &[1.25, 1.5, 1.5, 1.5], 1e-12);
    }

    #[test]
    fn identity_and_ignored_input() {
        let (f, r) = both(&src("x : R 1, y : R 1 |- <x, y>"), &[0.1, 0.2]);
        assert_eq!(f.entries, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(r.entries, f.entries);
        let (f, r) = both(&src("x : R 1 |- 4.0"), &[0.1]);
        assert_eq!(f.entries, vec![0.0]);
        assert_eq!(r.entries, vec![0.0]);
    }

    #[test]
    fn one_by_one_modes_agree() {
        let (f, r) = both(&src("x : R 1 |- exp(sin(x)) * x"), &[0.8]);
        assert!(rel_err(f.entries[0], r.entries[0], 1e-10, 1e-12) <= 1e-10);
    }

    #[test]
    fn transpose_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = PipelineConfig {
            default_n: 5,
            ..PipelineConfig::default()
        };
        let lin = load("x : R 1, v : R n |- map (\\z. 3.0 * z) v + replicate{n}(2.0 * x)", 5).unwrap();
        let fig2a = load(
            &std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../programs/fig2a.chad")).unwrap(),
            5,
        )
        .unwrap();
        for (s, tol) in [(lin, 1e-12), (fig2a, 1e-10)] {
            let f = compile(&s, Mode::Forward, &cfg).unwrap();
            let r = compile(&s, Mode::Reverse, &cfg).unwrap();
            let x = random_point(&mut rng, dims(&s).unwrap().1);
            let t = transpose_check(&s, &f, &r, &x, 20, &mut rng).unwrap();
            assert!(t.max_rel_discrepancy <= tol, "{:?}", t);
            let ev = Evaluated::new(&s, &f, &x).unwrap();
            assert!(ev.apply(&vec![0.0; x.len()]).unwrap().iter().all(|y| *y == 0.0));
        }
    }

    #[test]
    fn rel_err_floor() {
        assert_eq!(rel_err(1.0, 1.0, 1e-9, 1e-12), 0.0);
        assert!(rel_err(1e-13, 2e-13, 1e-9, 1e-12) <= 1e-9);
        assert!(rel_err(1.0, 1.0 + 1e-8, 1e-9, 1e-12) > 1e-9);
        assert_eq!(rel_err(f64::NAN, 1.0, 1e-9, 1e-12), f64::INFINITY);
    }

    #[test]
    fn report_formats() {
        let s = src("x : R 1 |- sin(x) * x");
        let cfg = PipelineConfig {
            trials: 2,
            seed: 5,
            ..PipelineConfig::default()
        };
        let rep = verify_program("sq", &prepare(s, &cfg).unwrap(), &cfg).unwrap();
        assert!(rep.passed(), "{}", rep.to_text());
        let text = rep.to_text();
        assert!(text.starts_with("program"));
        assert_eq!(text.lines().count(), rep.rows.len() + 1);
        for line in rep.to_jsonl().lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["seed"], 5);
            assert_eq!(v["program"], "sq");
        }
    }

    #[test]
    fn higher_order_results_are_rejected() {
        let s = src("x : R 1 |- \\y : R 1. x * y");
        assert!(matches!(
            fd_jacobian(&s, &[1.0], 1e-5),
            Err(VerifyError::NotFirstOrder(_))
        ));
    }
}
