// SPDX-License-Identifier: Apache-2.0

//! Random well-typed first-order programs, emitted as concrete syntax and
//! loaded through the ordinary frontend.
//!
//! Programs use scalar and array inputs, lets, pairs, `map`, `foldr`,
//! `sum`, `replicate` and, when enabled, let-bound closures over the
//! context. Values stay bounded: the only unbounded primitive, `exp`, is
//! always applied to a `sin` or `sigmoid`.

use rand::Rng;

use crate::pipeline::{load, PipelineError, Source};

#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Array length for every `R n` in the program.
    pub n: usize,
    pub max_depth: u32,
    pub closures: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n: 3,
            max_depth: 4,
            closures: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub text: String,
    pub source: Source,
    /// Let-bound lambdas in the program.
    pub closures: usize,
}

struct Gen<'r, R> {
    rng: &'r mut R,
    cfg: GenConfig,
    /// Expressions of type `R 1` usable as leaves: variables and projections.
    scalars: Vec<String>,
    vectors: Vec<String>,
    /// Names of type `R 1 -> R 1`.
    funs: Vec<String>,
    next: usize,
    closures: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn fresh(&mut self, base: &str) -> String {
        self.next += 1;
        format!("{}{}", base, self.next)
    }

    fn pick<'a>(&mut self, xs: &'a [String]) -> &'a str {
        &xs[self.rng.gen_range(0..xs.len())]
    }

    fn literal(&mut self) -> String {
        let x: f64 = self.rng.gen_range(-2.0..2.0);
        format!("{:.2}", x)
    }

    fn scalar_leaf(&mut self) -> String {
        if self.scalars.is_empty() || self.rng.gen_bool(0.15) {
            self.literal()
        } else {
            let xs = self.scalars.clone();
            self.pick(&xs).to_string()
        }
    }

    fn vector_leaf(&mut self) -> String {
        if self.vectors.is_empty() || self.rng.gen_bool(0.2) {
            let s = self.scalar_leaf();
            format!("replicate{{{}}}({})", self.cfg.n, s)
        } else {
            let vs = self.vectors.clone();
            self.pick(&vs).to_string()
        }
    }

    /// Runs `f` with extra scalar leaves in scope.
    fn with_scalars<T>(&mut self, names: &[String], f: impl FnOnce(&mut Self) -> T) -> T {
        let k = self.scalars.len();
        self.scalars.extend(names.iter().cloned());
        let out = f(self);
        self.scalars.truncate(k);
        out
    }

    fn scalar(&mut self, d: u32) -> String {
        if d == 0 {
            return self.scalar_leaf();
        }
        let choices = if self.cfg.closures { 12 } else { 9 };
        match self.rng.gen_range(0..choices) {
            0 => self.scalar_leaf(),
            1 => {
                let a = self.scalar(d - 1);
                match self.rng.gen_range(0..5) {
                    0 => format!("sin({})", a),
                    1 => format!("cos({})", a),
                    2 => format!("sigmoid({})", a),
                    3 => format!("neg({})", a),
                    _ => format!("exp(sin({}))", a),
                }
            }
            2 | 3 => {
                let a = self.scalar(d - 1);
                let b = self.scalar(d - 1);
                let op = ["+", "-", "*"][self.rng.gen_range(0..3)];
                format!("({} {} {})", a, op, b)
            }
            4 => {
                let v = self.vector(d - 1);
                format!("sum({})", v)
            }
            5 => {
                let x = self.fresh("x");
                let a = self.scalar(d - 1);
                let b = self.with_scalars(std::slice::from_ref(&x), |g| g.scalar(d - 1));
                format!("(let {} = {} in {})", x, a, b)
            }
            6 => {
                let p = self.fresh("p");
                let a = self.scalar(d - 1);
                let b = self.scalar(d - 1);
                let leaves = [format!("fst {}", p), format!("snd {}", p)];
                let body = self.with_scalars(&leaves, |g| g.scalar(d - 1));
                format!("(let {} = <{}, {}> in {})", p, a, b, body)
            }
            7 => {
                let p = self.fresh("p");
                let leaves = [format!("fst {}", p), format!("snd {}", p)];
                let f = self.with_scalars(&leaves, |g| g.scalar(d - 1));
                let i = self.scalar(d - 1);
                let v = self.vector(d - 1);
                format!("foldr(\\{} : R 1 * R 1. {}, {}, {})", p, f, i, v)
            }
            8 => {
                let v = self.vector(d);
                format!("sum({})", v)
            }
            9 | 10 => self.closure(d),
            _ => {
                if self.funs.is_empty() {
                    self.closure(d)
                } else {
                    let fs = self.funs.clone();
                    let f = self.pick(&fs).to_string();
                    let a = self.scalar(d - 1);
                    format!("{} ({})", f, a)
                }
            }
        }
    }

    /// `let f = \y. body in use`, where `use` applies `f` and repeats some
    /// arguments, so closures are called more than once at equal points.
    fn closure(&mut self, d: u32) -> String {
        self.closures += 1;
        let f = self.fresh("f");
        let y = self.fresh("y");
        let body = self.with_scalars(std::slice::from_ref(&y), |g| g.scalar(d - 1));
        self.funs.push(f.clone());
        let arg = self.scalar_leaf();
        let use_ = match self.rng.gen_range(0..4) {
            0 => format!("{f} ({arg}) * {f} ({arg})"),
            1 => {
                let v = self.vector(d - 1);
                format!("sum(map (\\{y}. {f} ({y})) {v})", y = self.fresh("z"), f = f, v = v)
            }
            2 => format!(
                "sum(map (\\{z}. {f} ({arg})) replicate{{{n}}}({arg}))",
                z = self.fresh("z"),
                f = f,
                arg = arg,
                n = self.cfg.n
            ),
            _ => {
                let rest = self.scalar(d - 1);
                format!("{f} ({arg}) + {rest}")
            }
        };
        self.funs.pop();
        format!("(let {} = \\{} : R 1. {} in {})", f, y, body, use_)
    }

    fn vector(&mut self, d: u32) -> String {
        if d == 0 {
            return self.vector_leaf();
        }
        match self.rng.gen_range(0..6) {
            0 => self.vector_leaf(),
            1 | 2 => {
                let z = self.fresh("z");
                let body = self.with_scalars(std::slice::from_ref(&z), |g| g.scalar(d - 1));
                let v = self.vector(d - 1);
                format!("map (\\{}. {}) ({})", z, body, v)
            }
            3 => {
                let a = self.vector(d - 1);
                let b = self.vector(d - 1);
                let op = ["+", "-", "*"][self.rng.gen_range(0..3)];
                format!("({} {} {})", a, op, b)
            }
            4 => {
                let s = self.scalar(d - 1);
                format!("replicate{{{}}}({})", self.cfg.n, s)
            }
            _ => {
                let v = self.fresh("w");
                let a = self.vector(d - 1);
                self.vectors.push(v.clone());
                let b = self.vector(d - 1);
                self.vectors.pop();
                format!("(let {} = {} in {})", v, a, b)
            }
        }
    }
}

/// One random program. The context has one to three scalars and, usually,
/// an array; the result is a scalar, an array or a pair of both.
pub fn generate(rng: &mut impl Rng, cfg: &GenConfig) -> Result<Generated, PipelineError> {
    let k = rng.gen_range(1..=3);
    let with_vec = rng.gen_bool(0.7);
    let scalars: Vec<String> = (1..=k).map(|i| format!("x{}", i)).collect();
    let mut ctx: Vec<String> = scalars.iter().map(|x| format!("{} : R 1", x)).collect();
    let mut vectors = Vec::new();
    if with_vec {
        ctx.push(format!("v : R {}", cfg.n));
        vectors.push("v".to_string());
    }
    let mut g = Gen {
        rng,
        cfg: cfg.clone(),
        scalars,
        vectors,
        funs: Vec::new(),
        next: 0,
        closures: 0,
    };
    let d = g.cfg.max_depth;
    let body = match g.rng.gen_range(0..4) {
        0 => g.vector(d),
        1 => {
            let a = g.scalar(d - 1);
            let b = g.vector(d - 1);
            format!("<{}, {}>", a, b)
        }
        _ => g.scalar(d),
    };
    let text = format!("{} |- {}", ctx.join(", "), body);
    let source = load(&text, cfg.n)?;
    Ok(Generated {
        text,
        source,
        closures: g.closures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_programs_load() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let g = generate(&mut rng, &GenConfig::default());
            assert!(g.is_ok(), "{:?}", g.err());
            assert!(g.unwrap().source.ty.is_first_order());
        }
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let a = generate(&mut ChaCha8Rng::seed_from_u64(9), &GenConfig::default()).unwrap();
        let b = generate(&mut ChaCha8Rng::seed_from_u64(9), &GenConfig::default()).unwrap();
        assert_eq!(a.text, b.text);
    }
}
