// SPDX-License-Identifier: Apache-2.0

//! Parse, elaborate, transform, erase and simplify, with one name supply
//! per compiled file so printed output is stable.

use crate::erase::{erase, erase_ty, EraseError};
use crate::frontend::parser::{parse_program, ParseError, ParseOptions};
use crate::lang::ctx::Ctx;
use crate::lang::name::NameSupply;
use crate::lang::term::Term;
use crate::lang::ty::Ty;
use crate::simplify::{simplify_with, SimplifyOptions, SimplifyStats};
use crate::transform::{ctx_primal, transform, transformed_type, Mode, TransformError};
use crate::typecheck::{check_applied, check_cartesian, elaborate_source, TypeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub simplify: bool,
    pub erase: bool,
    pub seed: u64,
    pub h_rel: f64,
    pub trials: usize,
    pub format: Format,
    /// Size for shape variables a program leaves open.
    pub default_n: usize,
    pub trace_rules: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Forward,
            simplify: true,
            erase: true,
            seed: 0,
            h_rel: 1e-5,
            trials: 10,
            format: Format::Text,
            default_n: 3,
            trace_rules: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("{0}")]
    Transform(#[from] TransformError),
    #[error("{0}")]
    Erase(#[from] EraseError),
}

impl PipelineError {
    /// Errors in the user's program, as opposed to internal failures.
    pub fn is_user_error(&self) -> bool {
        matches!(self, PipelineError::Parse(_) | PipelineError::Type(_))
    }
}

/// An elaborated, well-typed source program.
#[derive(Clone, Debug)]
pub struct Source {
    pub ctx: Ctx,
    pub term: Term,
    pub ty: Ty,
}

pub fn load(src: &str, default_n: usize) -> Result<Source, PipelineError> {
    let p = parse_program(src, &ParseOptions::with_default_n(default_n))?;
    let (term, ty) = elaborate_source(&p.ctx, &p.term)?;
    Ok(Source { ctx: p.ctx, term, ty })
}

#[derive(Clone, Debug)]
pub struct Compiled {
    pub mode: Mode,
    /// Context of the output: the primal context of the source.
    pub ctx: Ctx,
    pub term: Term,
    pub ty: Ty,
    pub erased: bool,
    pub stats: Option<SimplifyStats>,
}

pub fn compile(source: &Source, mode: Mode, cfg: &PipelineConfig) -> Result<Compiled, PipelineError> {
    let mut supply = NameSupply::new();
    let (t, src_ty) = transform(mode, &source.ctx, &source.term, &mut supply)?;
    let ctx = ctx_primal(mode, &source.ctx);
    let mut ty = transformed_type(mode, &source.ctx, &src_ty);
    let t = if cfg.erase {
        ty = erase_ty(&ty);
        erase(&ctx, &t, &mut supply)?
    } else {
        t
    };
    let (term, stats) = if cfg.simplify {
        let opts = SimplifyOptions {
            trace: cfg.trace_rules,
            ..SimplifyOptions::default()
        };
        let (s, st) = simplify_with(&t, &opts);
        (s, Some(st))
    } else {
        (t, None)
    };
    Ok(Compiled {
        mode,
        ctx,
        term,
        ty,
        erased: cfg.erase,
        stats,
    })
}

/// Re-checks a compiled term in the fragment it belongs to.
pub fn check_compiled(c: &Compiled) -> Result<Ty, TypeError> {
    if c.erased {
        check_applied(&c.ctx, &c.term)
    } else {
        check_cartesian(&c.ctx, &c.term)
    }
}

pub fn compile_str(src: &str, mode: Mode, cfg: &PipelineConfig) -> Result<(Source, Compiled), PipelineError> {
    let s = load(src, cfg.default_n)?;
    let c = compile(&s, mode, cfg)?;
    Ok((s, c))
}
