// SPDX-License-Identifier: Apache-2.0

//! Golden-file comparison for compiled programs.
//!
//! A golden file `stem.mode[.tag].golden` holds a pretty-printed applied
//! program for `stem.chad` compiled in `mode`. Both sides are simplified with
//! the same options and compared up to alpha-equivalence. A leading
//! `-- normalise: inline-lambdas` line asks for let-bound lambdas to be
//! inlined on both sides first, for listings that were simplified by hand.

use std::fs;
use std::path::{Path, PathBuf};

use crate::frontend::parser::{parse_program, ParseError, ParseOptions};
use crate::frontend::pretty::pretty;
use crate::lang::ops::alpha_eq;
use crate::lang::term::Term;
use crate::pipeline::{compile, load, PipelineConfig, PipelineError};
use crate::simplify::{simplify_with, SimplifyOptions};
use crate::transform::Mode;
use crate::typecheck::{check_applied, TypeError};

#[derive(Debug, thiserror::Error)]
pub enum GoldenError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}: file name is not stem.fwd[.tag].golden or stem.rev[.tag].golden")]
    BadName(PathBuf),
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: golden does not typecheck: {source}")]
    Type { path: PathBuf, source: TypeError },
    #[error("{path}: {source}")]
    Pipeline { path: PathBuf, source: PipelineError },
}

#[derive(Clone, Debug)]
pub struct GoldenOutcome {
    pub golden: PathBuf,
    pub program: PathBuf,
    pub mode: Mode,
    pub inline_lambdas: bool,
    pub matched: bool,
    /// Both sides after normalisation.
    pub expected: String,
    pub actual: String,
    /// The outermost differing subterms, when the comparison failed.
    pub difference: Option<(String, String)>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> GoldenError + '_ {
    move |source| GoldenError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `fig1a.fwd.golden` → (`fig1a`, Forward).
fn split_golden_name(path: &Path) -> Option<(String, Mode)> {
    let name = path.file_name()?.to_str()?;
    let stem = name.strip_suffix(".golden")?;
    let mut parts = stem.split('.');
    let prog = parts.next()?;
    let mode = match parts.next()? {
        "fwd" => Mode::Forward,
        "rev" => Mode::Reverse,
        _ => return None,
    };
    Some((prog.to_string(), mode))
}

fn wants_inline(src: &str) -> bool {
    src.lines().take_while(|l| l.trim_start().starts_with("--")).any(|l| {
        l.trim_start()
            .trim_start_matches('-')
            .trim()
            .strip_prefix("normalise:")
            .is_some_and(|rest| rest.split_whitespace().any(|w| w == "inline-lambdas"))
    })
}

pub fn run_golden(golden: &Path, cfg: &PipelineConfig) -> Result<GoldenOutcome, GoldenError> {
    let (stem, mode) = split_golden_name(golden).ok_or_else(|| GoldenError::BadName(golden.to_path_buf()))?;
    let program = golden.with_file_name(format!("{}.chad", stem));
    let gsrc = fs::read_to_string(golden).map_err(io_err(golden))?;
    let psrc = fs::read_to_string(&program).map_err(io_err(&program))?;
    let inline_lambdas = wants_inline(&gsrc);

    let expected =
        parse_program(&gsrc, &ParseOptions::with_default_n(cfg.default_n)).map_err(|source| GoldenError::Parse {
            path: golden.to_path_buf(),
            source,
        })?;
    check_applied(&expected.ctx, &expected.term).map_err(|source| GoldenError::Type {
        path: golden.to_path_buf(),
        source,
    })?;

    let pipe_err = |source| GoldenError::Pipeline {
        path: program.clone(),
        source,
    };
    let src = load(&psrc, cfg.default_n).map_err(pipe_err)?;
    let cfg = PipelineConfig {
        mode,
        simplify: true,
        erase: true,
        ..cfg.clone()
    };
    let compiled = compile(&src, mode, &cfg).map_err(|source| GoldenError::Pipeline {
        path: program.clone(),
        source,
    })?;

    let opts = SimplifyOptions {
        inline_lambdas,
        ..SimplifyOptions::default()
    };
    let want = simplify_with(&expected.term, &opts).0;
    let got = simplify_with(&compiled.term, &opts).0;
    let matched = alpha_eq(&want, &got);
    let difference = if matched { None } else { first_difference(&want, &got) };
    Ok(GoldenOutcome {
        golden: golden.to_path_buf(),
        program,
        mode,
        inline_lambdas,
        matched,
        expected: pretty(&want),
        actual: pretty(&got),
        difference,
    })
}

/// Every `*.golden` file in `dir`, in name order.
pub fn golden_files(dir: &Path) -> Result<Vec<PathBuf>, GoldenError> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "golden"))
        .collect();
    out.sort();
    Ok(out)
}

pub fn run_golden_dir(dir: &Path, cfg: &PipelineConfig) -> Result<Vec<GoldenOutcome>, GoldenError> {
    golden_files(dir)?.iter().map(|g| run_golden(g, cfg)).collect()
}

/// Descends while the two terms have the same shape and exactly one child
/// pair differs. Binder names are ignored, so under a renamed binder this
/// may stop early; it is a diagnostic, not a decision procedure.
fn first_difference(a: &Term, b: &Term) -> Option<(String, String)> {
    if alpha_eq(a, b) {
        return None;
    }
    let (ca, cb) = (a.children(), b.children());
    if std::mem::discriminant(a) == std::mem::discriminant(b) && ca.len() == cb.len() && !ca.is_empty() {
        let diffs: Vec<usize> = (0..ca.len()).filter(|&i| !alpha_eq(ca[i], cb[i])).collect();
        if diffs.len() == 1 {
            if let Some(d) = first_difference(ca[diffs[0]], cb[diffs[0]]) {
                return Some(d);
            }
        }
    }
    Some((pretty(a), pretty(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scratch(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("chad-golden-{}-{}", tag, std::process::id()));
        let _ = fs::remove_dir_all(&d);
        fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn names() {
        assert_eq!(
            split_golden_name(Path::new("a/fig1a.fwd.golden")),
            Some(("fig1a".into(), Mode::Forward))
        );
        assert_eq!(
            split_golden_name(Path::new("fig2a.rev.hand.golden")),
            Some(("fig2a".into(), Mode::Reverse))
        );
        assert_eq!(split_golden_name(Path::new("fig2a.golden")), None);
        assert_eq!(split_golden_name(Path::new("fig2a.both.golden")), None);
    }

    #[test]
    fn inline_directive_only_in_header() {
        assert!(wants_inline("-- normalise: inline-lambdas\nx : R 1 |- x"));
        assert!(wants_inline("-- a note\n-- normalise: inline-lambdas\nx : R 1 |- x"));
        assert!(!wants_inline("x : R 1 |-\n-- normalise: inline-lambdas\nx"));
        assert!(!wants_inline("-- normalise: nothing\nx : R 1 |- x"));
    }

    #[test]
    fn match_and_mismatch() {
        let d = scratch("mm");
        fs::write(d.join("sq.chad"), "x : R 1 |- x * x").unwrap();
        fs::write(
            d.join("sq.rev.golden"),
            "x : R 1 |- <x * x, \\v : R 1. <zero, x * v + x * v>>",
        )
        .unwrap();
        fs::write(
            d.join("sq.rev.bad.golden"),
            "x : R 1 |- <x * x, \\v : R 1. <zero, x * v>>",
        )
        .unwrap();
        let out = run_golden_dir(&d, &PipelineConfig::default()).unwrap();
        assert_eq!(out.len(), 2);
        let bad = out.iter().find(|o| o.golden.ends_with("sq.rev.bad.golden")).unwrap();
        let good = out.iter().find(|o| o.golden.ends_with("sq.rev.golden")).unwrap();
        assert!(good.matched, "{}\n{}", good.expected, good.actual);
        assert!(!bad.matched);
        assert!(bad.difference.is_some());
        fs::remove_dir_all(&d).unwrap();
    }

    #[test]
    fn ill_typed_golden_is_an_error() {
        let d = scratch("ty");
        fs::write(d.join("sq.chad"), "x : R 1 |- x * x").unwrap();
        fs::write(d.join("sq.fwd.golden"), "x : R 1 |- fst x").unwrap();
        assert!(matches!(
            run_golden(&d.join("sq.fwd.golden"), &PipelineConfig::default()),
            Err(GoldenError::Type { .. })
        ));
        fs::remove_dir_all(&d).unwrap();
    }

    #[test]
    fn first_difference_descends() {
        let a = crate::frontend::parser::parse_term("<a, <b, sin(c)>>").unwrap();
        let b = crate::frontend::parser::parse_term("<a, <b, cos(c)>>").unwrap();
        assert_eq!(first_difference(&a, &b), Some(("sin(c)".into(), "cos(c)".into())));
        assert_eq!(first_difference(&a, &a), None);
    }
}
