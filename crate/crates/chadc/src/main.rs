// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chad_core::frontend::pretty::pretty;
use chad_core::golden::run_golden_dir;
use chad_core::pipeline::{check_compiled, compile, load, Format, PipelineConfig, PipelineError, Source};
use chad_core::transform::Mode;
use chad_core::verify::{
    chad_fwd_jacobian, chad_rev_jacobian, dual_jacobian, eval_at, fd_jacobian, prepare, verify_program, Jacobian,
    VerifyError,
};

macro_rules! outln {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).expect("writing to a String")
    };
}

#[derive(Parser, Debug)]
#[command(
    name = "chadc",
    version,
    about = "Forward and reverse CHAD automatic differentiation"
)]
struct Cli {
    /// Size used for shape variables such as the `n` in `R n`.
    #[arg(long, global = true, default_value_t = 3)]
    default_n: usize,
    /// Seed for random points; CHADC_SEED overrides it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Text)]
    format: OutFormat,
    /// Log every simplifier rule firing to stderr.
    #[arg(long, global = true)]
    trace_rules: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum JacMode {
    Fwd,
    Rev,
    Fd,
    Dual,
}

#[derive(Args, Debug)]
struct TransformArgs {
    file: PathBuf,
    #[arg(long)]
    no_simplify: bool,
    #[arg(long)]
    no_erase: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Typecheck a program and print its type.
    Check { file: PathBuf },
    /// Print the forward derivative program.
    Fwd(TransformArgs),
    /// Print the reverse derivative program.
    Rev(TransformArgs),
    /// Evaluate a program at a flat comma-separated input.
    Eval {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        args: String,
    },
    /// Print the Jacobian at a point.
    Jacobian {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: JacMode,
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long, default_value_t = 1e-5)]
        h_rel: f64,
    },
    /// Run every derivative oracle at seeded random points.
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 1e-5)]
        h_rel: f64,
    },
    /// Compare compiled programs against every `.golden` file in a directory.
    Golden { dir: PathBuf },
}

/// Exit codes: 1 for unusable input, 2 for failed verification.
enum Failure {
    Input(String),
    Verification(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_user_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Verification(e.to_string())
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Pipeline(p) => p.into(),
            VerifyError::NotFirstOrder(_) => Failure::Input(e.to_string()),
            other => Failure::Verification(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {}", path.display(), e)))
}

fn parse_floats(s: &str) -> Result<Vec<f64>, Failure> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Failure::Input(format!("bad number {:?}: {}", t.trim(), e)))
        })
        .collect()
}

fn seed(cli: &Cli) -> Result<u64, Failure> {
    match std::env::var("CHADC_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("CHADC_SEED is not an unsigned integer: {:?}", s))),
        Err(_) => Ok(cli.seed),
    }
}

fn config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    Ok(PipelineConfig {
        seed: seed(cli)?,
        default_n: cli.default_n,
        trace_rules: cli.trace_rules,
        format: match cli.format {
            OutFormat::Text => Format::Text,
            OutFormat::Json => Format::Json,
        },
        ..PipelineConfig::default()
    })
}

fn load_file(path: &Path, cfg: &PipelineConfig) -> Result<Source, Failure> {
    let src = read(path)?;
    load(&src, cfg.default_n).map_err(|e| Failure::Input(format!("{}: {}", path.display(), e)))
}

fn check_point(src: &Source, point: &[f64]) -> Result<(), Failure> {
    let n: usize = src.ctx.cart.iter().map(|(_, t)| t.flat_dim().unwrap_or(0)).sum();
    if point.len() != n {
        return Err(Failure::Input(format!(
            "expected {} input values, got {}",
            n,
            point.len()
        )));
    }
    Ok(())
}

fn print_floats(out: &mut String, xs: &[f64], format: Format) {
    match format {
        Format::Text => outln!(
            out,
            "{}",
            xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        ),
        Format::Json => outln!(out, "{}", serde_json::to_string(xs).expect("floats serialize")),
    }
}

fn print_jacobian(out: &mut String, j: &Jacobian, format: Format) {
    match format {
        Format::Text => {
            for i in 0..j.rows {
                let row: Vec<String> = (0..j.cols).map(|c| format!("{:.12e}", j.get(i, c))).collect();
                outln!(out, "{}", row.join("  "));
            }
        }
        Format::Json => outln!(
            out,
            "{}",
            serde_json::json!({ "rows": j.rows, "cols": j.cols, "entries": j.entries })
        ),
    }
}

fn run(cli: &Cli, out: &mut String) -> Result<(), Failure> {
    let mut cfg = config(cli)?;
    match &cli.command {
        Command::Check { file } => {
            let src = load_file(file, &cfg)?;
            match cfg.format {
                Format::Text => outln!(out, "{}", src.ty),
                Format::Json => outln!(out, "{}", serde_json::json!({ "type": src.ty.to_string() })),
            }
        }
        Command::Fwd(a) | Command::Rev(a) => {
            let mode = if matches!(cli.command, Command::Fwd(_)) {
                Mode::Forward
            } else {
                Mode::Reverse
            };
            cfg.mode = mode;
            cfg.simplify = !a.no_simplify;
            cfg.erase = !a.no_erase;
            let src = load_file(&a.file, &cfg)?;
            let c = compile(&src, mode, &cfg)?;
            check_compiled(&c).map_err(|e| Failure::Verification(format!("output does not typecheck: {}", e)))?;
            if let Some(st) = &c.stats {
                for line in &st.trace {
                    eprintln!("{}", line);
                }
                if st.hit_cap {
                    eprintln!(
                        "warning: simplifier stopped after {} passes without reaching a fixpoint",
                        st.passes
                    );
                }
            }
            match cfg.format {
                Format::Text => outln!(out, "{}", pretty(&c.term)),
                Format::Json => outln!(
                    out,
                    "{}",
                    serde_json::json!({ "mode": mode.name(), "type": c.ty.to_string(), "program": pretty(&c.term) })
                ),
            }
        }
        Command::Eval { file, args } => {
            let src = load_file(file, &cfg)?;
            let x = parse_floats(args)?;
            check_point(&src, &x)?;
            print_floats(out, &eval_at(&src, &x)?, cfg.format);
        }
        Command::Jacobian { file, mode, at, h_rel } => {
            validate_h(*h_rel)?;
            let src = load_file(file, &cfg)?;
            let x = parse_floats(at)?;
            check_point(&src, &x)?;
            let j = match mode {
                JacMode::Fwd => chad_fwd_jacobian(&src, &compile(&src, Mode::Forward, &cfg)?, &x)?,
                JacMode::Rev => chad_rev_jacobian(&src, &compile(&src, Mode::Reverse, &cfg)?, &x)?,
                JacMode::Fd => fd_jacobian(&src, &x, *h_rel)?,
                JacMode::Dual => dual_jacobian(&src, &x)?,
            };
            print_jacobian(out, &j, cfg.format);
        }
        Command::Verify { file, trials, h_rel } => {
            validate_h(*h_rel)?;
            if *trials == 0 {
                return Err(Failure::Input("--trials must be at least 1".into()));
            }
            cfg.trials = *trials;
            cfg.h_rel = *h_rel;
            let src = load_file(file, &cfg)?;
            let name = file
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("program")
                .to_string();
            let report = verify_program(&name, &prepare(src, &cfg)?, &cfg)?;
            match cfg.format {
                Format::Text => out.push_str(&report.to_text()),
                Format::Json => out.push_str(&report.to_jsonl()),
            }
            if !report.passed() {
                return Err(Failure::Verification(format!("{}: verification failed", name)));
            }
        }
        Command::Golden { dir } => {
            let outcomes = run_golden_dir(dir, &cfg).map_err(|e| Failure::Input(e.to_string()))?;
            let mut failed = 0;
            for o in &outcomes {
                let name = o.golden.file_name().and_then(|s| s.to_str()).unwrap_or("?");
                match cfg.format {
                    Format::Text => {
                        outln!(out, "{:<32} {}", name, if o.matched { "ok" } else { "MISMATCH" });
                        if let Some((want, got)) = &o.difference {
                            outln!(out, "  expected: {}\n  actual:   {}", want, got);
                        }
                    }
                    Format::Json => outln!(
                        out,
                        "{}",
                        serde_json::json!({
                            "golden": name,
                            "mode": o.mode.name(),
                            "inline_lambdas": o.inline_lambdas,
                            "matched": o.matched,
                        })
                    ),
                }
                if !o.matched {
                    failed += 1;
                }
            }
            if failed > 0 {
                return Err(Failure::Verification(format!(
                    "{} of {} golden files differ",
                    failed,
                    outcomes.len()
                )));
            }
        }
    }
    Ok(())
}

fn validate_h(h: f64) -> Result<(), Failure> {
    if h > 0.0 && h <= 0.1 {
        Ok(())
    } else {
        Err(Failure::Input(format!("--h-rel must be in (0, 0.1], got {}", h)))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let result = run(&cli, &mut out);
    // A reader that went away (`chadc fwd f | head`) is not an error.
    let _ = std::io::stdout().lock().write_all(out.as_bytes());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {}", m);
            ExitCode::from(1)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("error: {}", m);
            ExitCode::from(2)
        }
    }
}
