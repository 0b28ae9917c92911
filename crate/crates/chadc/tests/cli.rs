// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn programs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

fn chadc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chadc"))
        .args(args)
        .env_remove("CHADC_SEED")
        .output()
        .expect("chadc runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn prog(name: &str) -> String {
    programs().join(name).to_str().unwrap().to_string()
}

#[test]
fn check_prints_type_with_default_n() {
    let o = chadc(&["check", &prog("fig2a.chad")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "R 3");
    let o = chadc(&["--default-n", "5", "check", &prog("fig2a.chad")]);
    assert_eq!(stdout(&o).trim(), "R 5");
}

#[test]
fn parse_and_type_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.chad");
    fs::write(&bad, "x : R 1 |- let y = in y").unwrap();
    let o = chadc(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));

    fs::write(&bad, "x : R 2 |- sin(x) + fst x").unwrap();
    let o = chadc(&["fwd", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = chadc(&["check", dir.path().join("missing.chad").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fwd_and_rev_output_reparses() {
    for mode in ["fwd", "rev"] {
        let o = chadc(&[mode, &prog("fig1b.chad")]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert!(chad_core::frontend::parser::parse_term(&text).is_ok(), "{}", text);
    }
}

#[test]
fn trace_rules_goes_to_stderr() {
    let o = chadc(&["--trace-rules", "rev", &prog("fig1b.chad")]);
    assert_eq!(o.status.code(), Some(0));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.lines().any(|l| l.contains(" @ ")), "{}", err);
}

#[test]
fn jacobian_modes_agree() {
    let at = "0.3,-1.2,0.7,2.0";
    let mut results = Vec::new();
    for mode in ["fwd", "rev", "dual", "fd"] {
        let o = chadc(&[
            "--format",
            "json",
            "jacobian",
            &prog("fig1b.chad"),
            "--mode",
            mode,
            "--at",
            at,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
        assert_eq!(v["rows"], 1);
        assert_eq!(v["cols"], 4);
        let e: Vec<f64> = v["entries"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        results.push(e);
    }
    for r in &results[1..] {
        for (a, b) in results[0].iter().zip(r) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{:?}", results);
        }
    }
}

#[test]
fn eval_checks_input_length() {
    let o = chadc(&["eval", &prog("fig1b.chad"), "--args", "1,2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = chadc(&["eval", &prog("fig1b.chad"), "--args", "1,2,3,-4"]);
    assert_eq!(o.status.code(), Some(0));
    let y: f64 = stdout(&o).trim().parse().unwrap();
    // y = 1 * -4 + 2 * 2 = 0, so the result is sin(0 * 3 + -4).
    assert_eq!(y, (-4.0f64).sin());
}

#[test]
fn verify_passes_and_seed_env_overrides() {
    let o = chadc(&["--format", "json", "verify", &prog("dot.chad"), "--trials", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r["passed"] == true && r["seed"] == 0));

    let o = Command::new(env!("CARGO_BIN_EXE_chadc"))
        .args([
            "--format",
            "json",
            "verify",
            &prog("dot.chad"),
            "--trials",
            "2",
            "--seed",
            "3",
        ])
        .env("CHADC_SEED", "11")
        .output()
        .unwrap();
    let first: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(first["seed"], 11);
}

#[test]
fn verify_rejects_bad_h_rel() {
    let o = chadc(&["verify", &prog("dot.chad"), "--h-rel", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = chadc(&["verify", &prog("dot.chad"), "--trials", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn golden_corpus_matches() {
    let dir = programs();
    let o = chadc(&["golden", dir.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}{}",
        stdout(&o),
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout(&o).lines().filter(|l| l.ends_with(" ok")).count(), 5);
}

#[test]
fn golden_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(programs().join("fig1b.chad"), dir.path().join("fig1b.chad")).unwrap();
    let golden = fs::read_to_string(programs().join("fig1b.rev.golden")).unwrap();
    // Flip one reverse-mode product, leaving the program well typed.
    let broken = golden.replacen("x1 * y'", "x2 * y'", 1);
    assert_ne!(broken, golden);
    fs::write(dir.path().join("fig1b.rev.golden"), broken).unwrap();
    let o = chadc(&["golden", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("MISMATCH"));
}

#[test]
fn output_is_stable_across_runs() {
    for name in ["fig1a.chad", "fig2a.chad", "fig2b.chad", "foldr_closure.chad"] {
        for mode in ["fwd", "rev"] {
            let a = chadc(&[mode, &prog(name)]);
            let b = chadc(&[mode, &prog(name)]);
            assert_eq!(a.status.code(), Some(0));
            assert_eq!(a.stdout, b.stdout, "{} {}", name, mode);
        }
    }
}

#[test]
fn written_output_can_serve_as_golden() {
    // `chadc rev` output saved as a golden matches the next compilation.
    let dir = tempfile::tempdir().unwrap();
    for name in ["map_closure_sum", "foldr_prod"] {
        let src = fs::read_to_string(programs().join(format!("{}.chad", name))).unwrap();
        fs::write(dir.path().join(format!("{}.chad", name)), &src).unwrap();
        let o = chadc(&["rev", &prog(&format!("{}.chad", name))]);
        let ctx = src
            .split("|-")
            .next()
            .unwrap()
            .lines()
            .filter(|l| !l.trim_start().starts_with("--"))
            .collect::<Vec<_>>()
            .join(" ");
        fs::write(
            dir.path().join(format!("{}.rev.golden", name)),
            format!("{} |- {}", ctx.trim(), stdout(&o)),
        )
        .unwrap();
    }
    let o = chadc(&["golden", dir.path().to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}{}",
        stdout(&o),
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn every_subcommand_runs_on_every_program() {
    let mut names: Vec<PathBuf> = fs::read_dir(programs())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "chad"))
        .collect();
    names.sort();
    assert!(names.len() >= 15);
    for path in &names {
        let file = path.to_str().unwrap();
        let src = chad_core::pipeline::load(&fs::read_to_string(path).unwrap(), 3).unwrap();
        let dim: usize = src.ctx.cart.iter().map(|(_, t)| t.flat_dim().unwrap()).sum();
        let at = (0..dim)
            .map(|i| format!("{}", 0.3 + 0.1 * i as f64))
            .collect::<Vec<_>>()
            .join(",");
        let mut runs: Vec<Vec<&str>> = vec![
            vec!["check", file],
            vec!["fwd", file],
            vec!["rev", file],
            vec!["fwd", file, "--no-simplify"],
            vec!["rev", file, "--no-erase"],
            vec!["eval", file, "--args", &at],
            vec!["verify", file, "--trials", "2"],
        ];
        for mode in ["fwd", "rev", "fd", "dual"] {
            runs.push(vec!["jacobian", file, "--mode", mode, "--at", &at]);
        }
        for args in runs {
            let o = chadc(&args);
            assert_eq!(
                o.status.code(),
                Some(0),
                "{:?}\n{}",
                args,
                String::from_utf8_lossy(&o.stderr)
            );
        }
    }
}
