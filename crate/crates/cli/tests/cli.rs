use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hybridlab::grid::read_snapshot;
use hybridlab::moments::fit_envelope;
use serde_json::Value;

fn hybridlab(args: &[&str]) -> Output {
    hybridlab_with(args, &[])
}

fn hybridlab_with(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut command = Command::new(env!("CARGO_BIN_EXE_hybridlab"));
    command.args(args).env_remove("HYBRIDLAB_THREADS");
    for (k, v) in env {
        command.env(k, v);
    }
    command.output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Header and numeric rows of a CSV written by the tool.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i]).collect()
}

fn drift(series: &[f64]) -> f64 {
    let spread = series.iter().fold(0.0, |m: f64, v| m.max((v - series[0]).abs()));
    if series[0] == 0.0 {
        spread
    } else {
        spread / series[0].abs()
    }
}

#[test]
fn derive_prints_benchmark_equations() {
    let out = hybridlab(&["derive", "--koopmanian", "(q^2+p^2)/2 + y*p_x - x*p_y - 0.2*q*p_y"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for line in
        ["dq/dt = p", "dp/dt = -q + 0.2*p_y", "dx/dt = y", "dy/dt = -0.2*q - x", "dp_x/dt = p_y", "dp_y/dt = -p_x"]
    {
        assert!(text.lines().any(|l| l == line), "missing `{line}` in\n{text}");
    }
    let symbolic = hybridlab(&["derive", "--k", "0.2"]);
    assert_eq!(stdout(&symbolic), text);
}

#[test]
fn derive_koopmanizes_classical_hamiltonians() {
    let out = hybridlab(&["derive", "--mode", "classical-classical", "--hamiltonian", "(x^2 + y^2)/2"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("L = -x*p_y + y*p_x\n"));
}

#[test]
fn nogo_verdicts() {
    assert_eq!(stdout(&hybridlab(&["nogo", "--k", "0"])), "witness = 0: OK\n");
    let out = hybridlab(&["nogo", "--k", "1"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("witness = -i: FAIL"));
    assert!(stdout(&hybridlab(&["nogo", "--k", "-0.5"])).starts_with("witness = 0.5*i: FAIL"));
}

#[test]
fn spectrum_json_reports_jordan_chains() {
    let dir = tempfile::tempdir().unwrap();
    let out = hybridlab(&["spectrum", "--json", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let printed: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(printed, read_json(&dir.path().join("spectrum.json")));
    let clusters = printed["clusters"].as_array().unwrap();
    assert_eq!(clusters.len(), 2);
    for c in clusters {
        assert_eq!((c["algebraic"].as_u64(), c["geometric"].as_u64()), (Some(3), Some(1)));
    }
    assert!(stdout(&hybridlab(&["spectrum", "--k", "0"])).contains("dynamics: bounded"));
}

#[test]
fn simulate_reports_linear_amplitude_growth() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let args = ["simulate", "--mode", "hybrid", "--k", "0.2", "--engine", "moments", "--t-final", "100"];
    let out = hybridlab(&[&args[..], &["--output", out_dir.to_str().unwrap()]].concat());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("report.json"));
    let engine = &report["engines"][0];
    assert_eq!(engine["envelope"]["degree"], 1);
    assert!(engine["conserved_drift"].as_f64().unwrap() < 1e-10);
    assert!(report["spectrum"].as_str().unwrap().contains("secular growth"));
    let measurable: Vec<bool> = engine["observers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["classically_measurable"].as_bool().unwrap())
        .collect();
    assert!(measurable.iter().all(|m| *m));
}

#[test]
fn shift_observers_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = hybridlab(&[
        "simulate",
        "--t-final",
        "1",
        "--observer",
        "x*p_y",
        "--observer",
        "q",
        "--output",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("report.json"));
    let observers = &report["engines"][0]["observers"];
    assert_eq!(observers[0]["classically_measurable"], false);
    assert_eq!(observers[1]["classically_measurable"], true);
}

fn small_grid_run(dir: &Path, extra: &[&str]) -> Output {
    let base = [
        "compare",
        "--n",
        "32",
        "--l",
        "8",
        "--t-final",
        "1",
        "--dt",
        "0.05",
        "--sample-every",
        "2",
        "--mean",
        "x=1",
        "--snapshots",
        "--output",
    ];
    hybridlab(&[&base[..], &[dir.to_str().unwrap()], extra].concat())
}

#[test]
fn single_threaded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(code(&small_grid_run(&a, &["--single-threaded"])), 0);
    assert_eq!(code(&small_grid_run(&b, &["--single-threaded"])), 0);
    assert_eq!(code(&small_grid_run(&c, &[])), 0);
    for file in ["moments.csv", "grid.csv", "comparison.csv", "plots/grid/04_qpow2.csv"] {
        let first = fs::read(a.join(file)).unwrap();
        assert_eq!(first, fs::read(b.join(file)).unwrap(), "{file}");
        assert_eq!(first, fs::read(c.join(file)).unwrap(), "{file} with several threads");
    }
}

#[test]
fn report_numbers_recompute_from_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = small_grid_run(&run, &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&run.join("report.json"));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;

    let mut series = Vec::new();
    for engine in report["engines"].as_array().unwrap() {
        let (header, rows) = read_csv(&run.join(engine["csv"].as_str().unwrap()));
        let conserved = engine["conserved"].as_str().unwrap();
        assert!(close(engine["conserved_drift"].as_f64().unwrap(), drift(&column(&header, &rows, conserved))));
        if let Some(norm) = engine["norm_drift"].as_f64() {
            let norms = column(&header, &rows, "norm");
            let recomputed = norms.iter().fold(0.0, |m: f64, v| m.max((v - norms[0]).abs()));
            assert!(close(norm, recomputed));
        }
        for (o, plot) in engine["plots"].as_array().unwrap().iter().enumerate() {
            let (plot_header, plot_rows) = read_csv(&run.join(plot.as_str().unwrap()));
            assert_eq!(plot_header[1], header[o + 1]);
            assert_eq!(column(&plot_header, &plot_rows, &header[o + 1]), column(&header, &rows, &header[o + 1]));
        }
        series.push((header, rows));
    }
    let (header, moments) = &series[0];
    let grid = &series[1].1;
    for row in report["comparison"]["rows"].as_array().unwrap() {
        let name = row["observer"].as_str().unwrap();
        let (a, b) = (column(header, moments, name), column(header, grid, name));
        let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(close(row["max_abs_deviation"].as_f64().unwrap(), worst), "{name}");
    }
    for file in report["engines"][1]["files"].as_array().unwrap() {
        let path = run.join(file.as_str().unwrap());
        if path.extension().is_some_and(|e| e == "bin") {
            let marginal = read_snapshot(&mut fs::File::open(&path).unwrap()).unwrap();
            assert!((marginal.total() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn envelope_recomputes_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = hybridlab(&["simulate", "--t-final", "100", "--output", run.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let report = read_json(&run.join("report.json"));
    let (header, rows) = read_csv(&run.join("moments.csv"));
    let amplitude: Vec<f64> = column(&header, &rows, "q^2").iter().map(|v| v.sqrt()).collect();
    let fit = fit_envelope(&column(&header, &rows, "t"), &amplitude).unwrap();
    let reported = &report["engines"][0]["envelope"];
    assert_eq!(reported["degree"].as_u64().unwrap() as usize, fit.degree);
    assert!((reported["residual"].as_f64().unwrap() - fit.residual).abs() <= 1e-12);
    for (i, c) in fit.coefficients.iter().enumerate() {
        assert!((reported["coefficients"][i].as_f64().unwrap() - c).abs() <= 1e-12);
    }
}

#[test]
fn config_files_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    fs::write(&config, "k = 0\n[nogo]\nk = 0.5\n[derive]\nkoopmanian = q*p_x\n").unwrap();
    let config = config.to_str().unwrap();
    assert!(stdout(&hybridlab(&["--config", config, "nogo"])).starts_with("witness = -0.5*i: FAIL"));
    assert_eq!(stdout(&hybridlab(&["nogo", "--config", config, "--k", "0"])), "witness = 0: OK\n");
    let derived = stdout(&hybridlab(&["--config", config, "derive"]));
    assert!(derived.contains("dx/dt = q\n"), "{derived}");

    let observers = dir.path().join("observers.cfg");
    let run = dir.path().join("run");
    fs::write(&observers, format!("[simulate]\nobservers = q, p^2\nt_final = 1\noutput = {}\n", run.display()))
        .unwrap();
    assert_eq!(code(&hybridlab(&["--config", observers.to_str().unwrap(), "simulate"])), 0);
    let (header, rows) = read_csv(&run.join("moments.csv"));
    assert_eq!(header, ["t", "q", "p^2", "K"]);
    assert_eq!(rows.len(), 11);
}

#[test]
fn report_aggregates_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, summary) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("summary"));
    assert_eq!(code(&hybridlab(&["simulate", "--t-final", "1", "--output", a.to_str().unwrap()])), 0);
    assert_eq!(code(&small_grid_run(&b, &[])), 0);
    let out = hybridlab(&["report", a.to_str().unwrap(), b.to_str().unwrap(), "--output", summary.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 2 + 3);
    let json = read_json(&summary.join("summary.json"));
    assert_eq!(json["runs"].as_array().unwrap().len(), 2);
    assert_eq!(json["runs"][1]["density"]["validation"]["pass"], true);
    assert_eq!(fs::read_to_string(summary.join("summary.md")).unwrap(), stdout(&out));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let bad_config = dir.path().join("bad.cfg");
    fs::write(&bad_config, "[nogo]\ncolour = blue\n").unwrap();
    let bad_config = bad_config.to_str().unwrap().to_string();
    let cases: Vec<(Vec<String>, i32)> = vec![
        (vec!["nogo", "--k", "0"], 0),
        (vec!["frobnicate"], 2),
        (vec!["nogo"], 2),
        (vec!["nogo", "--k", "abc"], 2),
        (vec!["derive", "--koopmanian", "q^(-1)"], 2),
        (vec!["derive", "--koopmanian", "2q"], 2),
        (vec!["derive", "--mode", "quantum-quantum"], 2),
        (vec!["spectrum", "--koopmanian", "q^3"], 2),
        (vec!["simulate", "--dt", "0.3", "--t-final", "1"], 2),
        (vec!["simulate", "--dt", "0", "--t-final", "1"], 2),
        (vec!["simulate", "--engine", "grid", "--mode", "classical-classical"], 2),
        (vec!["simulate", "--engine", "grid", "--n", "24"], 2),
        (vec!["simulate", "--observer", "q^3"], 2),
        (vec!["simulate", "--mean", "p=1"], 2),
        (vec!["simulate", "--engine", "grid", "--n", "16", "--l", "3", "--mean", "q=1"], 2),
        (vec!["report", "/nonexistent/run"], 2),
        (vec!["--config", "/nonexistent.cfg", "nogo", "--k", "0"], 2),
        (vec!["--config", &bad_config, "nogo", "--k", "0"], 2),
        (
            vec![
                "simulate",
                "--engine",
                "grid",
                "--k",
                "1",
                "--n",
                "16",
                "--l",
                "6",
                "--dt",
                "0.05",
                "--t-final",
                "20",
                "--output",
                &out("overflow"),
            ],
            1,
        ),
    ]
    .into_iter()
    .map(|(args, c)| (args.into_iter().map(String::from).collect(), c))
    .collect();
    for (args, expected) in cases {
        let mut args: Vec<&str> = args.iter().map(String::as_str).collect();
        let default_out = out("default");
        if args[0] == "simulate" && !args.contains(&"--output") {
            args.extend(["--output", &default_out]);
        }
        let result = hybridlab(&args);
        assert_eq!(code(&result), expected, "{args:?}: {}", String::from_utf8_lossy(&result.stderr));
        if expected != 0 {
            assert!(!result.stderr.is_empty(), "{args:?} printed nothing to stderr");
        }
    }
    let overflow = hybridlab(&[
        "simulate",
        "--engine",
        "grid",
        "--k",
        "1",
        "--n",
        "16",
        "--l",
        "6",
        "--dt",
        "0.05",
        "--t-final",
        "20",
        "--output",
        &out("overflow"),
    ]);
    assert!(
        String::from_utf8_lossy(&overflow.stderr).contains("boundary"),
        "{}",
        String::from_utf8_lossy(&overflow.stderr)
    );
    let threads = hybridlab_with(&["nogo", "--k", "0"], &[("HYBRIDLAB_THREADS", "2")]);
    assert_eq!(code(&threads), 0);
    let zero = hybridlab_with(&["simulate", "--t-final", "1", "--output", &out("zero")], &[("HYBRIDLAB_THREADS", "0")]);
    assert_eq!(code(&zero), 2);
}

/// Every deterministic `$ hybridlab ...` transcript in the guide matches the binary.
#[test]
fn book_transcripts_match() {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../book/src/command-line.md")).unwrap();
    let mut checked = 0;
    for block in text.split("```text").skip(1) {
        let block = block.split("```").next().unwrap();
        for transcript in block.split("$ ").skip(1) {
            let (command, expected) = transcript.split_once('\n').unwrap();
            let args: Vec<&str> = command.split_whitespace().skip(1).collect();
            if args.contains(&"--output") {
                continue;
            }
            let out = hybridlab(&args);
            assert_eq!(code(&out), 0, "{command}");
            assert_eq!(stdout(&out).trim_end(), expected.trim_end(), "{command}");
            checked += 1;
        }
    }
    assert_eq!(checked, 3);
}
