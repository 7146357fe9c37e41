use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_activereg"));
    c.env_remove("ACTIVE_SAMPLER_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

const SMALL: &[&str] = &["--degree", "4", "--epsilon", "0.5", "--trials", "6", "--dist", "uniform-grid:201"];

#[test]
fn same_seed_gives_byte_identical_csv() {
    let mut args = SMALL.to_vec();
    args.extend(["--seed", "17", "--jobs", "1"]);
    let a = ok(&args).stdout;
    let b = ok(&args).stdout;
    assert_eq!(a, b);
    let last = args.len() - 1;
    args[last] = "3";
    assert_eq!(ok(&args).stdout, a, "worker count must not change the output");
    let seed = args.len() - 3;
    args[seed] = "18";
    assert_ne!(ok(&args).stdout, a);
}

#[test]
fn seed_falls_back_to_env() {
    let a = ok(&[SMALL, &["--seed", "5"]].concat()).stdout;
    let b = bin().args(SMALL).env("ACTIVE_SAMPLER_SEED", "5").output().unwrap();
    assert!(b.status.success());
    assert_eq!(a, b.stdout);
}

#[test]
fn zero_noise_recovers_exactly_for_every_sampler() {
    for sampler in ["bss", "leverage", "uniform", "iid:chebyshev-grid:201"] {
        let out = ok(&[SMALL, &["--noise", "zero", "--sampler", sampler]].concat());
        let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
        assert_eq!(rows.len(), 6);
        for r in rows {
            assert_eq!(r[6], "ok", "{sampler}: {r:?}");
            let err: f64 = r[3].parse().unwrap();
            assert!(err <= 1e-16, "{sampler}: err {err}");
        }
    }
}

#[test]
fn out_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let out = ok(&[SMALL, &["--seed", "3", "--out", csv.to_str().unwrap()]].concat());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("trial,labels,unlabeled,err_sq,noise_sq,retries,status\n"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 3);
    assert_eq!(summary["config"]["degree"], 4);
    assert!(summary["rng"].as_str().unwrap().starts_with("chacha8"));
    assert_eq!(summary["summary"]["trials"], 6);
    assert!(summary["summary"]["normalized_err"]["mean"].as_f64().unwrap() >= 0.0);
}

#[test]
fn timing_column_is_opt_in() {
    let out = ok(&[SMALL, &["--timing"]].concat());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",wall_ms"));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{\n  \"trials\": 2,\n  \"noise\": \"zero\"\n}\n").unwrap();
    let out = ok(&[SMALL, &["--noise", "gauss:1", "--config", cfg.to_str().unwrap()]].concat());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[4] == "0"));
}

#[test]
fn config_errors_are_line_precise() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("{\n  \"trials\": 2,\n  \"epsilon\": 2.0\n}\n", "line 3"),
        ("{\n  \"trials\": 2,\n\n  \"sampel\": \"bss\"\n}\n", "line 4"),
        ("{\n  \"trials\": 2,\n}\n", "line 3"),
        ("{\n  \"family\": \"hermite\"\n}\n", "line 2"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let cfg = dir.path().join(format!("bad{i}.json"));
        std::fs::write(&cfg, text).unwrap();
        let out = run(&["--config", cfg.to_str().unwrap()]);
        assert!(!out.status.success());
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "case {i}: {err}");
    }
}

#[test]
fn bad_flags_fail_fast() {
    assert!(!run(&["--sampler", "magic"]).status.success());
    assert!(!run(&["--epsilon", "0"]).status.success());
    assert!(!run(&["--sampler", "bss", "--labels", "10"]).status.success());
}

#[test]
fn adversarial_noise_presets_and_tables() {
    for noise in ["adversarial:bump", "adversarial:sinusoid:0.5:3"] {
        let out = ok(&[SMALL, &["--noise", noise]].concat());
        let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
        assert!(rows.iter().all(|r| r[6] == "ok"));
    }
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("g.csv");
    let mut text = String::from("x,g\n");
    for i in 0..201 {
        let x = -1.0 + 2.0 * i as f64 / 200.0;
        text.push_str(&format!("{x},{}\n", (7.0 * x).sin()));
    }
    std::fs::write(&table, text).unwrap();
    let spec = format!("adversarial:file:{}", table.display());
    ok(&[SMALL, &["--noise", &spec]].concat());
}

#[test]
fn custom_family_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("basis.csv");
    let mut text = String::from("x,p,b1,b2,b3\n");
    for i in 0..50 {
        let x = -1.0 + 2.0 * i as f64 / 49.0;
        text.push_str(&format!("{x},0.02,1,{x},{}\n", x.abs()));
    }
    std::fs::write(&path, text).unwrap();
    let family = format!("custom:{}", path.display());
    let out = ok(&["--family", &family, "--noise", "zero", "--trials", "2", "--epsilon", "0.5"]);
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() <= 1e-16));
}

#[test]
fn active_mode_reports_budgets() {
    let out = ok(&[
        "active",
        "--degree",
        "3",
        "--epsilon",
        "0.5",
        "--trials",
        "2",
        "--true-dist",
        "uniform-grid:301",
        "--m0",
        "400",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["m0"], 400.0);
    assert!(report["labels"]["mean"].as_f64().unwrap() > 0.0);
    assert_eq!(report["failures"], 0);
}

fn density_rows(out: &Output) -> Vec<[f64; 3]> {
    csv_rows(&String::from_utf8(out.stdout.clone()).unwrap())
        .into_iter()
        .map(|r| [r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap()])
        .collect()
}

fn assert_symmetric_normalized(rows: &[[f64; 3]]) {
    let n = rows.len();
    let total: f64 = rows.iter().map(|r| r[2]).sum();
    assert!((total - 1.0).abs() < 1e-9);
    for i in 0..n / 2 {
        assert!((rows[i][0] + rows[n - 1 - i][0]).abs() < 1e-12);
        assert!((rows[i][1] - rows[n - 1 - i][1]).abs() < 1e-9 * rows[i][1].max(1.0));
    }
}

#[test]
fn leverage_density_export() {
    let rows = density_rows(&ok(&["weights", "--degree", "8", "--dist", "uniform-grid:401"]));
    assert_eq!(rows.len(), 401);
    assert_symmetric_normalized(&rows);
    // Polynomial leverage piles up at the ends.
    assert!(rows[0][1] > 5.0 * rows[200][1]);
}

#[test]
fn fourier_density_export() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    ok(&["sparseft", "weights", "--k", "8", "--out", path.to_str().unwrap()]);
    let out =
        Output { status: std::process::ExitStatus::default(), stdout: std::fs::read(&path).unwrap(), stderr: vec![] };
    let rows = density_rows(&out);
    assert!(rows.len() >= 1000);
    assert_symmetric_normalized(&rows);
    assert!(rows[0][1] > rows[rows.len() / 2][1]);
}

#[test]
fn sparseft_recover_on_net() {
    let out =
        ok(&["sparseft", "recover", "--k", "1", "--F", "5", "--net", "0.01", "--freqs", "1.37", "--samples", "40"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["recovered"]["freqs"][0].as_f64().unwrap() - 1.37).abs() < 1e-9);
    assert!(report["err_sq"].as_f64().unwrap() < 1e-16);
}

#[test]
fn sample_export_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv");
    let t = dir.path().join("t.jsonl");
    let out = ok(&[
        "sample",
        "--degree",
        "3",
        "--epsilon",
        "0.25",
        "--out",
        w.to_str().unwrap(),
        "--trace",
        t.to_str().unwrap(),
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    let rows = std::fs::read_to_string(&w).unwrap().lines().count() - 1;
    assert_eq!(report["labels"], rows);
    let trace: Vec<serde_json::Value> =
        std::fs::read_to_string(&t).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(trace.len(), rows);
    for (j, step) in trace.iter().enumerate() {
        assert_eq!(step["j"], j);
        assert!(step["u"].as_f64().unwrap() > step["l"].as_f64().unwrap());
    }
    assert!(run(&["sample", "--sampler", "leverage", "--trace", t.to_str().unwrap()]).status.code() != Some(0));
}

#[test]
fn subcommands_reject_run_flags() {
    assert!(!run(&["--trials", "2", "weights"]).status.success());
}
