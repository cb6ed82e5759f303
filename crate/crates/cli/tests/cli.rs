use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn pdmm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdmm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn column(csv_text: &str, name: &str) -> Vec<f64> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = rdr
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == name)
        .unwrap();
    rdr.records()
        .map(|r| r.unwrap()[idx].parse().unwrap())
        .collect()
}

const SMALL_QUAD: [&str; 7] = ["quadratic", "--n", "30", "--m", "15", "--seed", "3"];

#[test]
fn quadratic_defaults_end_below_bound() {
    let tmp = TempDir::new().unwrap();
    let o = pdmm(&["quadratic"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    let dist = column(&csv, "dist_true_solution");
    let bound = column(&csv, "bound");
    assert!(dist.last().unwrap() <= bound.last().unwrap());
    assert!(bound.windows(2).all(|w| w[0] == w[1]));
    let r = report(tmp.path());
    assert_eq!(r["results"]["termination"], "converged");
    assert_eq!(r["results"]["certificate"]["passed"], true);
    let rate = &r["results"]["rate"];
    assert!(
        rate["empirical_log_rate"].as_f64().unwrap()
            <= rate["theoretical_log_rate"].as_f64().unwrap()
    );
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(code(&pdmm(&SMALL_QUAD, a.path())), 0);
    assert_eq!(code(&pdmm(&SMALL_QUAD, b.path())), 0);
    for f in ["trace.csv", "report.json", "config.toml"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn seed_changes_the_instance() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    pdmm(&SMALL_QUAD, a.path());
    let mut other = SMALL_QUAD;
    other[6] = "4";
    pdmm(&other, b.path());
    assert_ne!(
        fs::read(a.path().join("trace.csv")).unwrap(),
        fs::read(b.path().join("trace.csv")).unwrap()
    );
}

#[test]
fn resolved_config_reproduces_the_report() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = [
        "divergence",
        "--z",
        "2.5",
        "--iterations",
        "300",
        "--seed",
        "9",
    ];
    assert_eq!(code(&pdmm(&args, a.path())), 0);
    let cfg = a.path().join("config.toml");
    let o = pdmm(&["run", "--config", cfg.to_str().unwrap()], b.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(a.path().join("report.json")).unwrap(),
        fs::read(b.path().join("report.json")).unwrap()
    );
    assert_eq!(
        fs::read(a.path().join("growth.csv")).unwrap(),
        fs::read(b.path().join("growth.csv")).unwrap()
    );
}

#[test]
fn config_file_values_and_flag_overrides() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("exp.toml");
    fs::write(
        &cfg,
        "experiment = \"counterexample\"\n[counterexample]\nn = 3\niterations = 40\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = pdmm(&["run", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["config"]["counterexample"]["n"], 3);
    assert_eq!(r["results"]["iterations"], 40);

    let out2 = tmp.path().join("out2");
    let o = pdmm(
        &[
            "counterexample",
            "--config",
            cfg.to_str().unwrap(),
            "--iterations",
            "7",
        ],
        &out2,
    );
    assert_eq!(code(&o), 0);
    assert_eq!(report(&out2)["results"]["iterations"], 7);
}

#[test]
fn zero_mismatch_columns_coincide() {
    let tmp = TempDir::new().unwrap();
    let mut args = SMALL_QUAD.to_vec();
    args.extend(["--mismatch-scale", "0"]);
    let o = pdmm(&args, tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    let fp = column(&csv, "dist_fixed_point");
    let ts = column(&csv, "dist_true_solution");
    for (a, b) in fp.iter().zip(&ts) {
        assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }
    let r = report(tmp.path());
    assert_eq!(r["results"]["plan"]["provenance"], "classical");
    assert_eq!(r["results"]["error_bound"], 0.0);
}

#[test]
fn counterexample_grows_monotonically() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        code(&pdmm(
            &["counterexample", "--iterations", "200"],
            tmp.path()
        )),
        0
    );
    let r = report(tmp.path());
    assert_eq!(r["status"], "ok");
    assert_eq!(r["results"]["monotone_increase"], true);
    let csv = fs::read_to_string(tmp.path().join("growth.csv")).unwrap();
    let x_min = column(&csv, "x_min");
    assert!(x_min.windows(2).all(|w| w[1] > w[0]));
    // Once y ≡ 1, each step adds α_mm·τ = 0.5.
    let tail = &x_min[x_min.len() - 2..];
    assert!((tail[1] - tail[0] - 0.5).abs() < 1e-12);
}

#[test]
fn divergence_matches_tau_sum() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&pdmm(&["divergence"], tmp.path())), 0);
    let csv = fs::read_to_string(tmp.path().join("growth.csv")).unwrap();
    let x1 = column(&csv, "x1");
    let y = column(&csv, "y");
    let tau = column(&csv, "tau");
    // Independent recursion: τ_{i+1} = τ_i/sqrt(1 + 2τ_i), x¹ accumulates τ_i·z.
    let mut t: f64 = 0.5;
    let mut sum = 0.0;
    for i in 0..x1.len() {
        sum += t;
        t /= (1.0 + 2.0 * t).sqrt();
        assert!((x1[i] - sum).abs() <= 1e-10 * (1.0 + sum));
        assert!((tau[i] - t).abs() <= 1e-12);
        assert!((y[i] + 1.0).abs() <= 1e-12);
    }
    assert!(x1[9_999] > x1[99]);
    assert_eq!(
        report(tmp.path())["results"]["observed"],
        "diverges_unbounded"
    );
}

#[test]
fn divergence_with_zero_data_is_stationary() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        code(&pdmm(
            &["divergence", "--z", "0", "--iterations", "50"],
            tmp.path()
        )),
        0
    );
    let r = report(tmp.path());
    assert_eq!(r["results"]["stationary"], true);
    assert_eq!(r["results"]["observed"], "stationary");
}

#[test]
fn certify_feasible_and_infeasible() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&pdmm(&["certify"], tmp.path())), 0);
    let planners = report(tmp.path())["results"]["planners"].clone();
    for p in planners.as_array().unwrap() {
        if p["planner"] != "classical" {
            assert_eq!(p["certificate"]["passed"], true, "{p}");
        }
    }

    let bad = TempDir::new().unwrap();
    let args = [
        "certify",
        "--gamma-g",
        "0.1",
        "--gamma-fstar",
        "0.1",
        "--norm-amv",
        "0.5",
    ];
    assert_eq!(code(&pdmm(&args, bad.path())), 0);
    let r = report(bad.path());
    assert_eq!(r["results"]["precondition"]["satisfied"], false);
    let by_name = |n: &str| {
        r["results"]["planners"]
            .as_array()
            .unwrap()
            .iter()
            .find(|p| p["planner"] == n)
            .unwrap()
            .clone()
    };
    assert!(by_name("thm32")["error"]
        .as_str()
        .unwrap()
        .contains("precondition"));
    assert!(by_name("cor33")["error"]
        .as_str()
        .unwrap()
        .contains("precondition"));
    assert_eq!(by_name("thm31")["status"], "rejected");
}

#[test]
fn certify_zero_mismatch_notes_classical() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&pdmm(&["certify", "--norm-amv", "0"], tmp.path())), 0);
    let r = report(tmp.path());
    let planners = r["results"]["planners"].as_array().unwrap();
    let classical = planners
        .iter()
        .find(|p| p["planner"] == "classical")
        .unwrap();
    assert_eq!(classical["certificate"]["passed"], true);
    assert!(classical["note"]
        .as_str()
        .unwrap()
        .contains("zero mismatch"));
    let thm32 = planners.iter().find(|p| p["planner"] == "thm32").unwrap();
    assert!(thm32["error"].as_str().unwrap().contains("zero mismatch"));
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(
        &cfg,
        "experiment = \"quadratic\"\n[quadratic]\nalpah = 1.0\n",
    )
    .unwrap();
    assert_eq!(
        code(&pdmm(
            &["run", "--config", cfg.to_str().unwrap()],
            tmp.path()
        )),
        2
    );
    assert_eq!(code(&pdmm(&["run"], tmp.path())), 2);
    assert_eq!(code(&pdmm(&["counterexample", "--x0", "0"], tmp.path())), 2);
    assert_eq!(
        code(&pdmm(
            &["divergence", "--tau0", "1", "--sigma0", "1"],
            tmp.path()
        )),
        2
    );
    assert_eq!(code(&pdmm(&["ct", "--lambda1", ""], tmp.path())), 2);
}

#[test]
fn violated_precondition_reports_measured_quantities() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "quadratic",
        "--n",
        "20",
        "--m",
        "10",
        "--alpha",
        "0.001",
        "--beta",
        "0.001",
        "--mismatch-scale",
        "0.5",
    ];
    let o = pdmm(&args, tmp.path());
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("precondition") && err.contains("‖A−V‖"),
        "{err}"
    );
    assert!(!tmp.path().join("report.json").exists());
}

#[test]
fn ct_small_sweep_writes_all_artifacts() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = [
        "ct",
        "--height",
        "24",
        "--width",
        "24",
        "--n-angles",
        "8",
        "--n-bins",
        "34",
        "--lambda1",
        "0.6,1.2",
        "--max-iter",
        "300",
    ];
    let o = pdmm(&args, a.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    pdmm(&args, b.path());
    let r = report(a.path());
    let artifacts: Vec<&str> = r["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for f in [
        "phantom.pgm",
        "sinogram.csv",
        "sweep.csv",
        "timing.json",
        "lambda1_00/mismatched_trace.csv",
        "lambda1_01/matched_abs_error.pgm",
    ] {
        assert!(artifacts.contains(&f), "{f}");
        assert!(a.path().join(f).exists());
    }
    assert_eq!(r["results"]["sweep"].as_array().unwrap().len(), 2);
    let pgm = fs::read(a.path().join("lambda1_00/matched_recon.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n24 24\n255\n"));
    assert_eq!(pgm.len(), "P5\n24 24\n255\n".len() + 24 * 24);
    let sino = fs::read_to_string(a.path().join("sinogram.csv")).unwrap();
    assert_eq!(sino.lines().count(), 8);
    assert_eq!(sino.lines().next().unwrap().split(',').count(), 34);
    // Everything except wall times is reproducible.
    for f in artifacts.iter().filter(|f| **f != "timing.json") {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}
