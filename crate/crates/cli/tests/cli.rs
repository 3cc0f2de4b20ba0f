use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn hitchin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitchin"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = hitchin(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: PathBuf) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn painleve_writes_csv_and_manifest() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["painleve", "--out", "psi.csv"]);
    let (header, rows) = csv_rows(dir.path().join("psi.csv"));
    assert_eq!(header, ["x", "psi", "dpsi", "eta", "residual"]);
    assert_eq!(rows.len(), 2048);
    assert!(rows.iter().all(|r| r[1] > 0.0 && r[2] < 0.0));
    let m = json(dir.path().join("psi.csv.manifest.json"));
    assert_eq!(m["command"], "painleve");
    assert_eq!(m["params"]["nodes"], 2048);
    assert!(m["tool_version"].is_string());
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &["painleve", "--nodes", "256", "--out", "a.csv"],
    );
    ok(
        dir.path(),
        &[
            "--jobs", "2", "painleve", "--nodes", "256", "--out", "b.csv",
        ],
    );
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn numbers_carry_seventeen_significant_digits() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "eigen",
            "--t-list",
            "10,100",
            "--n-radial",
            "512",
            "--out",
            "e.csv",
        ],
    );
    let text = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    let row = text.lines().nth(1).unwrap();
    for field in row.split(',') {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.len(), 18, "{field}");
    }
}

#[test]
fn clambda_row_at_zero_is_four() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "clambda",
            "--lambda-min",
            "-0.2",
            "--lambda-max",
            "0.2",
            "--steps",
            "21",
            "--nodes",
            "512",
            "--out",
            "c.csv",
        ],
    );
    let (header, rows) = csv_rows(dir.path().join("c.csv"));
    assert_eq!(header, ["lambda", "c_lambda", "err"]);
    assert_eq!(rows.len(), 21);
    let zero = rows.iter().find(|r| r[0] == 0.0).unwrap();
    assert!((zero[1] - 4.0).abs() < 1e-3, "{}", zero[1]);
    assert!(rows.windows(2).all(|w| w[1][1] > w[0][1]));
}

#[test]
fn weights_barycenter_is_exact() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "weights", "--genus", "2", "--deg-l", "0", "--dbeta", "1", "--dgamma", "0", "--out",
            "w.json",
        ],
    );
    let w = json(dir.path().join("w.json"));
    assert_eq!(w["stability"], "Stable");
    assert_eq!(
        w["barycenter"],
        serde_json::json!(["1/4", "-1/12", "-1/12", "-1/12"])
    );
    assert_eq!(w["vertices"].as_array().unwrap().len(), 3);
    assert!(dir.path().join("w.json.manifest.json").exists());
}

#[test]
fn zero_psi_drift_passes_the_report_trivially() {
    let dir = TempDir::new().unwrap();
    let mut table = String::from("lambda,c_lambda,err\n");
    for k in -8..=8 {
        let l = 0.025 * k as f64;
        table += &format!("{l},{},0\n", 4.0 * (4.0 * l).exp());
    }
    fs::write(dir.path().join("c.csv"), table).unwrap();
    ok(
        dir.path(),
        &[
            "weights",
            "--genus",
            "2",
            "--deg-l",
            "0",
            "--dbeta",
            "1",
            "--dgamma",
            "0",
            "--t",
            "100,10000",
            "--clambda-file",
            "c.csv",
            "--out",
            "w.json",
        ],
    );
    let w = json(dir.path().join("w.json"));
    for row in w["drift"].as_array().unwrap() {
        assert_eq!(row["drift"].as_f64(), Some(0.0));
    }
    let rows = w["lambda_t"].as_array().unwrap();
    assert_eq!(rows[0]["lambda"], rows[1]["lambda"]);
    let m = json(dir.path().join("w.json.manifest.json"));
    assert_eq!(m["input_digests"].as_object().unwrap().len(), 1);
    ok(
        dir.path(),
        &[
            "convergence-report",
            "--input",
            "w.json.drift.csv",
            "--out",
            "r.json",
        ],
    );
    let r = json(dir.path().join("r.json"));
    assert_eq!(r["overall"], "PASS");
    assert!(r["series"][0]["fit"].is_null());
}

#[test]
fn report_recovers_synthetic_slope() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("t,t_pow,max_residual\n");
    for t in [4.0f64, 8.0, 16.0, 32.0] {
        let tp = t.powf(2.0 / 3.0);
        text += &format!("{t},{tp:.17e},{:.17e}\n", (1.25 - 0.8 * tp).exp());
    }
    fs::write(dir.path().join("s.csv"), text).unwrap();
    ok(
        dir.path(),
        &["convergence-report", "--input", "s.csv", "--out", "r.json"],
    );
    let r = json(dir.path().join("r.json"));
    let slope = r["series"][0]["fit"]["slope"].as_f64().unwrap();
    assert!((slope + 0.8).abs() < 1e-6, "{slope}");
    assert_eq!(r["overall"], "PASS");
}

#[test]
fn gamma_sweep_feeds_the_report() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "residual-sweep",
            "--zero-type",
            "gamma",
            "--t-list",
            "4,8,16,32",
            "--grid",
            "64x32",
            "--out",
            "s.csv",
        ],
    );
    let fit = json(dir.path().join("s.csv.fit.json"));
    assert!(fit["fit_slope"].as_f64().unwrap() < 0.0);
    ok(
        dir.path(),
        &["convergence-report", "--input", "s.csv", "--out", "r.json"],
    );
    assert_eq!(json(dir.path().join("r.json"))["overall"], "PASS");
}

#[test]
fn malformed_csv_names_the_line() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("bad.csv"),
        "t,t_pow,max_residual\n1,1,0.5\n2,oops,0.25\n",
    )
    .unwrap();
    let out = hitchin(
        dir.path(),
        &[
            "convergence-report",
            "--input",
            "bad.csv",
            "--out",
            "r.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn glue_samples_the_annulus() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "glue",
            "--zero-type",
            "beta",
            "--t",
            "4",
            "--grid",
            "16x8",
            "--out",
            "g.csv",
        ],
    );
    let (header, rows) = csv_rows(dir.path().join("g.csv"));
    assert_eq!(header.last().unwrap(), "residual");
    assert_eq!(rows.len(), 16 * 8);
}

#[test]
fn solve_disk_reports_history_and_oracle_gap() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "solve-disk",
            "--zero-type",
            "gamma",
            "--t",
            "4",
            "--grid",
            "16x8",
            "--out",
            "d.json",
        ],
    );
    let d = json(dir.path().join("d.json"));
    let hist = d["residual_history"].as_array().unwrap();
    assert!(hist.last().unwrap().as_f64().unwrap() <= 1e-10);
    assert_eq!(d["iterations"].as_u64().unwrap() as usize + 1, hist.len());
    assert!(d["gt_sup_norm"].as_f64().unwrap().is_finite());
    assert!(
        d["comparison_to_oracle"]["discretization_error"]
            .as_f64()
            .unwrap()
            > 0.0
    );
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let code = |args: &[&str]| hitchin(dir.path(), args).status.code();
    assert_eq!(code(&["painleve", "--bogus", "--out", "x.csv"]), Some(64));
    assert_eq!(code(&["no-such-command"]), Some(64));
    assert_eq!(
        code(&["glue", "--zero-type", "delta", "--t", "1", "--out", "x.csv"]),
        Some(64)
    );
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(
        code(&["painleve", "--x-min", "-1", "--out", "x.csv"]),
        Some(1)
    );
    assert_eq!(
        code(&[
            "weights", "--genus", "0", "--deg-l", "0", "--dbeta", "0", "--dgamma", "0", "--out",
            "w.json"
        ]),
        Some(1)
    );
    assert_eq!(
        code(&["eigen", "--t-list", "10", "--delta", "-1", "--out", "e.csv"]),
        Some(1)
    );
}
