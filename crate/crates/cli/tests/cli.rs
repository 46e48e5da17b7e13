use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cvsense"));
    cmd.env_remove("CVSENSE_THREADS");
    cmd
}

fn crate_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn cvsense")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

type Rows = Vec<HashMap<String, String>>;

fn read_csv(path: &Path) -> Rows {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    reader
        .records()
        .map(|r| header.iter().cloned().zip(r.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn f(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = {:?}", row[key]))
}

fn manifest(out: &Path) -> serde_json::Value {
    let mut path = out.as_os_str().to_owned();
    path.push(".manifest.json");
    serde_json::from_str(&std::fs::read_to_string(PathBuf::from(path)).unwrap()).unwrap()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn fig1_check_passes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("mc.csv");
    let cfg = crate_path("configs/fig1_check.cfg");
    let o = run(&["monte-carlo", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(row["status"], "PASS");
        assert_eq!(row["trials"], "1000000");
        assert!(f(row, "z_score").abs() < 4.0);
    }
    let exact = rows.iter().find(|r| r["scheme"] == "entangled" && r["eta"] == "1").unwrap();
    assert!((f(exact, "analytic_rms") - 0.059017).abs() < 5e-7);
    let m = manifest(&out);
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["command"], "monte-carlo");
    assert_eq!(m["seed"], 2024);
    assert_eq!(m["params"]["cases"].as_array().unwrap().len(), 4);
    for key in ["tool_version", "timestamp", "output_sha256"] {
        assert!(m[key].is_string(), "{key}");
    }
}

#[test]
fn campaigns_are_deterministic_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let cfg = crate_path("configs/fig1_check.cfg");
    let mut bodies = Vec::new();
    for (k, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}.csv"));
        let o = bin()
            .env("CVSENSE_THREADS", threads)
            .args(["monte-carlo", "--config", cfg.to_str().unwrap(), "--trials", "5000", "--seed", "11"])
            .args(["--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        bodies.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[1], bodies[2]);

    let other = dir.path().join("other.csv");
    let o = run(&[
        "monte-carlo",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "5000",
        "--seed",
        "12",
        "--out",
        other.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_ne!(std::fs::read(&other).unwrap(), bodies[0]);
}

#[test]
fn zero_trials_rejected() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("mc.csv");
    let cfg = crate_path("configs/fig1_check.cfg");
    let o = run(&["monte-carlo", "--config", cfg.to_str().unwrap(), "--trials", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("trials"), "{}", stderr(&o));
    assert!(!out.exists());

    let cfg = write_config(&dir, "zero.cfg", "M = 2\nN_S = 1\ntrials = 0\n");
    let o = run(&["monte-carlo", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn config_errors_report_lines() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.csv");
    let cfg = write_config(&dir, "typo.cfg", "M = 2\nN_S = 1\n# comment\netta = 0.9\n");
    let o = run(&["monte-carlo", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 4") && err.contains("unknown key `etta`"), "{err}");

    let cfg = write_config(&dir, "bad.cfg", "M = 2\nN_S = 1\neta = 0.9, 1.2\n");
    let o = run(&["monte-carlo", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = run(&["rms-curve", "--bogus-flag", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn weighted_rows_match_oracles() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("w.csv");
    let cfg = crate_path("configs/weighted_two_node.cfg");
    let o = run(&["weighted", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 16);
    for row in &rows {
        let sum: f64 = row["weights"].split(';').map(|w| w.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-12, "{row:?}");
        if !row["photons"].is_empty() {
            let total: f64 = row["photons"].split(';').map(|n| n.parse::<f64>().unwrap()).sum();
            assert!((total - f(row, "N_S")).abs() < 1e-10);
            assert!(f(row, "kkt_residual") < 1e-8);
        }
        if !row["grid_gap"].is_empty() {
            assert!(f(row, "grid_gap").abs() < 1e-6, "{row:?}");
        }
    }
    let oracle_rows = rows.iter().filter(|r| !r["grid_gap"].is_empty()).count();
    assert_eq!(oracle_rows, 9);

    // Uniform three-node case: closed forms for equal weights and losses.
    let uniform: Vec<_> = rows.iter().filter(|r| r["case"] == "3").collect();
    let s = |n: f64| ((n + 1.0).sqrt() + n.sqrt()).powi(2);
    let ent = 0.5 * (0.8 / (3.0 * s(6.0)) + 0.2 / 3.0f64).sqrt();
    let prod = 0.5 * (0.8 / (3.0 * s(2.0)) + 0.2 / 3.0f64).sqrt();
    assert!((f(uniform[0], "objective") - ent).abs() < 1e-14);
    assert!((f(uniform[1], "objective") - prod).abs() < 1e-14);
}

#[test]
fn weighted_flags_and_empty_budget() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("w.csv");
    let o = run(&["weighted", "--eta", "1,0.5", "--total-photons", "10", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&out);
    let w = &rows[2]["weights"];
    let w1: f64 = w.split(';').next().unwrap().parse().unwrap();
    assert!((w1 - 0.955532).abs() < 1e-6);
    let o = run(&["weighted", "--eta", "1,0.5", "--total-photons", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["weighted", "--eta", "1,0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fisher_tables() {
    let dir = TempDir::new().unwrap();
    let info = dir.path().join("info.csv");
    let o = run(&["fisher", "--seed", "5", "--out", info.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&info);
    assert_eq!(rows.len(), 21);
    assert_eq!(f(&rows[0], "r_B"), 0.0);
    assert_eq!(f(&rows[0], "I_F_closed"), 4.0);
    assert!(f(&rows[0], "relative_gap") < 1e-6);
    assert!(rows.iter().all(|r| f(r, "relative_gap") < 1e-4));
    assert_eq!(manifest(&info)["seed"], 5);

    let cr = dir.path().join("cr.csv");
    let o = run(&["fisher", "--table", "cr", "--out", cr.to_str().unwrap()]);
    assert!(o.status.success());
    for row in read_csv(&cr) {
        assert!(f(&row, "difference").abs() <= 4.0 * f64::EPSILON * f(&row, "product_rms"), "{row:?}");
    }

    let o = run(&["fisher", "--point", "0.5,0.1", "--out", info.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn phase_sweep_residuals_and_baseline() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("phase.csv");
    let cfg = crate_path("configs/phase_sweep.cfg");
    let o = run(&["phase", "--config", cfg.to_str().unwrap(), "--trials", "200000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&out);
    let residual = |dphi: &str| {
        let row = rows.iter().find(|r| r["row"] == "signal" && r["dphi"] == dphi).unwrap();
        f(row, "linearization_residual")
    };
    let (r1, r2, r4) = (residual("0.005"), residual("0.01"), residual("0.02"));
    assert!((r2 / r1 - 4.0).abs() < 1.0, "{r1} {r2}");
    assert!((r4 / r1 - 16.0).abs() < 4.0, "{r1} {r4}");

    let zero = rows.iter().find(|r| r["row"] == "signal" && r["dphi"] == "0").unwrap();
    let se_mean = f(zero, "empirical_rms") / f(zero, "trials").sqrt();
    assert!(f(zero, "bias").abs() < 5.0 * se_mean);

    let base = rows.iter().find(|r| r["row"] == "baseline").unwrap();
    assert_eq!(f(base, "N_S"), 0.0);
    let sql = 1.0 / (100.0f64 * 2.0 * 1.0).sqrt();
    assert!((f(base, "exact_rms") - sql).abs() < 1e-14);
    assert!((f(base, "linear_rms") - sql).abs() < 1e-14);
    assert!(rows.iter().all(|r| r["status"] == "PASS"));
}

#[test]
fn phase_guard_violation() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("phase.csv");
    let o = run(&[
        "phase",
        "--m",
        "2",
        "--total-photons",
        "2",
        "--probe-photons",
        "100",
        "--dphi",
        "0.01,-0.35",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("guard"), "{}", stderr(&o));
}

fn slope(rows: &[&HashMap<String, String>]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (f(r, "M").log10(), f(r, "delta_alpha").log10())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn rms_curve_slopes_cap_and_warnings() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("rms.csv");
    let o = run(&["rms-curve", "--eta", "1,0.95", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 2 * 2 * 61);
    let pick = |scheme: &str, eta: &str, lo: f64| -> Vec<&HashMap<String, String>> {
        rows.iter()
            .filter(|r| r["scheme"] == scheme && r["eta"] == eta && f(r, "M") >= lo)
            .collect()
    };
    assert!((slope(&pick("entangled", "1", 100.0)) + 1.0).abs() < 0.02);
    assert!((slope(&pick("product", "1", 100.0)) + 0.5).abs() < 0.02);
    // Loss flattens the entangled curve toward the shot-noise slope.
    let lossy = slope(&pick("entangled", "0.95", 1000.0));
    assert!(lossy > -0.6, "{lossy}");
    assert!(rows.iter().all(|r| f(r, "n_S") == 1.0));
    let warnings = manifest(&out)["warnings"].as_array().unwrap().len();
    assert_eq!(warnings, 2);
    assert!(stderr(&o).contains("40 dB"));

    let o = run(&["rms-curve", "--n-per-node", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--no-cap"));
    let o = run(&["rms-curve", "--n-per-node", "2", "--no-cap", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let o = run(&["rms-curve", "--m-min", "100", "--m-max", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ratio_curves() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ratio.csv");
    let o = run(&["ratio-curve", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&out);
    for row in rows.iter().filter(|r| r["M"] == "1") {
        assert!(f(row, "ratio_db").abs() < 1e-12);
    }
    assert_eq!(rows.iter().filter(|r| r["M"] == "1").count(), 6);
    let lossless: Vec<f64> = rows.iter().filter(|r| r["eta"] == "1").map(|r| f(r, "ratio_db")).collect();
    assert!(lossless.windows(2).all(|w| w[1] > w[0]));
    let last = *lossless.last().unwrap();
    assert!(last > 15.0 && last < 10.0 * (4.0f64 * 10.0).log10() + 0.25, "{last}");
    let notes = manifest(&out)["notes"].to_string();
    assert!(notes.contains("not reproduced"), "{notes}");

    let o = run(&["ratio-curve", "--mode", "vs-loss", "--m", "20", "--eta", "0.9", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = read_csv(&out);
    assert!((f(&rows[0], "ratio_db") - 4.49).abs() < 0.01);

    let o = run(&["ratio-curve", "--mode", "vs-loss", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(read_csv(&out).len(), 6 * 101);
}

#[test]
fn bundled_manifests_replay() {
    let dir = TempDir::new().unwrap();
    for name in ["rms_curve", "weighted_two_node", "fig1_check_small"] {
        let manifest = crate_path(&format!("manifests/{name}.csv.manifest.json"));
        let out = dir.path().join(format!("{name}.csv"));
        let o = run(&["replay", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let bundled = std::fs::read(crate_path(&format!("manifests/{name}.csv"))).unwrap();
        assert_eq!(std::fs::read(&out).unwrap(), bundled, "{name}");
    }
}

#[test]
fn replay_detects_tampering() {
    let dir = TempDir::new().unwrap();
    let original = crate_path("manifests/rms_curve.csv.manifest.json");
    let mut m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(original).unwrap()).unwrap();
    m["params"]["etas"] = serde_json::json!([1.0, 0.99, 0.9]);
    let tampered = write_config(&dir, "t.json", &m.to_string());
    let o = run(&["replay", tampered.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("digest"));

    m["command"] = serde_json::json!("nonsense");
    let broken = write_config(&dir, "b.json", &m.to_string());
    let o = run(&["replay", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
