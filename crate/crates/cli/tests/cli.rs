use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_skyrme-lab");

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(BIN).arg(args[0]).arg("--config").arg(&cfg).args(&args[1..]).env_remove("SKYRME_LAB_OUT").output().unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn profile_writes_101_rows_ending_at_pi() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run(tmp.path(), &["profile", "--out", out.to_str().unwrap()], "[profile]\nsamples = 101\n");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# units:")));
    assert_eq!(text.lines().find(|l| !l.starts_with('#')).unwrap(), "rho,U,U_tilde,U1,U2");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 101);
    let last: f64 = rows[100][1].parse().unwrap();
    assert!((last - std::f64::consts::PI).abs() <= 1e-10);
    let rho_star: f64 = rows[100][0].parse().unwrap();
    assert!((rho_star - 5f64.sqrt()).abs() <= 1e-14);
}

#[test]
fn spectrum_defaults_have_one_unstable_eigenvalue() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run(tmp.path(), &["spectrum", "--out", out.to_str().unwrap()], "");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("spectrum.json"));
    let eigs = report["eigenvalues"].as_array().unwrap();
    let unstable = eigs.iter().filter(|e| e["resolved"].as_bool().unwrap() && e["re"].as_f64().unwrap() >= 0.0).count();
    assert_eq!(unstable, 1);
    let vectors = fs::read_to_string(out.join("eigenvectors.csv")).unwrap();
    assert_eq!(data_rows(&vectors).len(), report["n_fine"].as_u64().unwrap() as usize);
}

#[test]
fn negative_lambda_is_a_config_error_without_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    for cmd in ["profile", "shoot", "evolve"] {
        let o = run(tmp.path(), &[cmd, "--out", out.to_str().unwrap()], "[model]\nlambda = -0.1\n");
        assert_eq!(o.status.code(), Some(1));
        assert!(String::from_utf8_lossy(&o.stderr).contains("model.lambda"));
        assert!(!out.exists());
    }
}

#[test]
fn malformed_configs_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out_arg = out.to_str().unwrap();
    for (cmd, cfg, field) in [
        ("profile", "[model]\nlamda = 0.1\n", "lamda"),
        ("spectrum", "[spectrum]\nn_coarse = 64\nn_fine = 80\n", "spectrum.n_fine"),
        ("shoot", "[shoot]\nbracket = [1.1, 0.9]\n", "shoot.bracket"),
        ("evolve-sim", "[similarity.perturbation]\nkind = \"gaussian\"\na1 = 1.0\na2 = 0.0\nwidth = -1.0\n", "similarity.perturbation"),
        ("sweep", "[sweep]\nlambdas = []\n", "sweep.lambdas"),
    ] {
        let o = run(tmp.path(), &[cmd, "--out", out_arg], cfg);
        assert_eq!(o.status.code(), Some(1), "{cmd}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(field), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists());
    }
    let missing = Command::new(BIN).args(["profile", "--config", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
    let bad_command = Command::new(BIN).args(["bogus", "--config", "x.toml"]).output().unwrap();
    assert_eq!(bad_command.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run(tmp.path(), &["shoot", "--out", out.to_str().unwrap()], "[shoot]\nbracket = [0.9, 0.95]\n");
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let record = json(&out.join("run_record.json"));
    assert!(record["error"].as_str().unwrap().contains("bracket"));
}

#[test]
fn environment_sets_the_default_output_directory() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[output]\ndir = \"from_config\"\n").unwrap();
    let env_dir = tmp.path().join("from_env");
    let o = Command::new(BIN).current_dir(tmp.path()).args(["profile", "--config"]).arg(&cfg).env("SKYRME_LAB_OUT", &env_dir).output().unwrap();
    assert!(o.status.success());
    assert!(env_dir.join("profile.csv").exists());
    let flag_dir = tmp.path().join("from_flag");
    let o = Command::new(BIN)
        .current_dir(tmp.path())
        .args(["profile", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&flag_dir)
        .env("SKYRME_LAB_OUT", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag_dir.join("profile.csv").exists());
    let o = Command::new(BIN).current_dir(tmp.path()).args(["profile", "--config"]).arg(&cfg).env_remove("SKYRME_LAB_OUT").output().unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("from_config").join("profile.csv").exists());
}

#[test]
fn run_record_manifest_matches_files() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run(tmp.path(), &["verify-coeffs", "--out", out.to_str().unwrap()], "[coeffs]\nsamples = 64\n");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let record = json(&out.join("run_record.json"));
    assert_eq!(record["command"], "verify-coeffs");
    assert!(record["wall_time_s"].as_f64().is_some());
    assert_eq!(record["config"]["coeffs"]["samples"], 64);
    for entry in record["outputs"].as_array().unwrap() {
        let bytes = fs::read(out.join(entry["path"].as_str().unwrap())).unwrap();
        assert_eq!(entry["sha256"].as_str().unwrap(), skyrme_lab::output::sha256_hex(&bytes));
    }
    let report = json(&out.join("verify_coeffs.json"));
    assert!(report["pass"].as_bool().unwrap());
    assert!(report["max_rel_err"].as_f64().unwrap() <= 1e-6);
    assert_eq!(report["n_samples"], 64);
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            files.extend(tree(&p).into_iter().map(|(n, b)| (format!("{}/{n}", p.file_name().unwrap().to_string_lossy()), b)));
        } else {
            files.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
        }
    }
    files.sort();
    files
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = "[similarity]\nn = 48\ntau_end = 2.0\n[similarity.perturbation]\nkind = \"random\"\nseed = 7\namplitude = 1e-3\n";
    for cmd in ["evolve-sim", "check-residual", "verify-rhs"] {
        let dirs: Vec<_> = ["a", "b"].iter().map(|d| tmp.path().join(format!("{cmd}_{d}"))).collect();
        for (d, workers) in dirs.iter().zip(["1", "2"]) {
            let o = run(tmp.path(), &[cmd, "--out", d.to_str().unwrap(), "--deterministic", "--workers", workers], cfg);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        assert_eq!(tree(&dirs[0]), tree(&dirs[1]), "{cmd}");
        assert!(json(&dirs[0].join("run_record.json")).get("wall_time_s").is_none());
    }
}

#[test]
fn seeds_select_the_perturbation() {
    let tmp = TempDir::new().unwrap();
    let mut finals = Vec::new();
    for seed in [1, 1, 2] {
        let out = tmp.path().join(format!("seed_{seed}_{}", finals.len()));
        let cfg = format!("[similarity]\nn = 32\ntau_end = 0.5\n[similarity.perturbation]\nkind = \"random\"\nseed = {seed}\namplitude = 1e-3\n");
        let o = run(tmp.path(), &["evolve-sim", "--out", out.to_str().unwrap()], &cfg);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        finals.push(json(&out.join("evolve_sim.json"))["perturbation"].clone());
    }
    assert_eq!(finals[0], finals[1]);
    assert_ne!(finals[0], finals[2]);
    assert_eq!(finals[0]["kind"], "gaussian");
}

const SWEEP: &str = "[similarity]\nn = 50\n[shoot]\ntol = 1e-8\n[evolve]\nn = 512\n[sweep]\nlambdas = [0.08, 0.02, 0.04]\nworkers = 3\n";

#[test]
fn three_point_sweep_records_every_cell() {
    let tmp = TempDir::new().unwrap();
    let runs: Vec<_> = ["a", "b"].iter().map(|d| tmp.path().join(d)).collect();
    for dir in &runs {
        let o = run(tmp.path(), &["sweep", "--out", dir.to_str().unwrap(), "--deterministic"], SWEEP);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let out = &runs[0];
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().find(|l| !l.starts_with('#')).unwrap(), "lambda,T_star,omega_fit,exponent_fit");
    let rows: Vec<Vec<f64>> = data_rows(&summary).iter().map(|r| r.iter().map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![0.02, 0.04, 0.08]);
    for w in rows.windows(2) {
        assert!(w[1][1] < w[0][1], "T_star should move away from 1 as lambda grows: {rows:?}");
    }
    for r in &rows {
        assert!(r[1] < 1.0 && r[1] > 0.999);
        assert!(r[2] > 0.0);
        assert!((r[3] + 1.0).abs() < 0.05);
    }
    let cells = json(&out.join("sweep.json"));
    assert_eq!(cells.as_array().unwrap().len(), 3);
    for c in cells.as_array().unwrap() {
        assert!(c["error"].is_null());
        let record = json(&out.join(c["dir"].as_str().unwrap()).join("run_record.json"));
        assert_eq!(record["config"]["model"]["lambda"], c["lambda"]);
    }
    assert_eq!(tree(&runs[0]), tree(&runs[1]));
}

#[test]
fn sweep_records_failed_cells_and_continues() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = "[similarity]\nn = 32\n[shoot]\ntol = 1e-4\nbracket = [0.9, 0.95]\n[sweep]\nlambdas = [0.02, 0.04]\nblowup_exponent = false\n";
    let o = run(tmp.path(), &["sweep", "--out", out.to_str().unwrap()], cfg);
    assert_eq!(o.status.code(), Some(2));
    let cells = json(&out.join("sweep.json"));
    assert_eq!(cells.as_array().unwrap().len(), 2);
    for c in cells.as_array().unwrap() {
        assert!(c["error"].as_str().unwrap().contains("bracket"));
        assert!(out.join(c["dir"].as_str().unwrap()).join("run_record.json").exists());
    }
    assert_eq!(data_rows(&fs::read_to_string(out.join("summary.csv")).unwrap()).len(), 2);
}
