use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nematic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nematic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = "\
[ladder]
eps = [0.4, 0.2]

[grid]
n_cells = 24
ball_radius = 1.0

[analysis]
sphere_radii = [0.5]
blowup_radii = [1.0, 2.0]
decay_radii = [0.3]

[output]
snapshots = true
";

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn small_run(dir: &Path, extra: &[&str]) -> PathBuf {
    let cfg = write(dir, "small.toml", SMALL);
    let out = dir.join("out");
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = nematic(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn empty_ladder_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[ladder]\neps = []\n");
    let o = nematic(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ladder.eps is empty"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[ladder]\neps = [0.1]\n[grid]\ncells = 3\n");
    assert_eq!(nematic(&["run", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn dry_run_prints_the_plan_without_computing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let o = nematic(&["--dry-run", "run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("s+ = 1.5"));
    assert!(text.contains("stage 1: eps = 0.2"));
    assert!(!out.exists());
}

#[test]
fn run_writes_the_bundle_and_verify_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_run(dir.path(), &[]);
    for f in [
        "report.json",
        "annulus_sup.csv",
        "ball_ratio_eps0.4.csv",
        "decay_eps0.2.csv",
        "profile_eps0.2.csv",
        "field_eps0.2.csv",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let report = out.join("report.json");
    let o = nematic(&["verify", report.to_str().unwrap()]);
    let text = stdout(&o);
    assert!(matches!(o.status.code(), Some(0 | 1)));
    for id in 4..=10 {
        assert!(text.contains(&format!("criterion {id:>2}")), "{text}");
    }
    assert!(text.contains("criteria pass"));
    let again = nematic(&["verify", report.to_str().unwrap()]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn runs_are_bit_reproducible_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = std::fs::read(small_run(a.path(), &[]).join("report.json")).unwrap();
    let rb = std::fs::read(small_run(b.path(), &["--threads", "1"]).join("report.json")).unwrap();
    assert!(ra == rb);
}

#[test]
fn ascending_annulus_column_fails_uniform_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let report = small_run(dir.path(), &[]).join("report.json");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    for (k, stage) in v["stages"].as_array_mut().unwrap().iter_mut().enumerate() {
        stage["defect"]["annulus_sup"][0]["sup_deviation"] = serde_json::json!(0.1 * (k + 1) as f64);
    }
    let tampered = write(dir.path(), "tampered.json", &v.to_string());
    let o = nematic(&["verify", tampered.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let line = stdout(&o).lines().find(|l| l.contains("criterion  8")).unwrap().to_string();
    assert!(line.contains("FAIL"), "{line}");
}

#[test]
fn empty_or_foreign_report_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [("empty.json", ""), ("obj.json", "{}")] {
        let p = write(dir.path(), name, text);
        assert_eq!(nematic(&["verify", p.to_str().unwrap()]).status.code(), Some(2));
    }
    let report = small_run(dir.path(), &[]).join("report.json");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    v["stages"] = serde_json::json!([]);
    let p = write(dir.path(), "nostages.json", &v.to_string());
    assert_eq!(nematic(&["verify", p.to_str().unwrap()]).status.code(), Some(2));
    v["schema"] = serde_json::json!("other/9");
    let p = write(dir.path(), "schema.json", &v.to_string());
    assert_eq!(nematic(&["verify", p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn analyze_measures_a_saved_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_run(dir.path(), &[]);
    let cfg = dir.path().join("small.toml");
    let snap = out.join("field_eps0.2.csv");
    let o = nematic(&["analyze", snap.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stage: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(stage["eps"], serde_json::json!(0.2));
    assert_eq!(stage["defect"]["degrees"][0]["degree"]["degree"], serde_json::json!(1));
    assert_eq!(stage["solve"]["converged"], serde_json::json!(true));
}

#[test]
fn checkpoints_are_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("[analysis]", "[solver]\ncheckpoint_every = 20\n\n[analysis]");
    let cfg = write(dir.path(), "ck.toml", &text);
    let out = dir.path().join("out");
    assert!(nematic(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    assert!(out.join("checkpoints/eps0.4_iter40.csv").exists());
    assert!(out.join("checkpoints/eps0.2_iter20.csv").exists());
}

#[test]
fn radial_emits_a_profile_csv() {
    let o = nematic(&["radial", "--eps", "0.1", "--rmax", "2", "--nodes", "400"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,h"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (r, h) = l.split_once(',').unwrap();
            (r.parse().unwrap(), h.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 400);
    assert_eq!(rows[0], (0.0, 0.0));
    assert!((rows[399].1 - 1.5).abs() < 1e-12);
}

#[test]
fn radial_rejects_bad_parameters() {
    let o = nematic(&["radial", "--eps", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}
