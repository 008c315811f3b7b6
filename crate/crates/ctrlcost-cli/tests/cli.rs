use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ctrlcost")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(bin())
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn manifest(out: &Path, command: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(out.join(format!("{command}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn full_observation_cost_is_inverse_root_t() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&configs().join("cost-curve-full-observation.toml"), out.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(out.path().join("cost-curve.csv")).unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[0].parse().unwrap();
        let cost: f64 = rec[1].parse().unwrap();
        assert!((cost * t.sqrt() - 1.0).abs() < 1e-12, "T = {t}: {cost}");
        rows += 1;
    }
    assert_eq!(rows, 2);
    let m = manifest(out.path(), "cost-curve");
    assert_eq!(m["mantissa_bits"], 256);
    assert_eq!(m["config"]["command"], "cost-curve");
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn window_build_reports_a_small_residual() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&configs().join("window-build-squares.toml"), out.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(out.path(), "window-build");
    let r = m["results"]["residual"].as_f64().unwrap();
    assert!(r <= 1e-8, "residual {r}");
    assert_eq!(m["results"]["family"]["window"].as_array().unwrap().len(), 12);
}

#[test]
fn overlapping_omega_is_a_validation_failure() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&configs().join("invalid-overlapping-omega.toml"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("omega"), "{err}");
    assert!(!out.path().join("cost-curve.csv").exists());
}

#[test]
fn missing_and_malformed_fields_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(dir.path(), "m.toml", "command = \"highfreq\"\nt_grid = [0.4]\n[problem]\nlength = 1.0\nmodes = 10\n[observation]\nkind = \"interior\"\nintervals = [[0.5, 1.0]]\n");
    let o = run(&missing, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`d`"));

    let grid = write(dir.path(), "g.toml", "command = \"cost-curve\"\nt_grid = [0.2, 0.4]\n[problem]\nlength = 1.0\nmodes = 10\n[observation]\nkind = \"interior\"\nintervals = [[0.5, 1.0]]\n");
    let o = run(&grid, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t_grid"));

    let unknown = write(dir.path(), "u.toml", "command = \"eigen\"\nspeed = 3\n");
    assert_eq!(run(&unknown, dir.path(), &[]).status.code(), Some(2));

    let bits = run(
        &configs().join("cost-curve-full-observation.toml"),
        dir.path(),
        &["--precision", "8"],
    );
    assert_eq!(bits.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bits.stderr).contains("mantissa_bits"));
}

#[test]
fn numerical_failure_exits_with_one() {
    // λ_min of this Gramian sits far below 64-bit rounding noise
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "n.toml",
        "command = \"cost-curve\"\nmantissa_bits = 64\nt_grid = [0.05]\nc = 1.0\n[problem]\nlength = 3.141592653589793\nmodes = 40\n[observation]\nkind = \"interior\"\nintervals = [[3.0, 3.141592653589793]]\n",
    );
    let o = run(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerical failure"));
}

#[test]
fn identical_configs_give_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.toml",
        "command = \"transmute\"\nhorizon = 0.3\nwave_time = 2.2\nwindow = [1, 3]\nsamples = 7\n[problem]\nlength = 1.0\nmodes = 8\n[observation]\nkind = \"interior\"\nintervals = [[0.4, 1.0]]\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&cfg, out, &["--seed", "7"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |p: &Path| std::fs::read(p.join("transmute-trajectory.csv")).unwrap();
    assert_eq!(read(&a), read(&b));

    // the manifest alone reproduces the run, seeded data included
    let m = manifest(&a, "transmute");
    assert_eq!(m["config"]["u0"].as_array().unwrap().len(), 3);
    let replay: toml::Value = serde_json::from_value(strip_nulls(m["config"].clone())).unwrap();
    let replay_cfg = write(dir.path(), "replay.toml", &toml::to_string(&replay).unwrap());
    let c = dir.path().join("c");
    assert!(run(&replay_cfg, &c, &["--seed", "99"]).status.success());
    assert_eq!(read(&a), read(&c));
    let r = &m["results"];
    assert!(r["steering_residual"].as_f64().unwrap() <= 1e-5);
    assert!(r["control_norm"].as_f64().unwrap() <= r["chain_bound"].as_f64().unwrap());

    let other = dir.path().join("d");
    assert!(run(&cfg, &other, &["--seed", "8"]).status.success());
    assert_ne!(read(&a), read(&other));
}

fn strip_nulls(v: serde_json::Value) -> serde_json::Value {
    match v {
        serde_json::Value::Object(m) => serde_json::Value::Object(
            m.into_iter()
                .filter(|(_, v)| !v.is_null())
                .map(|(k, v)| (k, strip_nulls(v)))
                .collect(),
        ),
        other => other,
    }
}

#[test]
fn every_example_config_runs() {
    for name in [
        "eigen-linear-potential",
        "lower-bound",
        "product-check",
        "cylinder",
        "highfreq",
        "two-stage",
    ] {
        let out = tempfile::tempdir().unwrap();
        let o = run(&configs().join(format!("{name}.toml")), out.path(), &[]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let listed = std::fs::read_dir(out.path()).unwrap().count();
        assert!(listed >= 2, "{name} wrote {listed} files");
    }
}
