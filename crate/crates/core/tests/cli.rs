use std::path::Path;
use std::process::Command;

fn hypexp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hypexp")).args(args).env("HYPEXP_THREADS", "2").output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn spectrum_writes_outputs_and_exits_zero() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let o = hypexp(&["spectrum", "--system", "geodesic", "--map", "f", "--steps", "20000", "--orbits", "2", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(d.path(), "spectrum.csv");
    assert!(csv.starts_with("orbit_id,q0_coords,lambda_1"));
    assert_eq!(csv.lines().count(), 3);
    let manifest: serde_json::Value = serde_json::from_str(&read(d.path(), "spectrum.manifest.json")).unwrap();
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["threads"], 2);
}

#[test]
fn csv_out_path_names_the_main_table() {
    let d = tempfile::tempdir().unwrap();
    let target = d.path().join("runs").join("pert.csv");
    let o = hypexp(&["perturb-audit", "--grid", "9", "--out", target.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(target.exists());
    assert!(d.path().join("runs").join("c2_vs_eps.dat").exists());
}

#[test]
fn usage_and_parameter_errors_exit_two() {
    assert_eq!(hypexp(&["central", "--no-such-flag", "1"]).status.code(), Some(2));
    assert_eq!(hypexp(&["nonsense"]).status.code(), Some(2));
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let o = hypexp(&["central", "--eps", "0.3", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0.3"));
    let o = hypexp(&["visits", "--steps", "many", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--steps"));
}

#[test]
fn config_file_then_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    std::fs::write(&cfg, "# short run\nsystem = cat\nsteps = 5000\norbits = 3\nseed = 9\n").unwrap();
    let out = d.path().join("o");
    let o = hypexp(&["visits", "--config", cfg.to_str().unwrap(), "--orbits", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out, "visits.csv");
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().contains(",5000,"));
}

#[test]
fn manifest_replays_identically() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    let o = hypexp(&["central", "--steps", "20000", "--orbits", "2", "--seed", "5", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = hypexp(&["central", "--from-manifest", a.join("central.manifest.json").to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["central.csv", "central.summary.json", "xi_hist.dat"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
}

#[test]
fn verify_passes_on_defaults() {
    let d = tempfile::tempdir().unwrap();
    let o = hypexp(&["verify", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = read(d.path(), "verify.csv");
    assert!(csv.lines().skip(1).all(|l| l.contains(",true,")), "{csv}");
}
