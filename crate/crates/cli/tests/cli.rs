use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mb-lab")).current_dir(dir).env_remove("MB_LAB_OUT").args(args).output().unwrap()
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn digests_match(dir: &Path) {
    let m = manifest(dir);
    let files = m["files"].as_array().unwrap();
    assert!(!files.is_empty());
    let mut listed: Vec<String> = vec!["manifest.json".into()];
    for f in files {
        let name = f["name"].as_str().unwrap();
        let data = fs::read(dir.join(name)).unwrap();
        let hex: String = Sha256::digest(&data).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(f["sha256"].as_str().unwrap(), hex, "{name}");
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, data.len());
        listed.push(name.into());
    }
    for e in fs::read_dir(dir).unwrap() {
        let n = e.unwrap().file_name().into_string().unwrap();
        assert!(listed.contains(&n), "{n} not in manifest");
    }
}

#[test]
fn lemmas_are_byte_identical_across_runs() {
    let t = TempDir::new().unwrap();
    let c = config(t.path(), "l.cfg", "lemmas = tau-pair,quad-rough\nsamples = 20\n");
    for out in ["a", "b"] {
        let o = run(t.path(), &["lemmas", "--config", &c, "--seed", "42", "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["lemmas.csv", "lemmas_summary.csv", "lemmas.json"] {
        assert_eq!(fs::read(t.path().join("a").join(f)).unwrap(), fs::read(t.path().join("b").join(f)).unwrap(), "{f}");
    }
    digests_match(&t.path().join("a"));
    let m = manifest(&t.path().join("a"));
    assert_eq!(m["registry_version"], mb_lab::constants::REGISTRY_VERSION);
    assert_eq!(m["config"]["parameters"]["seed"], "42");
}

#[test]
fn growth_threshold_case_passes() {
    let t = TempDir::new().unwrap();
    let c = config(t.path(), "g.cfg", "construction = beta-positive\ns = 0.5\nladder = 8..16\n");
    let o = run(t.path(), &["growth", "--config", &c, "--out", "g"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = t.path().join("g");
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.join("growth.json")).unwrap()).unwrap();
    let fit = &v["fits"][0];
    assert_eq!(fit["pass"], true);
    assert!(fit["slope"].as_f64().unwrap().abs() < 0.1);
    let csv = fs::read_to_string(dir.join("growth.csv")).unwrap();
    assert!(csv.starts_with("s,n,norm,max_node_spacing\n"));
    assert_eq!(csv.lines().count(), 10);
    assert!(fs::read_to_string(dir.join("growth.svg")).unwrap().starts_with("<svg"));
    digests_match(&dir);
}

#[test]
fn report_reproduces_thresholds() {
    let t = TempDir::new().unwrap();
    let c = config(t.path(), "g.cfg", "ladder = 8..13\n");
    for (dir, kind, s) in [("runs/p0", "beta-positive", "0"), ("runs/p1", "beta-positive", "0.25"), ("runs/z", "beta-zero", "0,0.75")] {
        let o = run(t.path(), &["growth", "--config", &c, "--out", dir, "--set", &format!("construction={kind}"), "--set", &format!("s={s}")]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let e = config(t.path(), "r.cfg", "runs = runs\n");
    let o = run(t.path(), &["report", "--config", &e, "--out", "rep"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(t.path().join("rep/report.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let (star, want): (f64, f64) = (r[4].parse().unwrap(), r[5].parse().unwrap());
        assert!((star - want).abs() <= 0.05, "{r:?}");
    }
}

#[test]
fn unknown_key_is_a_usage_error() {
    let t = TempDir::new().unwrap();
    let c = config(t.path(), "s.cfg", "m = 128\nwidth_of_things = 3\n");
    let o = run(t.path(), &["solve", "--config", &c, "--out", "s"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("width_of_things"));
    assert!(!t.path().join("s/manifest.json").exists());
    let o = run(t.path(), &["solve", "--config", &c, "--set", "width_of_things=1", "--set", "m=abc"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(t.path(), &["solve", "--config", "missing.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(t.path(), &["nonsense", "--config", &c]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_criterion_exits_one_and_names_it() {
    let t = TempDir::new().unwrap();
    // Large data on a coarse step: drift criteria fail, the run completes.
    let c = config(t.path(), "s.cfg", "dt = 0.02\nu_amp = 20\nv_amp = 20\n");
    let o = run(t.path(), &["solve", "--config", &c, "--out", "s"]);
    assert_eq!(o.status.code(), Some(1));
    let m = manifest(&t.path().join("s"));
    assert_eq!(m["status"], 1);
    let fails: Vec<&str> = m["failures"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(fails.contains(&"energy-drift"), "{fails:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("energy-drift"));
    digests_match(&t.path().join("s"));
}

#[test]
fn solve_and_crosscheck_pass_with_defaults() {
    let t = TempDir::new().unwrap();
    let c = config(t.path(), "e.cfg", "# defaults\n");
    let o = run(t.path(), &["solve", "--config", &c, "--out", "s"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let d = fs::read_to_string(t.path().join("s/diagnostics.csv")).unwrap();
    assert!(d.starts_with("time,mass_u,mass_v,l2_energy,hamiltonian\n"));
    assert_eq!(d.lines().count(), 12);
    let o = run(t.path(), &["crosscheck", "--config", &c, "--out", "c"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(t.path(), &["crosscheck", "--config", &c, "--out", "c0", "--set", "u_amp=0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    digests_match(&t.path().join("c"));
}

#[test]
fn resonance_trichotomy_defaults() {
    let t = TempDir::new().unwrap();
    let c = config(t.path(), "r.cfg", "n = 4096\n");
    for beta in ["-3", "3"] {
        let o = run(t.path(), &["resonance", "--config", &c, "--set", &format!("beta={beta}"), "--out", &format!("r{beta}")]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(t.path(), &["resonance", "--config", &c, "--set", "beta=0", "--set", "eta2_band=-0.1,0.1", "--set", "samples=256,2001", "--out", "r0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn output_root_from_environment() {
    let t = TempDir::new().unwrap();
    let c = config(t.path(), "r.cfg", "samples = 64,64\n");
    let o = Command::new(env!("CARGO_BIN_EXE_mb-lab"))
        .current_dir(t.path())
        .env("MB_LAB_OUT", t.path().join("root"))
        .args(["resonance", "--config", &c])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(t.path().join("root/resonance/manifest.json").exists());
}
