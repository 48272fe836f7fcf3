use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn qlink(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qlink"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.in.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

const SMALL_MC: &str = "[monte_carlo]\nsamples = 200\n\n[sensitivity]\nrel_j = [0.01, 0.3]\nrel_kappa = [0.01, 0.3]\n";

#[test]
fn same_seed_gives_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_MC);
    for sub in ["gamma-f", "monte-carlo", "sensitivity"] {
        let (a, b, c) = (
            tmp.path().join(format!("{sub}-a")),
            tmp.path().join(format!("{sub}-b")),
            tmp.path().join(format!("{sub}-c")),
        );
        assert!(qlink(&[sub, "--seed", "11"], Some(&cfg), &a).status.success());
        assert!(qlink(&[sub, "--seed", "11", "--threads", "2"], Some(&cfg), &b)
            .status
            .success());
        assert_eq!(dir_contents(&a), dir_contents(&b), "{sub}");
        if sub == "monte-carlo" {
            assert!(qlink(&[sub, "--seed", "12"], Some(&cfg), &c).status.success());
            assert_ne!(
                std::fs::read(a.join("samples.csv")).unwrap(),
                std::fs::read(c.join("samples.csv")).unwrap()
            );
        }
    }
}

#[test]
fn manifest_hashes_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_MC);
    let out = tmp.path().join("mc");
    assert!(qlink(&["monte-carlo", "--seed", "3"], Some(&cfg), &out)
        .status
        .success());
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["seed"], 3);
    assert_eq!(m["subcommand"], "monte-carlo");
    let listed: Vec<&Value> = m["files"].as_array().unwrap().iter().collect();
    let on_disk: Vec<String> = dir_contents(&out)
        .into_iter()
        .map(|f| f.0)
        .filter(|n| n != "manifest.json")
        .collect();
    assert_eq!(listed.len(), on_disk.len());
    for f in listed {
        let bytes = std::fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    assert_eq!(
        m["config_sha256"].as_str().unwrap(),
        hex::encode(Sha256::digest(std::fs::read(out.join("config.toml")).unwrap()))
    );
}

#[test]
fn uncoupled_filter_gives_zero_rate_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[sweep]\nj_mhz = 0.0\n");
    let out = tmp.path().join("g");
    assert!(qlink(&["gamma-f"], Some(&cfg), &out).status.success());
    let csv = std::fs::read_to_string(out.join("gamma_f.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("freq_ghz,gamma_f_mhz"));
    let rows: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(rows.len(), 801);
    assert!(rows.iter().all(|r| *r == 0.0));
}

#[test]
fn default_transfer_lands_in_reference_band() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let o = qlink(&["transfer"], None, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("result.json"));
    let f = r["process_fidelity"].as_f64().unwrap();
    assert!((0.74..=0.82).contains(&f), "process fidelity {f}");
    let tomo = r["tomography"]["fidelity"].as_f64().unwrap();
    assert!((tomo - f).abs() < 0.02, "tomography {tomo} vs {f}");
    assert_eq!(r["state_fidelities"].as_array().unwrap().len(), 6);
}

#[test]
fn schema_violations_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    for text in ["[channel]\nlos = 0.2\n", "[channel]\nloss = 1.5\n", "[design]\nkappa_mhz = { start = 40.0, stop = 200.0, step = 7.0 }\nphoton_mhz = { start = 9000.0, stop = 9900.0, step = 3.0 }\n"] {
        let cfg = write_config(tmp.path(), text);
        let sub = if text.contains("design") { "design-sweep" } else { "transfer" };
        let o = qlink(&[sub], Some(&cfg), &tmp.path().join("x"));
        assert_eq!(o.status.code(), Some(2), "{text}");
        let err: Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(err["error"], "schema");
        assert_eq!(err["exit_code"], 2);
    }
}

#[test]
fn numerical_failures_exit_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[waveform]\nkappa_ph_mhz = 100.0\n");
    let o = qlink(&["emit"], Some(&cfg), &tmp.path().join("x"));
    assert_eq!(o.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "numerical");
    assert!(err["message"].as_str().unwrap().contains("adiabaticity"));
}

#[test]
fn numbers_carry_twelve_significant_digits() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("g");
    assert!(qlink(&["gamma-f"], None, &out).status.success());
    let csv = std::fs::read_to_string(out.join("gamma_f.csv")).unwrap();
    let cell = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = cell.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 12, "{cell}");
}
