//! CLI-level acceptance: exit codes for validation failures, and bit-exact
//! reproduction of every output file when a manifest is re-run, including
//! under a different `--threads` value.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logeuler"))
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().into_string().unwrap();
        out.insert(name, std::fs::read(entry.path()).unwrap());
    }
    out
}

fn assert_identical_trees(a: &Path, b: &Path) {
    let ca = dir_contents(a);
    let cb = dir_contents(b);
    let names_a: Vec<_> = ca.keys().collect();
    let names_b: Vec<_> = cb.keys().collect();
    assert_eq!(names_a, names_b, "file sets differ");
    for (name, bytes) in &ca {
        assert_eq!(bytes, &cb[name], "file {name} differs between runs");
    }
}

/// Run a subcommand, then re-run its manifest with a different thread count
/// and demand byte-identical outputs.
fn roundtrip(label: &str, args: &[&str]) {
    let root = tempfile::tempdir().unwrap();
    let first = root.path().join("first");
    let second = root.path().join("second");
    let status = binary()
        .args(args)
        .arg("--out")
        .arg(&first)
        .arg("--threads")
        .arg("1")
        .status()
        .unwrap();
    assert!(status.success(), "{label}: first run failed");
    let status = binary()
        .arg("rerun")
        .arg(first.join("manifest.json"))
        .arg("--out")
        .arg(&second)
        .arg("--threads")
        .arg("2")
        .status()
        .unwrap();
    assert!(status.success(), "{label}: rerun failed");
    assert_identical_trees(&first, &second);
    println!("ACCEPTANCE 11 [{label}]: bit-exact rerun under --threads 1 vs 2");
}

#[test]
fn acceptance_11_manifest_reruns_are_bit_exact() {
    roundtrip(
        "inviscid-limit",
        &[
            "inviscid-limit",
            "--alpha",
            "1",
            "--nu-list",
            "1e-2,1e-3,1e-4",
            "-N",
            "64",
            "--T",
            "0.1",
            "--snapshots",
            "4",
            "--seed",
            "7",
            "--init",
            "threemode",
        ],
    );
    roundtrip(
        "flow-convergence",
        &[
            "flow-convergence",
            "--nu-list",
            "1e-2,1e-3,1e-4",
            "-N",
            "32",
            "--T",
            "0.25",
            "--M",
            "60",
            "--sde-dt",
            "2.5e-3",
            "--start-grid",
            "4",
            "--snapshots",
            "10",
            "--seed",
            "3",
            "--init",
            "shear",
        ],
    );
    roundtrip(
        "feynman-kac",
        &[
            "feynman-kac",
            "--nu",
            "1e-2",
            "--t",
            "0.1",
            "-N",
            "16",
            "--M",
            "50",
            "--sde-dt",
            "0.01",
            "--snapshots",
            "10",
            "--seed",
            "5",
            "--init",
            "shear",
        ],
    );
    roundtrip(
        "seminorm",
        &[
            "seminorm",
            "--kind",
            "wlog",
            "--theta",
            "0.5",
            "-N",
            "64",
            "--seed",
            "9",
            "--init",
            "random:alpha=1,margin=0.1",
        ],
    );
    roundtrip(
        "simulate",
        &[
            "simulate",
            "--nu",
            "1e-3",
            "--T",
            "0.1",
            "-N",
            "64",
            "--snapshots",
            "2",
            "--init",
            "threemode",
        ],
    );
    println!("ACCEPTANCE 11 determinism: PASS (5 subcommands bit-exact across thread counts)");
}

#[test]
fn validation_failures_exit_2_with_named_precondition() {
    let out = tempfile::tempdir().unwrap();
    // theta outside (0,1)
    let result = binary()
        .args([
            "seminorm", "--kind", "wlog", "--theta", "1.5", "--init", "shear", "-N", "64",
        ])
        .arg("--out")
        .arg(out.path().join("a"))
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.contains("theta must lie in (0,1)"),
        "stderr was: {stderr}"
    );

    // unreadable snapshot file
    let result = binary()
        .args(["simulate", "--init", "file:missing.fld", "--T", "0.1", "-N", "64"])
        .arg("--out")
        .arg(out.path().join("b"))
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("unreadable snapshot file"));

    // unknown flag (clap handles this one)
    let result = binary().args(["simulate", "--frobnicate"]).output().unwrap();
    assert_eq!(result.status.code(), Some(2));

    // missing required parameter
    let result = binary()
        .args(["inviscid-limit", "--nu-list", "1e-2,1e-3", "--init", "shear"])
        .arg("--out")
        .arg(out.path().join("c"))
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("--alpha"));

    println!("ACCEPTANCE 11 validation exits: PASS (exit 2 with named preconditions)");
}

#[test]
fn happy_path_writes_the_report_bundle() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().join("run");
    let status = binary()
        .args([
            "inviscid-limit",
            "--alpha",
            "1",
            "--nu-list",
            "1e-2,1e-3,1e-4",
            "-N",
            "64",
            "--T",
            "0.1",
            "--snapshots",
            "4",
            "--seed",
            "7",
            "--init",
            "threemode",
        ])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    for file in ["manifest.json", "sweep.csv", "summary.json"] {
        assert!(dir.join(file).is_file(), "missing {file}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert!(summary["c_hat"].as_f64().unwrap().is_finite());
    assert_eq!(summary["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn config_file_fills_defaults_and_flags_win() {
    let out = tempfile::tempdir().unwrap();
    let cfg_path = out.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        "kind = \"hlog-fourier\"\nalpha = 1.0\ninit = \"shear\"\nn = 64\n",
    )
    .unwrap();
    // config alone supplies everything
    let dir_a = out.path().join("a");
    let status = binary()
        .args(["seminorm"])
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&dir_a)
        .status()
        .unwrap();
    assert!(status.success());
    // a flag overrides the config value
    let dir_b = out.path().join("b");
    let status = binary()
        .args(["seminorm", "--alpha", "2.0"])
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&dir_b)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest_a: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir_a.join("manifest.json")).unwrap())
            .unwrap();
    let manifest_b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir_b.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest_a["alpha"].as_f64(), Some(1.0));
    assert_eq!(manifest_b["alpha"].as_f64(), Some(2.0));
}

#[test]
fn snapshot_files_round_trip_through_the_cli() {
    let out = tempfile::tempdir().unwrap();
    let first = out.path().join("first");
    let status = binary()
        .args([
            "simulate", "--nu", "0", "--T", "0.1", "-N", "32", "--snapshots", "2", "--init",
            "threemode",
        ])
        .arg("--out")
        .arg(&first)
        .status()
        .unwrap();
    assert!(status.success());
    let final_snap = first.join("snapshot_002.fld");
    assert!(final_snap.is_file());
    // feed the terminal state back in as an initial datum
    let second = out.path().join("second");
    let status = binary()
        .args(["simulate", "--nu", "0", "--T", "0.1", "-N", "32", "--snapshots", "2"])
        .arg("--init")
        .arg(format!("file:{}", final_snap.display()))
        .arg("--out")
        .arg(&second)
        .status()
        .unwrap();
    assert!(status.success(), "restart from snapshot failed");
    assert!(second.join("diagnostics.csv").is_file());
}
