//! Driver-level acceptance: artifact determinism across thread counts and
//! the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::Command;

fn criterion(name: &str, pass: bool) {
    println!("ACCEPTANCE {name}: {}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion failed: {name}");
}

fn berk() -> Command {
    Command::new(env!("CARGO_BIN_EXE_berk"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

const GROUP_CONFIG: &str = r#"{
  "p": 3,
  "comb": {"letters": 4, "depth": 3},
  "group": {"preset": "symmetric-rank2", "length": 7, "depth": "2"}
}"#;

#[test]
fn determinism_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), GROUP_CONFIG);
    let mut artifacts = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("out_{threads}"));
        for sub in [
            ["group", "orbit"],
            ["group", "delta"],
            ["group", "ps-measure"],
            ["group", "kms"],
        ] {
            let status = berk()
                .args([
                    "--config",
                    config.to_str().unwrap(),
                    "--out",
                    out.to_str().unwrap(),
                    "--threads",
                    threads,
                ])
                .args(sub)
                .status()
                .unwrap();
            assert!(status.success(), "{sub:?} failed");
        }
        let mut bundle = Vec::new();
        for name in ["orbit.csv", "delta_report.json", "ps_measure.csv", "kms_report.json"] {
            bundle.push(fs::read(out.join(name)).unwrap());
        }
        artifacts.push(bundle);
    }
    let pass = artifacts[0] == artifacts[1];
    criterion("byte-identical artifacts at --threads 1 and --threads 8", pass);
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), GROUP_CONFIG);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run_{run}"));
        let status = berk()
            .args([
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .args(["group", "quasiconformal"])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(out.join("quasiconformal_report.json")).unwrap());
    }
    criterion("repeated runs byte-identical", outputs[0] == outputs[1]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // exit 2: malformed rational in the config
    let bad = write_config(
        dir.path(),
        r#"{"p": 3, "disks": [{"center": "x/y", "radius_exp": "1"}]}"#,
    );
    let out = dir.path().join("out");
    let status = berk()
        .args(["--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .args(["tree", "build"])
        .status()
        .unwrap();
    let code2 = status.code();

    let unparsable = dir.path().join("broken.json");
    fs::write(&unparsable, "{not json").unwrap();
    let status = berk()
        .args([
            "--config",
            unparsable.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .args(["tree", "build"])
        .status()
        .unwrap();
    let pass_parse = status.code() == Some(2);

    // exit 3: disk outside the unit disk is a computation error
    let outside = write_config(
        dir.path(),
        r#"{"p": 3, "disks": [{"center": "1/3", "radius_exp": "1"}]}"#,
    );
    let status = berk()
        .args([
            "--config",
            outside.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .args(["tree", "build"])
        .status()
        .unwrap();
    let pass_compute = status.code() == Some(3);

    criterion(
        "exit-code contract (2 parse, 3 computation)",
        pass_parse && pass_compute && code2 == Some(2),
    );
}

#[test]
fn spectrum_artifact_matches_block_form() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"p": 3, "disks": [{"center": "0", "radius_exp": "1"}]}"#,
    );
    let out = dir.path().join("out");
    let status = berk()
        .args([
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .args(["tree", "spectrum"])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    let pass = lines.len() == 3
        && lines[1].starts_with("-1,")
        && lines[1].ends_with(",2")
        && lines[2].starts_with("1,")
        && lines[2].ends_with(",2");
    criterion("single-segment spectrum CSV is (±1, multiplicity 2)", pass);
}
