use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trislip"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("trislip-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SCALING: &str = r#"{
  "domain": {"type": "square", "half_width": 1.0},
  "epsilons": [0.125, 0.0625],
  "dislocations": [{"b": [1, 0], "x": [0.0, 0.0]}]
}"#;

fn numeric_columns(csv: &str, skip: &[&str]) -> Vec<Vec<String>> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| {
            l.split(',')
                .zip(&header)
                .filter(|(_, h)| !skip.contains(h))
                .map(|(v, _)| v.to_string())
                .collect()
        })
        .collect()
}

#[test]
fn scaling_writes_csv_and_sidecar_and_reruns_identically() {
    let dir = scratch("scaling");
    let cfg = write(&dir, "cfg.json", SCALING);
    let out = dir.join("rows.csv");
    let status = bin().args(["scaling", "--config"]).arg(&cfg).arg("--out").arg(&out).args(["--threads", "1"]).status().unwrap();
    assert!(status.success());
    let first = fs::read_to_string(&out).unwrap();
    assert!(first.starts_with("epsilon,F,F_normalized,F_recovery,predicted,flat_error"));
    assert_eq!(first.lines().count(), 3);

    // Re-run from the emitted config; only the timing column may differ.
    let sidecar = dir.join("rows.csv.config.json");
    let rerun = dir.join("again.csv");
    let status = bin().args(["scaling", "--config"]).arg(&sidecar).arg("--out").arg(&rerun).status().unwrap();
    assert!(status.success());
    let second = fs::read_to_string(&rerun).unwrap();
    assert_eq!(numeric_columns(&first, &["wall_time"]), numeric_columns(&second, &["wall_time"]));
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = scratch("errors");
    let cases = [
        ("unsorted.json", r#"{"domain":{"type":"square","half_width":1},"epsilons":[0.1,0.2]}"#),
        ("outside.json", r#"{"domain":{"type":"square","half_width":1},"epsilons":[0.1],"dislocations":[{"b":[1,0],"x":[3,0]}]}"#),
        ("mismatch.json", r#"{"domain":{"type":"square","half_width":1},"epsilons":[0.1],"experiment":"flatnorm"}"#),
        ("broken.json", "{"),
    ];
    for (name, text) in cases {
        let cfg = write(&dir, name, text);
        let out = bin().args(["scaling", "--config"]).arg(&cfg).arg("--out").arg(dir.join("x.csv")).output().unwrap();
        assert!(!out.status.success(), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{name}");
    }
    let missing = bin().args(["scaling", "--config"]).arg(dir.join("nope.json")).output().unwrap();
    assert!(!missing.status.success());
}

#[test]
fn other_subcommands_run() {
    let dir = scratch("others");
    let cfg = write(&dir, "cfg.json", SCALING);
    for (cmd, file) in [("flatnorm", "flat.csv"), ("constraint-audit", "audit.csv"), ("counterexamples", "ce.json")] {
        let out = dir.join(file);
        let status = bin().arg(cmd).arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert!(status.success(), "{cmd}");
        assert!(fs::metadata(&out).unwrap().len() > 0);
        assert!(dir.join(format!("{file}.config.json")).exists());
    }
    let audit = fs::read_to_string(dir.join("audit.csv")).unwrap();
    assert!(audit.starts_with("epsilon,dislocation_free,satisfied,fraction"));
    let report: String = fs::read_to_string(dir.join("ce.json")).unwrap();
    assert!(report.contains("\"unseparated\"") && report.contains("\"dilation\""));
}
