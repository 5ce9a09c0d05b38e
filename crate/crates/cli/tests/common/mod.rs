#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const SYSTEMS: [(&str, f64); 4] = [("lcnn", 0.27), ("ddws", 0.28), ("bc_resmax", 0.18), ("ofd", 0.27)];

pub fn antispoof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_antispoof"))
        .args(args)
        .output()
        .expect("spawn antispoof")
}

/// Runs a command that must succeed and returns its stdout.
pub fn ok(args: &[&str]) -> String {
    let out = antispoof(args);
    assert!(
        out.status.success(),
        "antispoof {args:?} exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn code(args: &[&str]) -> i32 {
    antispoof(args).status.code().expect("exit code")
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Sorted `(file name, bytes)` pairs under `dir`, recursively.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Writes the 20-clip corpus, four model specs with seeded weights, and a
/// pipeline config writing into `output`. Returns the config path.
pub fn pipeline_fixture(dir: &Path, output: &str) -> PathBuf {
    let corpus = dir.join("corpus");
    ok(&["gen-corpus", "--out", s(&corpus)]);
    let mut systems = Vec::new();
    for (i, (name, weight)) in SYSTEMS.iter().enumerate() {
        let spec = dir.join(format!("{name}.json"));
        let weights = dir.join(format!("{name}.nnw"));
        ok(&["model-spec", "--preset", name, "--out", s(&spec)]);
        let seed = (i + 1).to_string();
        ok(&["init-weights", "--model", s(&spec), "--seed", &seed, "--out", s(&weights)]);
        systems.push(serde_json::json!({
            "name": name,
            "model": format!("{name}.json"),
            "weights": format!("{name}.nnw"),
            "fusion_weight": weight,
        }));
    }
    let config = serde_json::json!({
        "schema_version": 1,
        "feature": {"kind": "cqt"},
        "augment": {"ffm": {"p_low": 0.3, "p_high": 0.3, "p_rand": 0.3}, "mixup_alpha": 0.5},
        "seed": 11,
        "systems": systems,
        "io": {"input": "corpus", "labels": "corpus/labels.tsv", "output": output},
    });
    let path = dir.join("pipeline.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}
