#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cldforge::fixtures::seed_golden_fixtures;
use cldforge_core::{bundled_goldens, Strategy};
use serde_json::Value;
use tempfile::TempDir;

pub fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"))
}

/// Panics with every violation if `instance` does not match the schema.
pub fn assert_schema(name: &str, instance: &Value) {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(schema_path(name)).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{name} schema violations: {errors:#?}\n{instance:#}");
}

/// Fixtures answering every golden with its ground truth, except `prose`.
pub fn golden_fixtures(prose: &[&str]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    seed_golden_fixtures(dir.path(), &bundled_goldens(), &Strategy::ALL, 3, prose).unwrap();
    dir
}

pub fn cldforge(args: &[&str], stdin: Option<&str>) -> Output {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_cldforge"))
        .args(args)
        .env_remove("CLDFORGE_CONFIG")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

pub fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

/// New-car-inventory truth with "market price -> retail sales" flipped to
/// positive and "retail sales -> inventory" left out.
pub const PERTURBED_CAR_INVENTORY: &str = r#"digraph {
"car production" -> "inventory" [arrowhead = vee]
"inventory" -> "market price" [arrowhead = tee]
"market price" -> "car production" [arrowhead = vee]
"market price" -> "retail sales" [arrowhead = vee]
}"#;
