//! Run manifests and atomic file output.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::stream;

pub const RESULTS_CSV: &str = "results.csv";
pub const RESULTS_JSON: &str = "results.json";
pub const MANIFEST_JSON: &str = "manifest.json";

pub const SEED_RULE: &str =
    "derive_seed(m, s, i) = mix(mix(m ^ mix(s + 1)) + (i + 1) * 0x9E3779B97F4A7C15), mix = SplitMix64 finalizer";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    /// Absent for the manifest itself.
    pub bytes: Option<u64>,
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub master: u64,
    pub rule: String,
    pub streams: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub kind: String,
    pub config_hash: String,
    pub started: String,
    pub finished: String,
    pub threads: usize,
    pub seeds: SeedInfo,
    pub findings: Vec<String>,
    pub files: Vec<FileEntry>,
}

pub fn seed_info(master: u64) -> SeedInfo {
    let streams = [
        ("observation_points", stream::OBSERVATION_POINTS),
        ("disorder_sites", stream::DISORDER_SITES),
        ("realizations", stream::REALIZATIONS),
        ("potentials", stream::POTENTIALS),
        ("initial_data", stream::INITIAL_DATA),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    SeedInfo {
        master,
        rule: SEED_RULE.to_string(),
        streams,
    }
}

/// SHA-256 of the canonical (key-sorted, compact) JSON form; independent of
/// field order in the source file.
pub fn config_hash(value: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(&sort_keys(value)).expect("JSON values always serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn sort_keys(v: &serde_json::Value) -> serde_json::Value {
    match v {
        serde_json::Value::Object(map) => {
            let sorted: BTreeMap<_, _> = map.iter().map(|(k, v)| (k.clone(), sort_keys(v))).collect();
            serde_json::Value::Object(sorted.into_iter().collect())
        }
        serde_json::Value::Array(items) => serde_json::Value::Array(items.iter().map(sort_keys).collect()),
        other => other.clone(),
    }
}

pub fn file_entry(name: &str, contents: &[u8]) -> FileEntry {
    FileEntry {
        name: name.to_string(),
        bytes: Some(contents.len() as u64),
        sha256: Some(hex::encode(Sha256::digest(contents))),
    }
}

/// Write via a temporary sibling and rename over the target.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, &target)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(target.clone(), e)
    })
}

/// Create the output directory; refuse one holding files this run would not
/// list in its manifest.
pub fn prepare_output_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ours = [RESULTS_CSV, RESULTS_JSON, MANIFEST_JSON];
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if !ours.contains(&name.as_str()) {
            return Err(Error::Config {
                path: "output".into(),
                message: format!("output directory {} contains unrelated entry `{name}`", dir.display()),
            });
        }
    }
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_field_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"a": 1, "b": {"y": 2, "x": [1, 2]}}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"b": {"x": [1, 2], "y": 2}, "a": 1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        let c: serde_json::Value = serde_json::from_str(r#"{"b": {"x": [2, 1], "y": 2}, "a": 1}"#).unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn atomic_write_and_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), RESULTS_CSV, b"x\n1\n").unwrap();
        assert_eq!(fs::read(dir.path().join(RESULTS_CSV)).unwrap(), b"x\n1\n");
        assert!(prepare_output_dir(dir.path()).is_ok());
        fs::write(dir.path().join("stray.txt"), "").unwrap();
        assert!(matches!(prepare_output_dir(dir.path()), Err(Error::Config { .. })));
    }
}
