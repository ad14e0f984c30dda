//! Output files. Every file carries the config hash: JSON objects in a
//! `config_hash` field, NDJSON on every line, CSV in a leading `# config_hash=`
//! comment. `manifest.json` records the canonical config and the SHA-256 of
//! every file so that edits are detectable.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::Experiment;
use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";
const CSV_TAG: &str = "# config_hash=";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config_hash: String,
    pub command: String,
    pub config: Experiment,
    pub files: Vec<ManifestEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files into one output directory and tracks them for the manifest.
pub struct ArtifactWriter {
    dir: PathBuf,
    hash: String,
    files: Vec<ManifestEntry>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, experiment: &Experiment) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: experiment.hash(),
            files: Vec::new(),
        })
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        if name == MANIFEST || name.contains(['/', '\\']) {
            return Err(Error::InvalidInput(format!("bad artifact name `{name}`")));
        }
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.files.retain(|f| f.file != name);
        self.files.push(ManifestEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// Serializes `value` as a JSON object with `config_hash` inserted first.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let body = match serde_json::to_value(value)? {
            Value::Object(map) => map,
            _ => return Err(Error::InvalidInput("JSON artifacts must be objects".into())),
        };
        let mut out = serde_json::Map::new();
        out.insert("config_hash".into(), Value::String(self.hash.clone()));
        out.extend(body.into_iter().filter(|(k, _)| k != "config_hash"));
        let mut text = serde_json::to_string_pretty(&Value::Object(out))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    pub fn ndjson<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf> {
        let mut text = String::new();
        for row in rows {
            let mut map = serde_json::Map::new();
            map.insert("config_hash".into(), Value::String(self.hash.clone()));
            match serde_json::to_value(row)? {
                Value::Object(body) => map.extend(body),
                other => {
                    map.insert("value".into(), other);
                }
            }
            text.push_str(&serde_json::to_string(&Value::Object(map))?);
            text.push('\n');
        }
        self.put(name, text.as_bytes())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf> {
        let mut text = format!("{CSV_TAG}{}\n{}\n", self.hash, header.join(","));
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        self.put(name, text.as_bytes())
    }

    /// Writes `manifest.json` and returns it.
    pub fn finish(self, command: &str, experiment: &Experiment) -> Result<Manifest> {
        let mut files = self.files;
        files.sort_by(|a, b| a.file.cmp(&b.file));
        let manifest = Manifest {
            config_hash: self.hash,
            command: command.to_string(),
            config: experiment.clone(),
            files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST), text)?;
        Ok(manifest)
    }
}

/// Reads a CSV artifact: returns the embedded hash, the header and the rows.
pub fn read_csv(path: &Path) -> Result<(String, Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let bad = |what: &str| Error::InvalidInput(format!("{}: {what}", path.display()));
    let hash = lines
        .next()
        .and_then(|l| l.strip_prefix(CSV_TAG))
        .ok_or_else(|| bad("missing config hash line"))?
        .to_string();
    let header = lines
        .next()
        .ok_or_else(|| bad("missing header"))?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let rows = lines
        .map(|l| {
            let row = l
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|_| bad(&format!("bad number `{c}`"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(bad("row length differs from header"));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((hash, header, rows))
}

fn embedded_hashes(name: &str, bytes: &[u8]) -> std::result::Result<Vec<String>, String> {
    let text = std::str::from_utf8(bytes).map_err(|_| "not UTF-8".to_string())?;
    let from_value = |v: &Value| -> std::result::Result<String, String> {
        v.get("config_hash")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| "no config_hash field".to_string())
    };
    if name.ends_with(".ndjson") {
        text.lines()
            .map(|l| serde_json::from_str::<Value>(l).map_err(|e| e.to_string()).and_then(|v| from_value(&v)))
            .collect()
    } else if name.ends_with(".json") {
        let v: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Ok(vec![from_value(&v)?])
    } else if name.ends_with(".csv") {
        text.lines()
            .next()
            .and_then(|l| l.strip_prefix(CSV_TAG))
            .map(|h| vec![h.to_string()])
            .ok_or_else(|| "no config hash line".to_string())
    } else {
        Err("unknown artifact type".to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub config_hash: String,
    pub files_checked: usize,
    pub problems: Vec<String>,
}

/// Recomputes the config hash and every file digest recorded in the manifest
/// of `dir`.
pub fn verify_artifacts(dir: &Path) -> Result<VerifyReport> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?;
    let mut problems = Vec::new();
    let recomputed = manifest.config.hash();
    if recomputed != manifest.config_hash {
        problems.push(format!(
            "manifest config hash {} does not match its config ({recomputed})",
            manifest.config_hash
        ));
    }
    for entry in &manifest.files {
        let bytes = match fs::read(dir.join(&entry.file)) {
            Ok(b) => b,
            Err(e) => {
                problems.push(format!("{}: {e}", entry.file));
                continue;
            }
        };
        if sha256_hex(&bytes) != entry.sha256 {
            problems.push(format!("{}: content digest changed", entry.file));
        }
        match embedded_hashes(&entry.file, &bytes) {
            Ok(hashes) => {
                if hashes.iter().any(|h| *h != manifest.config_hash) {
                    problems.push(format!("{}: embedded config hash differs", entry.file));
                }
            }
            Err(e) => problems.push(format!("{}: {e}", entry.file)),
        }
    }
    Ok(VerifyReport {
        ok: problems.is_empty(),
        config_hash: manifest.config_hash,
        files_checked: manifest.files.len(),
        problems,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;

    fn experiment() -> Experiment {
        ExperimentConfig::from_json(r#"{"profile": "flat", "schedule": [1], "incidence": [0]}"#)
            .unwrap()
            .resolve()
            .unwrap()
    }

    #[derive(Serialize)]
    struct Row {
        a: f64,
    }

    #[test]
    fn write_verify_and_tamper() {
        let dir = tempfile::tempdir().unwrap();
        let exp = experiment();
        let mut w = ArtifactWriter::new(dir.path(), &exp).unwrap();
        w.csv("t.csv", &["x", "y"], &[vec![0.5, -1.0], vec![1e-300, 2.0]]).unwrap();
        w.json("r.json", &serde_json::json!({"v": [1, 2]})).unwrap();
        w.ndjson("l.ndjson", &[Row { a: 1.0 }, Row { a: 2.0 }]).unwrap();
        assert!(w.put(MANIFEST, b"x").is_err());
        let m = w.finish("test", &exp).unwrap();
        assert_eq!(m.files.len(), 3);

        let report = verify_artifacts(dir.path()).unwrap();
        assert!(report.ok, "{report:?}");
        let (hash, header, rows) = read_csv(&dir.path().join("t.csv")).unwrap();
        assert_eq!(hash, exp.hash());
        assert_eq!(header, ["x", "y"]);
        assert_eq!(rows[1], vec![1e-300, 2.0]);

        let p = dir.path().join("t.csv");
        let text = fs::read_to_string(&p).unwrap().replace("2e0", "3e0");
        fs::write(&p, text).unwrap();
        let report = verify_artifacts(dir.path()).unwrap();
        assert!(!report.ok);
        assert!(report.problems[0].starts_with("t.csv"));
    }

    #[test]
    fn edited_config_in_manifest_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let exp = experiment();
        let w = ArtifactWriter::new(dir.path(), &exp).unwrap();
        w.finish("test", &exp).unwrap();
        let p = dir.path().join(MANIFEST);
        let text = fs::read_to_string(&p).unwrap().replace("\"seed\": 0", "\"seed\": 1");
        fs::write(&p, text).unwrap();
        let report = verify_artifacts(dir.path()).unwrap();
        assert!(!report.ok);
    }
}
