use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one invocation: resolved configuration, inputs, outputs and
/// numerical facts worth keeping next to the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: Option<RunConfig>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<OutputFile>,
    pub wall_seconds: f64,
    pub metadata: BTreeMap<String, serde_json::Value>,
    pub warnings: Vec<String>,
}

pub fn sha256_file(path: &Path) -> AppResult<(String, u64)> {
    let bytes = std::fs::read(path).map_err(|e| AppError::io(format!("hashing {}", path.display()), e))?;
    Ok((format!("{:x}", Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Collects outputs while a command runs and writes `manifest.json` last.
pub struct ManifestBuilder {
    dir: PathBuf,
    start: Instant,
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn new(command: &str, dir: &Path, config: Option<&RunConfig>) -> Self {
        Self {
            dir: dir.to_path_buf(),
            start: Instant::now(),
            manifest: RunManifest {
                command: command.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                config: config.cloned(),
                inputs: BTreeMap::new(),
                outputs: Vec::new(),
                wall_seconds: 0.0,
                metadata: BTreeMap::new(),
                warnings: Vec::new(),
            },
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn input(&mut self, path: &Path) -> AppResult<()> {
        let (sum, _) = sha256_file(path)?;
        self.manifest.inputs.insert(path.display().to_string(), sum);
        Ok(())
    }

    /// Registers a file already written below the output directory.
    pub fn output(&mut self, path: &Path) -> AppResult<()> {
        let (sha256, bytes) = sha256_file(path)?;
        let rel = path.strip_prefix(&self.dir).unwrap_or(path).to_path_buf();
        self.manifest.outputs.retain(|o| o.path != rel);
        self.manifest.outputs.push(OutputFile { path: rel, sha256, bytes });
        Ok(())
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("metadata serializes");
        self.manifest.metadata.insert(key.into(), v);
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.manifest.warnings.push(msg.into());
    }

    pub fn finish(mut self) -> AppResult<RunManifest> {
        self.manifest.wall_seconds = self.start.elapsed().as_secs_f64();
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| AppError::io(format!("writing {}", path.display()), e))?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_outputs_with_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = ManifestBuilder::new("test", dir.path(), None);
        let p = m.path("a.txt");
        std::fs::write(&p, "abc").unwrap();
        m.output(&p).unwrap();
        m.meta("answer", 42);
        let man = m.finish().unwrap();
        assert_eq!(man.outputs.len(), 1);
        assert_eq!(man.outputs[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        let back: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(back, man);
    }
}
