use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance stamped onto every file a command writes.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub input: String,
    pub input_sha256: String,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new<C: Serialize>(
        command: &str,
        config: &C,
        input: &Path,
        bytes: &[u8],
    ) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            input: input.display().to_string(),
            input_sha256: hex::encode(Sha256::digest(bytes)),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }

    pub fn comment_line(&self) -> String {
        format!(
            "# manifest: {}\n",
            serde_json::to_string(self).expect("manifest serializes")
        )
    }
}

/// Collects output files in memory and writes them only once all are ready.
pub struct Outputs {
    dir: PathBuf,
    manifest: RunManifest,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path, manifest: RunManifest) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            manifest,
            files: Vec::new(),
        }
    }

    /// A delimited-text file with the manifest as a leading `#` comment.
    pub fn table<F>(&mut self, name: impl Into<String>, body: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = self.manifest.comment_line().into_bytes();
        body(&mut buf)?;
        self.files.push((name.into(), buf));
        Ok(())
    }

    /// A JSON document of the form `{"manifest": ..., "<key>": value}`.
    pub fn json<T: Serialize>(&mut self, name: &str, key: &str, value: &T) -> Result<()> {
        let mut doc = serde_json::Map::new();
        doc.insert("manifest".into(), serde_json::to_value(&self.manifest)?);
        doc.insert(key.into(), serde_json::to_value(value)?);
        let mut buf = serde_json::to_vec_pretty(&doc)?;
        buf.push(b'\n');
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    pub fn write(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let path = self.dir.join(name);
            let mut f =
                fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            f.write_all(&bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}
