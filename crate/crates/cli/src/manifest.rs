//! Run manifests: everything needed to reproduce a run bit for bit.

use chrono::Utc;
use ramol::learner::LearnerConfig;
use ramol::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub kind: String,
    pub path: String,
    pub sha256: String,
    pub rows: usize,
    pub dim: usize,
    pub classes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_mapping: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_col: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_cols: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream_seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub created_utc: String,
    pub code_version: String,
    pub command: String,
    pub dataset: DatasetInfo,
    /// Resolved hyperparameters; the per-run seed comes from `seeds`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<LearnerConfig<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variants: Option<Vec<String>>,
    pub seeds: Vec<u64>,
    pub window: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_samples: Option<usize>,
    pub dump_buffer: bool,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, dataset: DatasetInfo, seeds: Vec<u64>, window: usize) -> Self {
        RunManifest {
            version: MANIFEST_VERSION,
            created_utc: Utc::now().to_rfc3339(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            dataset,
            config: None,
            variants: None,
            seeds,
            window,
            repeats: None,
            drift_samples: None,
            dump_buffer: false,
            outputs: Vec::new(),
        }
    }

    /// Short hash over the reproducibility-relevant fields, used in the run
    /// directory name.
    pub fn short_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.command.as_bytes());
        hasher.update(self.dataset.sha256.as_bytes());
        if let Some(cfg) = &self.config {
            hasher.update(cfg.fingerprint().as_bytes());
        }
        if let Some(vs) = &self.variants {
            hasher.update(vs.join(",").as_bytes());
        }
        for s in &self.seeds {
            hasher.update(s.to_le_bytes());
        }
        hasher.update(self.window.to_le_bytes());
        let digest = hasher.finalize();
        format!("{digest:x}")[..8].to_string()
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("bad manifest {}: {e}", path.display())))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(Error::Data(format!(
                "unsupported manifest version {}",
                manifest.version
            )));
        }
        Ok(manifest)
    }
}

/// Create the run directory `out/<timestamp>-<hash>` and write the manifest
/// into it before anything else.
pub fn create_run_dir(
    out_root: &std::path::Path,
    manifest: &RunManifest,
) -> Result<std::path::PathBuf> {
    let stamp = Utc::now().format("%Y%m%d-%H%M%S");
    let base = format!("{stamp}-{}", manifest.short_hash());
    let mut dir = out_root.join(&base);
    let mut attempt = 1;
    loop {
        match std::fs::create_dir_all(dir.parent().unwrap_or(out_root))
            .and_then(|_| std::fs::create_dir(&dir))
        {
            Ok(()) => break,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists && attempt < 100 => {
                attempt += 1;
                dir = out_root.join(format!("{base}-{attempt}"));
            }
            Err(e) => return Err(Error::Io(e)),
        }
    }
    write_json(&dir.join("manifest.json"), manifest)?;
    Ok(dir)
}

pub fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Data(format!("serialization failure: {e}")))?;
    std::fs::write(path, text).map_err(Error::Io)
}

/// Run `body`; on failure remove the whole run directory so no partial
/// outputs survive.
pub fn with_cleanup<T>(
    dir: &std::path::Path,
    body: impl FnOnce() -> Result<T>,
) -> Result<T> {
    match body() {
        Ok(v) => Ok(v),
        Err(e) => {
            let _ = std::fs::remove_dir_all(dir);
            Err(e)
        }
    }
}
