//! Stage manifest and directory locking for resumable offline pipelines.
//!
//! - Each completed stage records a hash of its inputs (config slice plus
//!   upstream artifact digests) and the digest of every file it wrote.
//! - A stage is skipped when its input hash matches and all outputs still
//!   hash to their recorded digests, so deleting any artifact or editing
//!   any relevant config field reruns exactly the affected suffix of the
//!   pipeline.
//! - The manifest is saved after every stage, so an aborted run resumes
//!   from the last completed stage.
//! - A lock file serializes writers: at most one command writes to an
//!   output directory at a time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";
const LOCK_FILE: &str = "lesrom.lock";

/// Hex SHA-256 of a byte slice.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex(&h.finalize())
}

/// Hex SHA-256 of a file's contents.
pub fn digest_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("cannot hash `{}`", path.display()))?;
    Ok(digest_bytes(&bytes))
}

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(2 * bytes.len());
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StageRecord {
    inputs: String,
    /// Output file name -> content digest, in name order.
    outputs: BTreeMap<String, String>,
}

/// Per-directory record of completed stages.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Manifest {
    stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    /// Load the directory's manifest, or start empty.
    pub fn load(dir: &Path) -> anyhow::Result<Manifest> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = std::fs::read_to_string(&path)?;
        serde_json::from_str(&text)
            .with_context(|| format!("corrupt manifest `{}`; delete it to rebuild", path.display()))
    }

    fn save(&self, dir: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    /// True when the stage's recorded inputs match and every recorded
    /// output file still hashes to its recorded digest.
    pub fn up_to_date(&self, dir: &Path, stage: &str, inputs: &str) -> bool {
        let Some(record) = self.stages.get(stage) else {
            return false;
        };
        if record.inputs != inputs {
            return false;
        }
        record.outputs.iter().all(|(name, digest)| {
            digest_file(&dir.join(name)).map(|d| d == *digest).unwrap_or(false)
        })
    }

    /// Record a completed stage and persist the manifest immediately.
    pub fn record(
        &mut self,
        dir: &Path,
        stage: &str,
        inputs: String,
        outputs: &[String],
    ) -> anyhow::Result<()> {
        let mut map = BTreeMap::new();
        for name in outputs {
            map.insert(name.clone(), digest_file(&dir.join(name))?);
        }
        self.stages.insert(
            stage.to_string(),
            StageRecord {
                inputs,
                outputs: map,
            },
        );
        self.save(dir)
    }

    /// Recorded digest of one output file, if the stage has completed.
    pub fn output_digest(&self, stage: &str, name: &str) -> Option<&str> {
        self.stages
            .get(stage)
            .and_then(|r| r.outputs.get(name))
            .map(String::as_str)
    }
}

/// Exclusive write lock on an output directory, released on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> anyhow::Result<DirLock> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory `{}`", dir.display()))?;
        let path = dir.join(LOCK_FILE);
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => bail!(
                "output directory `{}` is locked by another command; remove `{}` if that run is gone",
                dir.display(),
                path.display()
            ),
            Err(e) => Err(e).with_context(|| format!("cannot lock `{}`", dir.display())),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
