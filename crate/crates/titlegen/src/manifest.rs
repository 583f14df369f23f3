//! The working directory and its `manifest.json`.
//!
//! Every artifact a stage writes is recorded with its digest, the digest of
//! the configuration that produced it and the digests of the artifacts it
//! was derived from. The manifest carries no timestamps, so re-running a
//! stage on the same inputs leaves it byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::AppError;
use crate::hash::{file_sha256, sha256_hex};
use crate::jsonl;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub stage: String,
    pub sha256: String,
    pub config_hash: String,
    /// Input artifact name to its digest when this one was written.
    pub inputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: BTreeMap<String, ArtifactRecord>,
}

impl Manifest {
    pub fn sha(&self, name: &str) -> Option<&str> {
        self.artifacts.get(name).map(|r| r.sha256.as_str())
    }
}

/// A stage's view of the working directory.
#[derive(Debug, Clone)]
pub struct Workdir {
    root: PathBuf,
    config_hash: String,
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>, config_hash: impl Into<String>) -> Self {
        Workdir {
            root: root.into(),
            config_hash: config_hash.into(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Path of an artifact that must already exist.
    pub fn input(&self, name: &str) -> Result<PathBuf, AppError> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(AppError::MissingArtifact(p))
        }
    }

    pub fn manifest(&self) -> Result<Manifest, AppError> {
        let p = self.path(MANIFEST);
        if p.exists() {
            jsonl::read_json(&p)
        } else {
            Ok(Manifest::default())
        }
    }

    /// Writes `bytes` as artifact `name` and records it. Inputs are
    /// resolved first, so a missing input leaves nothing behind.
    pub fn write(&self, stage: &str, name: &str, bytes: &[u8], inputs: &[&str]) -> Result<(), AppError> {
        let mut m = self.manifest()?;
        let mut deps = BTreeMap::new();
        for &i in inputs {
            let digest = match m.sha(i) {
                Some(s) => s.to_string(),
                None => file_sha256(&self.input(i)?)?,
            };
            deps.insert(i.to_string(), digest);
        }
        jsonl::write_bytes(&self.path(name), bytes)?;
        m.artifacts.insert(
            name.to_string(),
            ArtifactRecord {
                stage: stage.to_string(),
                sha256: sha256_hex(bytes),
                config_hash: self.config_hash.clone(),
                inputs: deps,
            },
        );
        jsonl::write_json(&self.path(MANIFEST), &m)
    }

    pub fn ensure(&self) -> Result<(), AppError> {
        fs::create_dir_all(&self.root).map_err(AppError::io(&self.root))
    }
}
