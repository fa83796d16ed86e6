//! Workspace manifest: one artifact per line with its content hash, kept
//! sorted. Recipes consult it to skip member models that are already built
//! and unchanged, and rewrites are deterministic so identical runs yield
//! byte-identical manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use seqtag::error::{Error, Result};

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn hash_file(path: &Path) -> Result<u64> {
    Ok(fnv1a64(&std::fs::read(path)?))
}

#[derive(Debug, Default)]
pub struct Manifest {
    root: PathBuf,
    entries: BTreeMap<String, u64>,
}

impl Manifest {
    pub fn path(root: &Path) -> PathBuf {
        root.join("manifest.txt")
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = Self::path(root);
        let mut entries = BTreeMap::new();
        if path.exists() {
            for (i, line) in std::fs::read_to_string(&path)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let Some((hash, rel)) = line.split_once("  ") else {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: "expected <hash>  <path>".into(),
                    });
                };
                let hash = u64::from_str_radix(hash, 16).map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("invalid hash {hash:?}"),
                })?;
                entries.insert(rel.to_string(), hash);
            }
        }
        Ok(Self {
            root: root.to_path_buf(),
            entries,
        })
    }

    pub fn save(&self) -> Result<()> {
        let mut out = String::new();
        for (rel, hash) in &self.entries {
            out.push_str(&format!("{hash:016x}  {rel}\n"));
        }
        std::fs::write(Self::path(&self.root), out)?;
        Ok(())
    }

    /// True when the artifact exists and its content hash matches the
    /// recorded one.
    pub fn is_current(&self, rel: &str) -> bool {
        let path = self.root.join(rel);
        match (self.entries.get(rel), path.exists()) {
            (Some(&recorded), true) => hash_file(&path).map(|h| h == recorded).unwrap_or(false),
            _ => false,
        }
    }

    /// Hashes the artifact on disk and records it.
    pub fn record(&mut self, rel: &str) -> Result<u64> {
        let hash = hash_file(&self.root.join(rel))?;
        self.entries.insert(rel.to_string(), hash);
        Ok(hash)
    }

    pub fn recorded_hash(&self, rel: &str) -> Option<u64> {
        self.entries.get(rel).copied()
    }
}
