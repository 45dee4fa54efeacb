//! JSON dataset manifest: one entry per subject with record and label file
//! paths, sampling rate, and a train/test split tag.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub record_path: PathBuf,
    pub label_path: PathBuf,
    pub fs: f64,
    pub split: SplitTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Subject ids must be unique and every referenced file must exist.
    /// Relative paths are resolved against `base_dir`.
    pub fn validate(&self, base_dir: &Path) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(&e.subject_id) {
                return Err(SqaError::MalformedFile {
                    path: base_dir.display().to_string(),
                    line: 0,
                    msg: format!("duplicate subject id {}", e.subject_id),
                });
            }
            for p in [&e.record_path, &e.label_path] {
                let resolved = resolve(base_dir, p);
                if !resolved.is_file() {
                    return Err(SqaError::MalformedFile {
                        path: resolved.display().to_string(),
                        line: 0,
                        msg: format!("missing file for subject {}", e.subject_id),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    /// Load, validate, and rewrite any relative paths to be absolute
    /// relative to the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| SqaError::MalformedFile {
                path: path.display().to_string(),
                line: e.line(),
                msg: e.to_string(),
            })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        manifest.validate(&base)?;
        for e in &mut manifest.entries {
            e.record_path = resolve(&base, &e.record_path);
            e.label_path = resolve(&base, &e.label_path);
        }
        Ok(manifest)
    }

    pub fn split(&self, tag: SplitTag) -> Vec<&ManifestEntry> {
        self.entries.iter().filter(|e| e.split == tag).collect()
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
