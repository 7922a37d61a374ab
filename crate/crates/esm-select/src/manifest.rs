//! Source-pool manifests: one JSON document listing, per candidate source
//! task, the files holding its representations. Relative paths resolve
//! against the manifest's directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid manifest {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("duplicate source_id {0:?} in manifest")]
    DuplicateSource(String),
    #[error("source {source_id:?}: {field} {path} does not exist")]
    MissingFile { source_id: String, field: &'static str, path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceEntry {
    pub source_id: String,
    /// `ESMW` map from base to source-tuned embeddings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub esm_path: Option<PathBuf>,
    /// `ESPL` predictions of the source model on the target inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo_label_path: Option<PathBuf>,
    /// `ESTS` token ids of the source dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_set_path: Option<PathBuf>,
    /// `ESEB` dataset representation; multi-row files are mean-pooled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_emb_path: Option<PathBuf>,
    /// `ESEB` embeddings of the target inputs by the source-tuned model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_emb_path: Option<PathBuf>,
}

impl SourceEntry {
    pub fn new(source_id: impl Into<String>) -> Self {
        Self {
            source_id: source_id.into(),
            esm_path: None,
            pseudo_label_path: None,
            token_set_path: None,
            text_emb_path: None,
            target_emb_path: None,
        }
    }

    fn paths_mut(&mut self) -> [(&'static str, &mut Option<PathBuf>); 5] {
        [
            ("esm_path", &mut self.esm_path),
            ("pseudo_label_path", &mut self.pseudo_label_path),
            ("token_set_path", &mut self.token_set_path),
            ("text_emb_path", &mut self.text_emb_path),
            ("target_emb_path", &mut self.target_emb_path),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceManifest {
    pub entries: Vec<SourceEntry>,
}

impl SourceManifest {
    /// Parses, resolves relative paths and checks every referenced file exists.
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.into(), source })?;
        let manifest: SourceManifest = serde_json::from_str(&text).map_err(|source| ManifestError::Parse { path: path.into(), source })?;
        let base = path.parent().unwrap_or(Path::new(""));
        manifest.resolve(base)
    }

    pub fn resolve(mut self, base: &Path) -> Result<Self, ManifestError> {
        let mut seen = BTreeSet::new();
        for entry in &mut self.entries {
            if !seen.insert(entry.source_id.clone()) {
                return Err(ManifestError::DuplicateSource(entry.source_id.clone()));
            }
            let source_id = entry.source_id.clone();
            for (field, slot) in entry.paths_mut() {
                if let Some(p) = slot {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                    if !p.exists() {
                        return Err(ManifestError::MissingFile { source_id, field, path: p.clone() });
                    }
                }
            }
        }
        Ok(self)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, json + "\n")
    }
}
