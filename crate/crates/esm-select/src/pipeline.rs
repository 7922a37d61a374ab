//! Scoring every source of a manifest against one target and merging the
//! scores into a [`Ranking`].

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use esm_select_core::matrix::mean_pool;
use esm_select_core::ranking::WallTime;
use esm_select_core::transferability::{leep, logme, nce, textemb_score, vocab_overlap, TargetContext};
use esm_select_core::{EmbeddingMatrix, LabelData, Method, Ranking, TokenSet};
use rayon::prelude::*;

use crate::manifest::{SourceEntry, SourceManifest};
use crate::store;

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("method {0} is undefined for regression targets")]
    MethodMismatch(Method),
    #[error("no source in the manifest provides a {field} needed by method {method}")]
    EmptyPool { method: Method, field: &'static str },
    #[error("method vocab needs the target token set")]
    MissingTargetTokens,
    #[error("target: {0}")]
    Target(#[from] esm_select_core::Error),
    #[error("source {source_id:?}: {source}")]
    Source { source_id: String, source: BoxError },
    #[error("cannot start worker pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

/// Everything known about the target task at ranking time.
#[derive(Debug, Clone)]
pub struct TargetInputs {
    pub target_id: String,
    /// Base-model embeddings of the target inputs.
    pub embeddings: EmbeddingMatrix,
    pub labels: LabelData,
    pub tokens: Option<TokenSet>,
}

/// Target-side state computed once and shared by all workers.
enum Prepared<'a> {
    EsmLogme(TargetContext),
    Logme(&'a LabelData),
    Pseudo(Method, &'a LabelData),
    TextEmb(Vec<f64>),
    Vocab(&'a TokenSet),
}

impl<'a> Prepared<'a> {
    fn new(target: &'a TargetInputs, method: Method) -> Result<Self, PipelineError> {
        Ok(match method {
            Method::EsmLogme => Prepared::EsmLogme(TargetContext::new(&target.embeddings, &target.labels)?),
            Method::Logme => Prepared::Logme(&target.labels),
            Method::Leep | Method::Nce => Prepared::Pseudo(method, &target.labels),
            Method::TextEmb => Prepared::TextEmb(mean_pool(&target.embeddings)),
            Method::Vocab => Prepared::Vocab(target.tokens.as_ref().ok_or(PipelineError::MissingTargetTokens)?),
        })
    }

    fn score(&self, entry: &SourceEntry) -> Result<f64, BoxError> {
        let path = |p: &Option<std::path::PathBuf>| -> Result<std::path::PathBuf, BoxError> {
            p.clone().ok_or_else(|| "missing representation".into())
        };
        Ok(match self {
            Prepared::EsmLogme(ctx) => ctx.score(&store::read_esm(&path(&entry.esm_path)?)?)?.value,
            Prepared::Logme(labels) => logme(&store::read_matrix(&path(&entry.target_emb_path)?)?, labels)?.score,
            Prepared::Pseudo(method, labels) => {
                let pseudo = store::read_pseudo(&path(&entry.pseudo_label_path)?)?;
                match method {
                    Method::Leep => leep(&pseudo, labels)?.value,
                    _ => nce(&pseudo, labels)?.value,
                }
            }
            Prepared::TextEmb(target) => {
                let source = mean_pool(&store::read_matrix(&path(&entry.text_emb_path)?)?);
                textemb_score(&source, target)?.value
            }
            Prepared::Vocab(target) => vocab_overlap(&store::read_tokenset(&path(&entry.token_set_path)?)?, target)?.value,
        })
    }
}

/// Manifest field holding the representation `method` scores.
pub fn required_field(method: Method) -> &'static str {
    match method {
        Method::EsmLogme => "esm_path",
        Method::Logme => "target_emb_path",
        Method::Leep | Method::Nce => "pseudo_label_path",
        Method::TextEmb => "text_emb_path",
        Method::Vocab => "token_set_path",
    }
}

fn has_representation(entry: &SourceEntry, method: Method) -> bool {
    let slot = match method {
        Method::EsmLogme => &entry.esm_path,
        Method::Logme => &entry.target_emb_path,
        Method::Leep | Method::Nce => &entry.pseudo_label_path,
        Method::TextEmb => &entry.text_emb_path,
        Method::Vocab => &entry.token_set_path,
    };
    slot.is_some()
}

/// Scores every usable source on a pool of `threads` workers. Sources
/// lacking the representation `method` needs are skipped with a warning.
/// The result does not depend on `threads` or on the manifest order.
pub fn rank_sources(target: &TargetInputs, manifest: &SourceManifest, method: Method, threads: usize) -> Result<Ranking, PipelineError> {
    let start = Instant::now();
    if target.labels.is_regression() && !method.supports_regression() {
        return Err(PipelineError::MethodMismatch(method));
    }
    if target.labels.len() != target.embeddings.rows() {
        return Err(esm_select_core::Error::RowCountMismatch { left: target.embeddings.rows(), right: target.labels.len() }.into());
    }
    let prepared = Prepared::new(target, method)?;
    let (usable, skipped): (Vec<&SourceEntry>, Vec<&SourceEntry>) = manifest.entries.iter().partition(|e| has_representation(e, method));
    if usable.is_empty() {
        return Err(PipelineError::EmptyPool { method, field: required_field(method) });
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
    let results: Vec<Result<(f64, f64), BoxError>> = pool.install(|| {
        usable
            .par_iter()
            .map(|entry| {
                let t = Instant::now();
                let score = prepared.score(entry)?;
                Ok((score, t.elapsed().as_secs_f64() * 1e3))
            })
            .collect()
    });

    let mut scores = Vec::with_capacity(usable.len());
    let mut per_source = BTreeMap::new();
    for (entry, result) in usable.iter().zip(results) {
        let (score, ms) = result.map_err(|source| PipelineError::Source { source_id: entry.source_id.clone(), source })?;
        scores.push((entry.source_id.clone(), score));
        per_source.insert(entry.source_id.clone(), ms);
    }
    let mut ranking = Ranking::from_scores(method, target.target_id.clone(), scores)?;
    let mut warnings: Vec<String> =
        skipped.iter().map(|e| format!("skipped source {:?}: no {}", e.source_id, required_field(method))).collect();
    warnings.sort();
    ranking.warnings = warnings;
    ranking.wall_time_ms = WallTime { total: start.elapsed().as_secs_f64() * 1e3, per_source };
    Ok(ranking)
}

/// Target id derived from a file name: the stem up to the first dot.
pub fn target_id_from_path(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.split('.').next().unwrap_or_default().to_string()
}
