//! Dataset-level similarity baselines.

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::tokens::TokenSet;

use super::{Method, Score};

/// Cosine similarity of two dataset representations (mean-pooled base
/// embeddings, see [`EmbeddingMatrix::mean_pool`](crate::EmbeddingMatrix::mean_pool)).
pub fn textemb_score(source_repr: &[f64], target_repr: &[f64]) -> Result<Score> {
    if source_repr.len() != target_repr.len() {
        return Err(Error::DimensionMismatch { expected: target_repr.len(), found: source_repr.len() });
    }
    let (ns, nt) = (libm::sqrt(dot(source_repr, source_repr)), libm::sqrt(dot(target_repr, target_repr)));
    if ns == 0.0 || nt == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let cos = dot(source_repr, target_repr) / (ns * nt);
    Score::new(Method::TextEmb, cos.clamp(-1.0, 1.0))
}

/// Jaccard index of two token sets.
pub fn vocab_overlap(a: &TokenSet, b: &TokenSet) -> Result<Score> {
    if a.tokenizer_id() != b.tokenizer_id() {
        log::warn!("comparing token sets from tokenizers {:?} and {:?}", a.tokenizer_id(), b.tokenizer_id());
    }
    let (common, union) = a.intersection_union(b);
    if union == 0 {
        return Err(Error::EmptyTokenSets);
    }
    Score::new(Method::Vocab, common as f64 / union as f64)
}
