//! Source rankings and their evaluation against realised transfer
//! performance. All metrics are reported in percentage points.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::transferability::Method;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankedSource {
    pub source_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WallTime {
    pub total: f64,
    pub per_source: BTreeMap<String, f64>,
}

/// Sources ordered by descending score, ties broken by ascending source id.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ranking {
    pub method: Method,
    pub target_id: String,
    pub items: Vec<RankedSource>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub warnings: Vec<String>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub wall_time_ms: WallTime,
}

impl Ranking {
    pub fn from_scores(method: Method, target_id: impl Into<String>, scores: Vec<(String, f64)>) -> Result<Self> {
        let mut items: Vec<RankedSource> = scores.into_iter().map(|(source_id, score)| RankedSource { source_id, score }).collect();
        sort_items(&mut items);
        let ranking = Self { method, target_id: target_id.into(), items, warnings: Vec::new(), wall_time_ms: WallTime::default() };
        ranking.validate()?;
        Ok(ranking)
    }

    /// A ranking given only as an ordered list (best first), e.g. transcribed
    /// from a published table. Scores are assigned as `len − position`.
    pub fn from_order<S: Into<String>>(method: Method, target_id: impl Into<String>, ids: impl IntoIterator<Item = S>) -> Result<Self> {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        let len = ids.len();
        let scores = ids.into_iter().enumerate().map(|(i, id)| (id, (len - i) as f64)).collect();
        Self::from_scores(method, target_id, scores)
    }

    /// Checks the ordering and uniqueness invariants (e.g. after deserialising).
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for item in &self.items {
            if !item.score.is_finite() {
                return Err(Error::NonFiniteScore(item.source_id.clone()));
            }
            if !seen.insert(item.source_id.as_str()) {
                return Err(Error::DuplicateSource(item.source_id.clone()));
            }
        }
        if self.items.windows(2).any(|w| compare(&w[0], &w[1]).is_gt()) {
            return Err(Error::InvalidLabels(format!("ranking for {:?} is not sorted by descending score", self.target_id)));
        }
        Ok(())
    }

    pub fn source_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.source_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

fn compare(a: &RankedSource, b: &RankedSource) -> core::cmp::Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.source_id.cmp(&b.source_id))
}

fn sort_items(items: &mut [RankedSource]) {
    items.sort_by(compare);
}

/// Realised performance of every source on one target: accuracy for
/// classification, mean of Pearson and Spearman correlation for regression.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub target_id: String,
    pub perf: BTreeMap<String, f64>,
    /// Performance without any intermediate task.
    pub baseline_perf: Option<f64>,
}

impl GroundTruth {
    pub fn new(target_id: impl Into<String>, perf: BTreeMap<String, f64>, baseline_perf: Option<f64>) -> Result<Self> {
        if perf.is_empty() {
            return Err(Error::EmptyRanking);
        }
        if let Some((id, _)) = perf.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteScore(id.clone()));
        }
        if baseline_perf.is_some_and(|b| !b.is_finite()) {
            return Err(Error::NonFiniteScore("__baseline__".into()));
        }
        Ok(Self { target_id: target_id.into(), perf, baseline_perf })
    }

    pub fn from_pairs<S: Into<String>>(target_id: impl Into<String>, pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        Self::new(target_id, pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(), None)
    }

    fn lookup(&self, id: &str) -> Result<f64> {
        self.perf.get(id).copied().ok_or_else(|| Error::MissingGroundTruth(id.into()))
    }

    fn best(&self) -> f64 {
        self.perf.values().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn worst(&self) -> f64 {
        self.perf.values().copied().fold(f64::INFINITY, f64::min)
    }
}

fn discount(position: usize) -> f64 {
    libm::log2(position as f64 + 2.0)
}

/// NDCG over the full ranking with linear gain, in percentage points.
///
/// Relevance is the source's realised performance, shifted by the pool
/// minimum when any performance is negative. The ideal DCG uses the best
/// `len(ranking)` performances of the ground-truth pool.
pub fn ndcg(ranking: &Ranking, gt: &GroundTruth) -> Result<f64> {
    if ranking.is_empty() {
        return Err(Error::EmptyRanking);
    }
    let worst = gt.worst();
    let shift = if worst < 0.0 { -worst } else { 0.0 };
    let mut dcg = 0.0;
    for (i, id) in ranking.source_ids().enumerate() {
        dcg += (gt.lookup(id)? + shift) / discount(i);
    }
    if gt.best() == worst {
        return Ok(100.0);
    }
    let mut ideal: Vec<f64> = gt.perf.values().map(|v| v + shift).collect();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal.iter().take(ranking.len()).enumerate().map(|(i, rel)| rel / discount(i)).sum();
    if idcg <= 0.0 {
        return Ok(100.0);
    }
    Ok((100.0 * dcg / idcg).clamp(0.0, 100.0))
}

/// `100 · (p* − p_k) / p*`: shortfall of the best of the top-`k` ranked
/// sources against the best source in the whole ground-truth pool.
pub fn regret_at_k(ranking: &Ranking, gt: &GroundTruth, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if ranking.is_empty() {
        return Err(Error::EmptyRanking);
    }
    let perfs = ranking.source_ids().map(|id| gt.lookup(id)).collect::<Result<Vec<f64>>>()?;
    let best = gt.best();
    if best <= 0.0 {
        return Err(Error::NonPositiveBest(best));
    }
    let top = perfs.iter().take(k).copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((100.0 * (best - top) / best).max(0.0))
}

/// Metrics of one ranking against its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub target_id: String,
    pub ndcg: f64,
    /// `regret[i]` is regret@`ks[i]` of the owning report.
    pub regret: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub ks: Vec<usize>,
    pub rows: Vec<EvalRow>,
    /// Column-wise arithmetic means over `rows`, unrounded.
    pub average: EvalRow,
}

/// Sorted, deduplicated cutoffs; rejects `k = 0`.
pub fn normalize_ks(ks: &[usize]) -> Result<Vec<usize>> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidK);
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

pub fn evaluate_ranking(ranking: &Ranking, gt: &GroundTruth, ks: &[usize]) -> Result<EvalRow> {
    let ndcg = ndcg(ranking, gt)?;
    let regret = ks.iter().map(|&k| regret_at_k(ranking, gt, k)).collect::<Result<Vec<f64>>>()?;
    Ok(EvalRow { target_id: ranking.target_id.clone(), ndcg, regret })
}

pub fn aggregate_report(ks: &[usize], rows: Vec<EvalRow>) -> Result<EvalReport> {
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    if let Some(row) = rows.iter().find(|r| r.regret.len() != ks.len()) {
        return Err(Error::DimensionMismatch { expected: ks.len(), found: row.regret.len() });
    }
    let count = rows.len() as f64;
    let ndcg = rows.iter().map(|r| r.ndcg).sum::<f64>() / count;
    let regret = (0..ks.len()).map(|c| rows.iter().map(|r| r.regret[c]).sum::<f64>() / count).collect();
    let average = EvalRow { target_id: "avg".into(), ndcg, regret };
    Ok(EvalReport { ks: ks.to_vec(), rows, average })
}

impl EvalReport {
    /// Plain-text table with values rounded to two decimals.
    pub fn render_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.target_id.len()).max().unwrap_or(0).max(6);
        let mut out = String::new();
        let _ = write!(out, "{:<width$} {:>8}", "target", "NDCG");
        for k in &self.ks {
            let _ = write!(out, " {:>10}", format!("Regret@{k}"));
        }
        out.push('\n');
        for row in self.rows.iter().chain(core::iter::once(&self.average)) {
            let _ = write!(out, "{:<width$} {:>8.2}", row.target_id, row.ndcg);
            for r in &row.regret {
                let _ = write!(out, " {r:>10.2}");
            }
            out.push('\n');
        }
        out
    }
}
