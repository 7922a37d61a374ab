//! LogME: the maximised log marginal evidence of a Bayesian linear model
//! from features to labels, per example.
//!
//! For features `F` (`n x d`), one scalar target `y`, prior precision `α`
//! and noise precision `β`:
//!
//! ```text
//! L(α, β) = n/2 ln β + d/2 ln α − n/2 ln 2π − β/2 ‖F m − y‖² − α/2 mᵀm
//!           − 1/2 ln det(α I + β FᵀF),      m = β (α I + β FᵀF)⁻¹ Fᵀ y
//! ```
//!
//! With `FᵀF = V diag(λ) Vᵀ` and `z = Vᵀ Fᵀ y` every term is a sum over the
//! spectrum, so one eigen-decomposition per feature matrix serves all target
//! dimensions and all fixed-point steps.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::esm::Esm;
use crate::labels::LabelData;
use crate::linalg::{eigen_apply, gram, matmul, outer_gram, MatRef};
use crate::matrix::EmbeddingMatrix;

use super::{Method, Score};

const MAX_ITERATIONS: usize = 100;
/// Stop once the evidence per example moves less than this.
const TOLERANCE: f64 = 1e-6;
const PRECISION_MIN: f64 = 1e-10;
const PRECISION_MAX: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LogMeOptions {
    /// Standardise every feature column to zero mean and unit variance first.
    pub normalize_features: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceFit {
    pub alpha: f64,
    pub beta: f64,
    /// Maximised log evidence divided by `n`.
    pub evidence: f64,
    pub iterations: usize,
    /// `β` hit its upper bound: `y` is fit exactly and the evidence is unbounded.
    pub beta_clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogMeResult {
    /// Mean of `per_dim[..].evidence`.
    pub score: f64,
    pub per_dim: Vec<EvidenceFit>,
    pub n: usize,
    pub d: usize,
    /// Some target dimension was fit exactly (see [`EvidenceFit::beta_clamped`]).
    pub degenerate: bool,
}

pub fn logme(features: &EmbeddingMatrix, labels: &LabelData) -> Result<LogMeResult> {
    logme_with(features, labels, LogMeOptions::default())
}

pub fn logme_with(features: &EmbeddingMatrix, labels: &LabelData, opts: LogMeOptions) -> Result<LogMeResult> {
    let targets = prepare_targets(features.rows(), labels)?;
    let mut f = features.to_f64();
    if opts.normalize_features {
        standardize(&mut f, features.rows(), features.cols());
    }
    logme_dense(&f, features.rows(), features.cols(), &targets)
}

/// ESM-LogME: LogME of `esm`-transformed base embeddings of the target.
pub fn esm_logme(base_target_embeddings: &EmbeddingMatrix, labels: &LabelData, esm: &Esm) -> Result<Score> {
    let ctx = TargetContext::new(base_target_embeddings, labels)?;
    Score::new(Method::EsmLogme, ctx.esm_logme(esm)?.score)
}

/// Per-target state shared across all candidate ESMs: the base embeddings
/// widened once and the scalar target columns.
#[derive(Debug, Clone)]
pub struct TargetContext {
    x: Vec<f64>,
    n: usize,
    d: usize,
    targets: Vec<Vec<f64>>,
    opts: LogMeOptions,
}

impl TargetContext {
    pub fn new(base_target_embeddings: &EmbeddingMatrix, labels: &LabelData) -> Result<Self> {
        Self::with_options(base_target_embeddings, labels, LogMeOptions::default())
    }

    pub fn with_options(base: &EmbeddingMatrix, labels: &LabelData, opts: LogMeOptions) -> Result<Self> {
        let targets = prepare_targets(base.rows(), labels)?;
        Ok(Self { x: base.to_f64(), n: base.rows(), d: base.cols(), targets, opts })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn esm_logme(&self, esm: &Esm) -> Result<LogMeResult> {
        if esm.d_in() != self.d {
            return Err(Error::DimensionMismatch { expected: esm.d_in(), found: self.d });
        }
        let mapped = esm.apply_f64(&self.x, self.n)?;
        let mut f: Vec<f64> = mapped.iter().map(|&v| f64::from(v)).collect();
        if self.opts.normalize_features {
            standardize(&mut f, self.n, esm.d_out());
        }
        logme_dense(&f, self.n, esm.d_out(), &self.targets)
    }

    pub fn score(&self, esm: &Esm) -> Result<Score> {
        Score::new(Method::EsmLogme, self.esm_logme(esm)?.score)
    }
}

fn prepare_targets(n: usize, labels: &LabelData) -> Result<Vec<Vec<f64>>> {
    if labels.len() != n {
        return Err(Error::RowCountMismatch { left: n, right: labels.len() });
    }
    if n < 2 {
        return Err(Error::TooFewExamples { needed: 2, found: n });
    }
    if let LabelData::Classification { ids, .. } = labels {
        if ids.iter().all(|&id| id == ids[0]) {
            return Err(Error::SingleClass);
        }
    }
    Ok(labels.target_columns())
}

fn standardize(f: &mut [f64], n: usize, d: usize) {
    for c in 0..d {
        let mean = (0..n).map(|r| f[r * d + c]).sum::<f64>() / n as f64;
        let var = (0..n).map(|r| (f[r * d + c] - mean) * (f[r * d + c] - mean)).sum::<f64>() / n as f64;
        let scale = if var > 0.0 { 1.0 / libm::sqrt(var) } else { 1.0 };
        for r in 0..n {
            f[r * d + c] = (f[r * d + c] - mean) * scale;
        }
    }
}

/// Runs LogME on a row-major `n x d` feature block for every target column.
pub(crate) fn logme_dense(f: &[f64], n: usize, d: usize, targets: &[Vec<f64>]) -> Result<LogMeResult> {
    let spectrum = Spectrum::new(f, n, d, targets)?;
    let per_dim: Vec<EvidenceFit> = (0..targets.len()).map(|t| spectrum.problem(t).maximize()).collect();
    let score = per_dim.iter().map(|p| p.evidence).sum::<f64>() / per_dim.len() as f64;
    if !score.is_finite() {
        return Err(Error::NonFiniteScore("logme".into()));
    }
    let degenerate = per_dim.iter().any(|p| p.beta_clamped);
    Ok(LogMeResult { score, per_dim, n, d, degenerate })
}

/// Nonzero-capable part of the spectrum of `FᵀF` plus projected targets.
struct Spectrum {
    n: usize,
    d: usize,
    /// `min(n, d)` eigenvalues; the remaining `d − len` are exactly zero.
    eigenvalues: Vec<f64>,
    /// Row `i`: `v_iᵀ Fᵀ y_t` for every target `t`.
    projections: Vec<f64>,
    targets_sq: Vec<f64>,
    width: usize,
}

impl Spectrum {
    fn new(f: &[f64], n: usize, d: usize, targets: &[Vec<f64>]) -> Result<Self> {
        let width = targets.len();
        let mut y = vec![0.0; n * width];
        for (t, col) in targets.iter().enumerate() {
            for (r, &v) in col.iter().enumerate() {
                y[r * width + t] = v;
            }
        }
        let targets_sq = targets.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
        let fv = MatRef::row_major(f, n, d);
        let (eigenvalues, projections) = if n >= d {
            let mut fty = matmul(fv.t(), MatRef::row_major(&y, n, width));
            let values = eigen_apply(gram(f, n, d), d, &mut fty, width)?;
            (values, fty)
        } else {
            // FFᵀ = U Λ Uᵀ and v_i = Fᵀ u_i / σ_i give v_iᵀ Fᵀ y = σ_i u_iᵀ y.
            let values = eigen_apply(outer_gram(f, n, d), n, &mut y, width)?;
            for (row, &lam) in y.chunks_exact_mut(width.max(1)).zip(&values) {
                let sigma = libm::sqrt(lam.max(0.0));
                row.iter_mut().for_each(|v| *v *= sigma);
            }
            (values, y)
        };
        let eigenvalues = eigenvalues.into_iter().map(|v| v.max(0.0)).collect();
        Ok(Self { n, d, eigenvalues, projections, targets_sq, width })
    }

    fn problem(&self, t: usize) -> EvidenceProblem<'_> {
        let z = self.projections.iter().skip(t).step_by(self.width).copied().collect();
        EvidenceProblem { n: self.n as f64, d: self.d, eigenvalues: &self.eigenvalues, z, yy: self.targets_sq[t] }
    }
}

struct EvidenceProblem<'a> {
    n: f64,
    d: usize,
    eigenvalues: &'a [f64],
    z: Vec<f64>,
    yy: f64,
}

#[derive(Debug, Clone, Copy)]
struct Evaluation {
    evidence: f64,
    gamma: f64,
    mtm: f64,
    residual: f64,
}

impl EvidenceProblem<'_> {
    fn evaluate(&self, alpha: f64, beta: f64) -> Evaluation {
        let zero_dims = self.d - self.eigenvalues.len();
        let mut log_det = zero_dims as f64 * libm::log(alpha);
        let (mut gamma, mut mtm, mut fit) = (0.0, 0.0, 0.0);
        for (&lam, &z) in self.eigenvalues.iter().zip(&self.z) {
            let denom = alpha + beta * lam;
            log_det += libm::log(denom);
            gamma += beta * lam / denom;
            let m = beta * z / denom;
            mtm += m * m;
            fit += m * (lam * m - 2.0 * z);
        }
        let residual = (self.yy + fit).max(0.0);
        let n = self.n;
        let evidence = n / 2.0 * libm::log(beta) + self.d as f64 / 2.0 * libm::log(alpha)
            - n / 2.0 * libm::log(2.0 * core::f64::consts::PI)
            - beta / 2.0 * residual
            - alpha / 2.0 * mtm
            - log_det / 2.0;
        Evaluation { evidence, gamma, mtm, residual }
    }

    /// MacKay's fixed-point updates `α ← γ / mᵀm`, `β ← (n − γ) / ‖F m − y‖²`
    /// from `α = β = 1`.
    fn maximize(&self) -> EvidenceFit {
        let (mut alpha, mut beta) = (1.0, 1.0);
        let mut current = self.evaluate(alpha, beta);
        let mut beta_clamped = false;
        let mut iterations = 0;
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let next_alpha = clamp_precision(current.gamma / current.mtm);
            let raw_beta = (self.n - current.gamma) / current.residual;
            let next_beta = clamp_precision(raw_beta);
            beta_clamped = raw_beta.is_nan() || raw_beta >= PRECISION_MAX;
            let next = self.evaluate(next_alpha, next_beta);
            let delta = libm::fabs(next.evidence - current.evidence) / self.n;
            alpha = next_alpha;
            beta = next_beta;
            current = next;
            if delta < TOLERANCE {
                break;
            }
        }
        EvidenceFit { alpha, beta, evidence: current.evidence / self.n, iterations, beta_clamped }
    }
}

/// Maps NaN (`0/0`) and out-of-range ratios into `[PRECISION_MIN, PRECISION_MAX]`.
fn clamp_precision(v: f64) -> f64 {
    if v.is_nan() || v >= PRECISION_MAX {
        PRECISION_MAX
    } else if v <= PRECISION_MIN {
        PRECISION_MIN
    } else {
        v
    }
}
