//! Embedding Space Maps: affine maps `x -> W x + b` from base-model
//! embeddings to approximations of a fine-tuned model's embeddings.
//!
//! Two trainers are provided. [`train_esm_closed_form`] solves the ridge
//! problem exactly and is the default. [`train_esm_iterative`] runs
//! mini-batch SGD with decoupled weight decay for a fixed number of epochs,
//! which is the recipe published ESMs were trained with.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{gram, matmul, MatRef, SymmetricEigen};
use crate::matrix::{check_finite, EmbeddingMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TrainMethod {
    #[default]
    ClosedForm,
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsmTrainConfig {
    pub method: TrainMethod,
    /// Ridge penalty on `W` for the closed-form trainer.
    pub ridge_lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Decoupled weight decay on `W` (never on the bias).
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for EsmTrainConfig {
    fn default() -> Self {
        Self {
            method: TrainMethod::ClosedForm,
            ridge_lambda: 0.0,
            epochs: 10,
            learning_rate: 1e-3,
            weight_decay: 1e-2,
            batch_size: 1,
            seed: 0,
        }
    }
}

impl EsmTrainConfig {
    pub fn iterative() -> Self {
        Self { method: TrainMethod::Iterative, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return bad(format!("ridge_lambda must be finite and >= 0, got {}", self.ridge_lambda));
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay must be >= 0, got {}", self.weight_decay));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        Ok(())
    }

    /// The ridge penalty whose closed-form solution is the stationary point
    /// of the iterative trainer on `n` examples.
    ///
    /// SGD minimises `(1/n) Σ‖W x + b − y‖² + (wd/2)‖W‖²`, i.e. the ridge
    /// objective `Σ‖W x + b − y‖² + λ‖W‖²` with `λ = n·wd/2`.
    pub fn equivalent_ridge_lambda(&self, n: usize) -> f64 {
        n as f64 * self.weight_decay / 2.0
    }
}

/// Training settings recorded alongside a trained map.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Hyperparameters {
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub ridge_lambda: Option<f64>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub epochs: Option<usize>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub learning_rate: Option<f64>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub weight_decay: Option<f64>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub batch_size: Option<usize>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct EsmMeta {
    pub base_model_id: String,
    pub source_task_id: String,
    pub train_method: TrainMethod,
    pub hyperparameters: Hyperparameters,
    /// Mean squared error per output element on the training pairs.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub train_mse: Option<f64>,
    /// Training MSE of the initial weights (iterative trainer only).
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub initial_mse: Option<f64>,
}

/// An affine map `x -> W x + b` with `W` of shape `d_out x d_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Esm {
    d_in: usize,
    d_out: usize,
    weight: Vec<f32>,
    bias: Vec<f32>,
    pub meta: EsmMeta,
}

impl Esm {
    pub fn new(d_in: usize, d_out: usize, weight: Vec<f32>, bias: Vec<f32>, meta: EsmMeta) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::EmptyMatrix { rows: d_out, cols: d_in });
        }
        if d_in.checked_mul(d_out) != Some(weight.len()) {
            return Err(Error::ShapeMismatch { rows: d_out, cols: d_in, found: weight.len() });
        }
        if bias.len() != d_out {
            return Err(Error::DimensionMismatch { expected: d_out, found: bias.len() });
        }
        check_finite(&weight, d_in)?;
        check_finite(&bias, d_out)?;
        Ok(Self { d_in, d_out, weight, bias, meta })
    }

    pub fn identity(d: usize) -> Self {
        let mut weight = vec![0.0; d * d];
        for i in 0..d {
            weight[i * d + i] = 1.0;
        }
        Self { d_in: d, d_out: d, weight, bias: vec![0.0; d], meta: EsmMeta::default() }
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// Row-major `d_out x d_in`.
    pub fn weight(&self) -> &[f32] {
        &self.weight
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn parameter_count(&self) -> usize {
        self.d_out * self.d_in + self.d_out
    }

    /// `W x + b` for a row-major `rows x d_in` block already widened to f64.
    /// Accumulates in f64 and rounds each output to f32.
    pub fn apply_f64(&self, x: &[f64], rows: usize) -> Result<Vec<f32>> {
        if x.len() != rows * self.d_in {
            return Err(Error::DimensionMismatch { expected: rows * self.d_in, found: x.len() });
        }
        let w: Vec<f64> = self.weight.iter().map(|&v| f64::from(v)).collect();
        let prod = matmul(MatRef::row_major(x, rows, self.d_in), MatRef::row_major(&w, self.d_out, self.d_in).t());
        let mut out = Vec::with_capacity(prod.len());
        for row in prod.chunks_exact(self.d_out) {
            out.extend(row.iter().zip(&self.bias).map(|(&v, &b)| (v + f64::from(b)) as f32));
        }
        check_finite(&out, self.d_out)?;
        Ok(out)
    }
}

/// Transforms every row of `x` with `esm`.
pub fn apply_esm(esm: &Esm, x: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    if x.cols() != esm.d_in {
        return Err(Error::DimensionMismatch { expected: esm.d_in, found: x.cols() });
    }
    let out = esm.apply_f64(&x.to_f64(), x.rows())?;
    let model_id = if esm.meta.source_task_id.is_empty() { x.model_id() } else { &esm.meta.source_task_id };
    EmbeddingMatrix::new(x.rows(), esm.d_out, out, model_id)
}

pub fn train_esm(base: &EmbeddingMatrix, tuned: &EmbeddingMatrix, cfg: &EsmTrainConfig) -> Result<Esm> {
    match cfg.method {
        TrainMethod::ClosedForm => train_esm_closed_form(base, tuned, cfg.ridge_lambda),
        TrainMethod::Iterative => train_esm_iterative(base, tuned, cfg),
    }
}

fn check_pair(base: &EmbeddingMatrix, tuned: &EmbeddingMatrix) -> Result<()> {
    if base.rows() != tuned.rows() {
        return Err(Error::RowCountMismatch { left: base.rows(), right: tuned.rows() });
    }
    if base.rows() < base.cols() + 1 {
        log::warn!("training an ESM on {} pairs with {} input dimensions; the fit is underdetermined", base.rows(), base.cols());
    }
    Ok(())
}

fn column_means(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut mean = vec![0.0; cols];
    for row in x.chunks_exact(cols) {
        mean.iter_mut().zip(row).for_each(|(m, &v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= rows as f64);
    mean
}

/// Mean squared error per element of `esm` on the training pairs.
fn training_mse(esm: &Esm, x: &[f64], y: &[f64], rows: usize) -> Result<f64> {
    let pred = esm.apply_f64(x, rows)?;
    let sse: f64 = pred.iter().zip(y).map(|(&p, &t)| (f64::from(p) - t) * (f64::from(p) - t)).sum();
    Ok(sse / (rows * esm.d_out) as f64)
}

/// Minimises `Σ‖W x_i + b − y_i‖² + λ‖W‖²_F` exactly.
///
/// The bias is left unpenalised by centring both sides, which reduces the
/// problem to `(XcᵀXc + λI) Wᵀ = XcᵀYc` and `b = ȳ − W x̄`. The normal
/// matrix is inverted through its eigen-decomposition, so rank-deficient
/// inputs with `λ = 0` yield the minimum-norm solution.
pub fn train_esm_closed_form(base: &EmbeddingMatrix, tuned: &EmbeddingMatrix, lambda: f64) -> Result<Esm> {
    check_pair(base, tuned)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("ridge lambda must be finite and >= 0, got {lambda}")));
    }
    let (n, d_in, d_out) = (base.rows(), base.cols(), tuned.cols());
    let x = base.to_f64();
    let y = tuned.to_f64();
    let x_mean = column_means(&x, n, d_in);
    let y_mean = column_means(&y, n, d_out);
    let xc: Vec<f64> = x.chunks_exact(d_in).flat_map(|r| r.iter().zip(&x_mean).map(|(v, m)| v - m)).collect();
    let yc: Vec<f64> = y.chunks_exact(d_out).flat_map(|r| r.iter().zip(&y_mean).map(|(v, m)| v - m)).collect();

    let sxx = gram(&xc, n, d_in);
    let sxy = matmul(MatRef::row_major(&xc, n, d_in).t(), MatRef::row_major(&yc, n, d_out));
    let eig = SymmetricEigen::new(&sxx, d_in)?;
    let vt = MatRef::row_major(&eig.vectors, d_in, d_in);
    let mut proj = matmul(vt, MatRef::row_major(&sxy, d_in, d_out));
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = top * (n.max(d_in) as f64) * f64::EPSILON;
    for (row, &ev) in proj.chunks_exact_mut(d_out).zip(&eig.values) {
        let denom = ev + lambda;
        let scale = if denom > cutoff && denom > 0.0 { 1.0 / denom } else { 0.0 };
        row.iter_mut().for_each(|v| *v *= scale);
    }
    // Wᵀ = V · proj  (d_in x d_out)
    let wt = matmul(vt.t(), MatRef::row_major(&proj, d_in, d_out));
    let mut weight = vec![0.0f32; d_out * d_in];
    for i in 0..d_in {
        for o in 0..d_out {
            weight[o * d_in + i] = wt[i * d_out + o] as f32;
        }
    }
    let bias: Vec<f32> = (0..d_out)
        .map(|o| {
            let wx: f64 = weight[o * d_in..(o + 1) * d_in].iter().zip(&x_mean).map(|(&w, &m)| f64::from(w) * m).sum();
            (y_mean[o] - wx) as f32
        })
        .collect();

    let meta = EsmMeta {
        base_model_id: base.model_id().into(),
        source_task_id: tuned.model_id().into(),
        train_method: TrainMethod::ClosedForm,
        hyperparameters: Hyperparameters { ridge_lambda: Some(lambda), ..Default::default() },
        train_mse: None,
        initial_mse: None,
    };
    let mut esm = Esm::new(d_in, d_out, weight, bias, meta)?;
    esm.meta.train_mse = Some(training_mse(&esm, &x, &y, n)?);
    Ok(esm)
}

/// Mini-batch SGD on the mean squared error with decoupled weight decay.
///
/// Per step, with `B` the batch size and `e_i = W x_i + b − y_i`:
/// `W <- (1 − lr·wd) W − lr·(2/B) Σ e_i x_iᵀ` and `b <- b − lr·(2/B) Σ e_i`.
/// Weights start at the identity when `d_in == d_out`, else at zero. The
/// example order is reshuffled every epoch from a ChaCha stream seeded with
/// `cfg.seed`, so runs are reproducible.
pub fn train_esm_iterative(base: &EmbeddingMatrix, tuned: &EmbeddingMatrix, cfg: &EsmTrainConfig) -> Result<Esm> {
    check_pair(base, tuned)?;
    cfg.validate()?;
    let (n, d_in, d_out) = (base.rows(), base.cols(), tuned.cols());
    let x = base.to_f64();
    let y = tuned.to_f64();

    let mut w = vec![0.0f64; d_out * d_in];
    if d_in == d_out {
        for i in 0..d_in {
            w[i * d_in + i] = 1.0;
        }
    }
    let mut b = vec![0.0f64; d_out];
    let mse = |w: &[f64], b: &[f64]| -> f64 {
        let prod = matmul(MatRef::row_major(&x, n, d_in), MatRef::row_major(w, d_out, d_in).t());
        let sse: f64 = prod
            .chunks_exact(d_out)
            .zip(y.chunks_exact(d_out))
            .map(|(p, t)| p.iter().zip(b).zip(t).map(|((&p, &b), &t)| (p + b - t) * (p + b - t)).sum::<f64>())
            .sum();
        sse / (n * d_out) as f64
    };
    let initial_mse = mse(&w, &b);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
    let mut errors = vec![0.0f64; cfg.batch_size * d_out];
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let step = 2.0 * cfg.learning_rate / batch.len() as f64;
            for (slot, &i) in batch.iter().enumerate() {
                let xi = &x[i * d_in..(i + 1) * d_in];
                let e = &mut errors[slot * d_out..(slot + 1) * d_out];
                for o in 0..d_out {
                    e[o] = crate::linalg::dot(&w[o * d_in..(o + 1) * d_in], xi) + b[o] - y[i * d_out + o];
                }
            }
            for o in 0..d_out {
                let row = &mut w[o * d_in..(o + 1) * d_in];
                row.iter_mut().for_each(|v| *v *= decay);
                for (slot, &i) in batch.iter().enumerate() {
                    let g = step * errors[slot * d_out + o];
                    let xi = &x[i * d_in..(i + 1) * d_in];
                    row.iter_mut().zip(xi).for_each(|(v, &xv)| *v -= g * xv);
                    b[o] -= g;
                }
            }
        }
        let epoch_mse = mse(&w, &b);
        if !epoch_mse.is_finite() || w.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        log::debug!("esm epoch {epoch}: mse {epoch_mse:.6e}");
    }

    let weight: Vec<f32> = w.iter().map(|&v| v as f32).collect();
    let bias: Vec<f32> = b.iter().map(|&v| v as f32).collect();
    if weight.iter().chain(&bias).any(|v| !v.is_finite()) {
        return Err(Error::Diverged { epoch: cfg.epochs });
    }
    let meta = EsmMeta {
        base_model_id: base.model_id().into(),
        source_task_id: tuned.model_id().into(),
        train_method: TrainMethod::Iterative,
        hyperparameters: Hyperparameters {
            ridge_lambda: None,
            epochs: Some(cfg.epochs),
            learning_rate: Some(cfg.learning_rate),
            weight_decay: Some(cfg.weight_decay),
            batch_size: Some(cfg.batch_size),
            seed: Some(cfg.seed),
        },
        train_mse: None,
        initial_mse: Some(initial_mse),
    };
    let mut esm = Esm::new(d_in, d_out, weight, bias, meta)?;
    esm.meta.train_mse = Some(training_mse(&esm, &x, &y, n)?);
    Ok(esm)
}
