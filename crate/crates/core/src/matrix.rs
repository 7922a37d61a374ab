use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `rows x cols` row-major `f32` embeddings produced by one model over one
/// dataset split. Row `i` is the embedding of example `i`.
///
/// Values are always finite and both dimensions are at least one; the
/// constructor enforces this, so a value of this type is always valid.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
    model_id: String,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>, model_id: impl Into<String>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::ShapeMismatch { rows, cols, found: data.len() });
        }
        check_finite(&data, cols)?;
        Ok(Self { rows, cols, data, model_id: model_id.into() })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R], model_id: impl Into<String>) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::ShapeMismatch { rows: i + 1, cols, found: data.len() + row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data, model_id)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn set_model_id(&mut self, model_id: impl Into<String>) {
        self.model_id = model_id.into();
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    /// Row-major copy widened to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }

    /// Column means: the dataset representation used by TextEmb.
    pub fn mean_pool(&self) -> Vec<f64> {
        let mut mean = alloc::vec![0.0f64; self.cols];
        for row in self.iter_rows() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += f64::from(v);
            }
        }
        let n = self.rows as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

pub(crate) fn check_finite(data: &[f32], cols: usize) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(pos) => Err(Error::NonFinite { row: pos / cols.max(1), col: pos % cols.max(1) }),
        None => Ok(()),
    }
}

/// Mean of the rows of `m`.
pub fn mean_pool(m: &EmbeddingMatrix) -> Vec<f64> {
    m.mean_pool()
}
