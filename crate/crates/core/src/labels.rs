use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::check_finite;

/// Row sums of a pseudo-label matrix must lie within this distance of one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-5;

/// Target-task labels.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelData {
    /// One class id per example, each `< num_classes`.
    Classification { ids: Vec<u32>, num_classes: u32 },
    /// `rows x cols` row-major targets.
    Regression { rows: usize, cols: usize, values: Vec<f32> },
}

impl LabelData {
    pub fn classification(ids: Vec<u32>, num_classes: u32) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidLabels(format!("need at least 2 classes, got {num_classes}")));
        }
        if ids.is_empty() {
            return Err(Error::InvalidLabels("no labels".into()));
        }
        if let Some((i, id)) = ids.iter().enumerate().find(|(_, &id)| id >= num_classes) {
            return Err(Error::InvalidLabels(format!("class id {id} at {i} is not below {num_classes}")));
        }
        Ok(Self::Classification { ids, num_classes })
    }

    /// Classification labels with `num_classes = max(id) + 1`.
    pub fn classification_from_ids(ids: Vec<u32>) -> Result<Self> {
        let k = ids.iter().copied().max().map_or(0, |m| m + 1).max(2);
        Self::classification(ids, k)
    }

    pub fn regression(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if rows.checked_mul(cols) != Some(values.len()) {
            return Err(Error::ShapeMismatch { rows, cols, found: values.len() });
        }
        check_finite(&values, cols)?;
        Ok(Self::Regression { rows, cols, values })
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Classification { ids, .. } => ids.len(),
            Self::Regression { rows, .. } => *rows,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_regression(&self) -> bool {
        matches!(self, Self::Regression { .. })
    }

    /// Scalar regression targets, one vector per target dimension:
    /// a one-vs-rest 0/1 indicator per class, or one per regression column.
    pub fn target_columns(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Classification { ids, num_classes } => {
                (0..*num_classes).map(|k| ids.iter().map(|&id| if id == k { 1.0 } else { 0.0 }).collect()).collect()
            }
            Self::Regression { rows, cols, values } => {
                (0..*cols).map(|c| (0..*rows).map(|r| f64::from(values[r * cols + c])).collect()).collect()
            }
        }
    }

    /// A per-example scalar for display: the class id, or the first regression column.
    pub fn display_value(&self, i: usize) -> String {
        match self {
            Self::Classification { ids, .. } => format!("{}", ids[i]),
            Self::Regression { cols, values, .. } => format!("{}", values[i * cols]),
        }
    }
}

/// A source model's predicted label distribution over the target inputs.
///
/// Rows are validated to sum to one within [`ROW_SUM_TOLERANCE`]. Stored
/// values are kept as given so files round-trip bit-exactly; scorers read
/// rows through [`PseudoLabelMatrix::normalized_row`].
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabelMatrix {
    rows: usize,
    classes: usize,
    probs: Vec<f32>,
    model_id: String,
}

impl PseudoLabelMatrix {
    pub fn new(rows: usize, classes: usize, probs: Vec<f32>, model_id: impl Into<String>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::EmptyMatrix { rows, cols: classes });
        }
        if classes < 2 {
            return Err(Error::InvalidLabels(format!("pseudo-label space needs at least 2 classes, got {classes}")));
        }
        if rows.checked_mul(classes) != Some(probs.len()) {
            return Err(Error::ShapeMismatch { rows, cols: classes, found: probs.len() });
        }
        check_finite(&probs, classes)?;
        for (r, row) in probs.chunks_exact(classes).enumerate() {
            if let Some(c) = row.iter().position(|&p| p < 0.0) {
                return Err(Error::InvalidLabels(format!("negative probability at ({r},{c})")));
            }
            let sum: f64 = row.iter().map(|&p| f64::from(p)).sum();
            if libm::fabs(sum - 1.0) > ROW_SUM_TOLERANCE {
                return Err(Error::RowSum { row: r, sum });
            }
        }
        Ok(Self { rows, classes, probs, model_id: model_id.into() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn data(&self) -> &[f32] {
        &self.probs
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.probs[i * self.classes..(i + 1) * self.classes]
    }

    /// Row `i` widened to `f64` and divided by its sum.
    pub fn normalized_row(&self, i: usize) -> Vec<f64> {
        let row = self.row(i);
        let sum: f64 = row.iter().map(|&p| f64::from(p)).sum();
        row.iter().map(|&p| f64::from(p) / sum).collect()
    }
}
