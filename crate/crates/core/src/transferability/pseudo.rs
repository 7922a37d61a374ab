//! Scorers over a source model's pseudo-labels on the target inputs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::labels::{LabelData, PseudoLabelMatrix};

use super::{Method, Score};

fn class_ids<'a>(pseudo: &PseudoLabelMatrix, labels: &'a LabelData) -> Result<(&'a [u32], usize)> {
    match labels {
        LabelData::Regression { .. } => Err(Error::UndefinedForRegression),
        LabelData::Classification { ids, num_classes } => {
            if ids.len() != pseudo.rows() {
                return Err(Error::RowCountMismatch { left: pseudo.rows(), right: ids.len() });
            }
            Ok((ids, *num_classes as usize))
        }
    }
}

/// Log expected empirical prediction.
///
/// With the empirical joint `P(y, z) = 1/n Σ_i θ_i(z) [y_i = y]` and
/// `P(y | z) = P(y, z) / P(z)`, the score is
/// `1/n Σ_i ln Σ_z P(y_i | z) θ_i(z)`. Source classes `z` that receive no
/// probability mass are skipped.
pub fn leep(pseudo: &PseudoLabelMatrix, labels: &LabelData) -> Result<Score> {
    let (ids, k) = class_ids(pseudo, labels)?;
    let (n, z) = (pseudo.rows(), pseudo.classes());
    let rows: Vec<Vec<f64>> = (0..n).map(|i| pseudo.normalized_row(i)).collect();

    let mut joint = vec![0.0f64; k * z];
    for (row, &y) in rows.iter().zip(ids) {
        let target = &mut joint[y as usize * z..(y as usize + 1) * z];
        target.iter_mut().zip(row).for_each(|(j, &p)| *j += p);
    }
    joint.iter_mut().for_each(|j| *j /= n as f64);
    let marginal: Vec<f64> = (0..z).map(|c| (0..k).map(|y| joint[y * z + c]).sum()).collect();

    let mut total = 0.0;
    for (row, &y) in rows.iter().zip(ids) {
        let expected: f64 = (0..z).filter(|&c| marginal[c] > 0.0).map(|c| joint[y as usize * z + c] / marginal[c] * row[c]).sum();
        total += libm::log(expected);
    }
    Score::new(Method::Leep, (total / n as f64).min(0.0))
}

/// Negative conditional entropy `−H(Y | Z)` of the target labels given the
/// hard pseudo-labels `z_i = argmax θ_i` (ties go to the lowest index).
pub fn nce(pseudo: &PseudoLabelMatrix, labels: &LabelData) -> Result<Score> {
    let (ids, k) = class_ids(pseudo, labels)?;
    let (n, z) = (pseudo.rows(), pseudo.classes());
    let mut counts = vec![0usize; z * k];
    let mut per_z = vec![0usize; z];
    for (i, &y) in ids.iter().enumerate() {
        let row = pseudo.row(i);
        let hard = row.iter().enumerate().fold(0, |best, (c, &p)| if p > row[best] { c } else { best });
        counts[hard * k + y as usize] += 1;
        per_z[hard] += 1;
    }
    let mut acc = 0.0;
    for c in 0..z {
        for y in 0..k {
            let joint = counts[c * k + y];
            if joint > 0 {
                acc += joint as f64 * libm::log(joint as f64 / per_z[c] as f64);
            }
        }
    }
    Score::new(Method::Nce, (acc / n as f64).min(0.0))
}
