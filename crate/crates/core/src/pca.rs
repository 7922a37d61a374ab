//! Two-component PCA projection of an embedding matrix, used for
//! visualising how source and target datasets sit in embedding space.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{gram, SymmetricEigen};
use crate::matrix::EmbeddingMatrix;

/// Components whose variance is below this fraction of the leading variance
/// are treated as absent.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Row `i` holds the coordinates of input row `i` on the two components.
    pub coords: Vec<[f64; 2]>,
    /// Unit loadings, or all zeros for an absent component.
    pub components: [Vec<f64>; 2],
    /// Variance along each component (`n − 1` denominator).
    pub variance: [f64; 2],
    pub mean: Vec<f64>,
}

/// Projects the mean-centred rows of `m` onto its top two principal axes.
/// Each axis is signed so that its largest-magnitude loading is positive.
pub fn project_2d(m: &EmbeddingMatrix) -> Result<Projection> {
    let (n, d) = (m.rows(), m.cols());
    if n < 3 {
        return Err(Error::TooFewExamples { needed: 3, found: n });
    }
    let mean = m.mean_pool();
    let mut x = m.to_f64();
    for row in x.chunks_exact_mut(d) {
        for (v, mu) in row.iter_mut().zip(&mean) {
            *v -= mu;
        }
    }
    let mut cov = gram(&x, n, d);
    let scale = 1.0 / (n - 1) as f64;
    cov.iter_mut().for_each(|v| *v *= scale);
    let eig = SymmetricEigen::new(&cov, d)?;
    let lead = eig.values[0];
    if lead.is_nan() || lead <= 0.0 {
        return Err(Error::Degenerate("all rows are identical"));
    }

    let mut components = [vec![0.0; d], vec![0.0; d]];
    let mut variance = [0.0; 2];
    for c in 0..2.min(d) {
        if eig.values[c] <= RANK_TOLERANCE * lead {
            continue;
        }
        let mut axis = eig.vector(c).to_vec();
        let pivot = axis.iter().enumerate().fold(0, |best, (i, v)| if v.abs() > axis[best].abs() { i } else { best });
        if axis[pivot] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        components[c] = axis;
        variance[c] = eig.values[c];
    }

    let coords = x
        .chunks_exact(d)
        .map(|row| {
            let mut p = [0.0; 2];
            for (c, slot) in p.iter_mut().enumerate() {
                if variance[c] > 0.0 {
                    *slot = crate::linalg::dot(row, &components[c]);
                }
            }
            p
        })
        .collect();
    Ok(Projection { coords, components, variance, mean })
}
