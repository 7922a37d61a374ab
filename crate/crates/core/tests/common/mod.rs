//! Independent reference implementations used as test oracles. Everything
//! here is deliberately naive: dense Cholesky, cyclic Jacobi, explicit sums.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut StdRng, len: usize) -> Vec<f32> {
    (0..len).map(|_| rng.sample::<f32, _>(StandardNormal)).collect()
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &[f64], d: usize) -> Vec<f64> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                assert!(s > 0.0, "matrix is not positive definite");
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    l
}

pub fn cholesky_solve(l: &[f64], d: usize, b: &[f64]) -> Vec<f64> {
    let mut z = b.to_vec();
    for i in 0..d {
        for k in 0..i {
            z[i] -= l[i * d + k] * z[k];
        }
        z[i] /= l[i * d + i];
    }
    for i in (0..d).rev() {
        for k in i + 1..d {
            z[i] -= l[k * d + i] * z[k];
        }
        z[i] /= l[i * d + i];
    }
    z
}

/// Log evidence `L(α, β)` of the Bayesian linear model, evaluated directly.
pub fn log_evidence(f: &[f64], n: usize, d: usize, y: &[f64], alpha: f64, beta: f64) -> f64 {
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let s: f64 = (0..n).map(|r| f[r * d + i] * f[r * d + j]).sum();
            a[i * d + j] = beta * s + if i == j { alpha } else { 0.0 };
        }
    }
    let fty: Vec<f64> = (0..d).map(|i| (0..n).map(|r| f[r * d + i] * y[r]).sum()).collect();
    let l = cholesky(&a, d);
    let m: Vec<f64> = cholesky_solve(&l, d, &fty).into_iter().map(|v| beta * v).collect();
    let residual: f64 = (0..n)
        .map(|r| {
            let p: f64 = (0..d).map(|c| f[r * d + c] * m[c]).sum();
            (p - y[r]) * (p - y[r])
        })
        .sum();
    let mtm: f64 = m.iter().map(|v| v * v).sum();
    let log_det: f64 = 2.0 * (0..d).map(|i| l[i * d + i].ln()).sum::<f64>();
    let nf = n as f64;
    nf / 2.0 * beta.ln() + d as f64 / 2.0 * alpha.ln()
        - nf / 2.0 * (2.0 * std::f64::consts::PI).ln()
        - beta / 2.0 * residual
        - alpha / 2.0 * mtm
        - log_det / 2.0
}

/// Best evidence on the 31 x 31 log-grid `α, β ∈ 10^[−3, 3]`.
pub fn grid_max(f: &[f64], n: usize, d: usize, y: &[f64]) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..31 {
        for j in 0..31 {
            let (la, lb) = (-3.0 + 0.2 * i as f64, -3.0 + 0.2 * j as f64);
            let v = log_evidence(f, n, d, y, 10f64.powf(la), 10f64.powf(lb));
            if v > best.0 {
                best = (v, la, lb);
            }
        }
    }
    best
}

/// Grid search followed by pattern-search refinement in log space. The
/// refinement may leave the grid's box. Returns the maximised evidence.
pub fn refined_max(f: &[f64], n: usize, d: usize, y: &[f64]) -> f64 {
    let (mut best, mut la, mut lb) = grid_max(f, n, d, y);
    let mut step = 0.2;
    while step > 1e-7 {
        let mut moved = false;
        for (da, db) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let (ca, cb) = (la + da * step, lb + db * step);
            let v = log_evidence(f, n, d, y, 10f64.powf(ca), 10f64.powf(cb));
            if v > best {
                best = v;
                la = ca;
                lb = cb;
                moved = true;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    best
}

/// Cyclic Jacobi eigenvalues (ascending) and eigenvectors (columns of the
/// returned row-major matrix) of a symmetric matrix.
pub fn jacobi_eigen(a: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * d + j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k * d + p], a[k * d + q]);
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p * d + k], a[q * d + k]);
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let (vkp, vkq) = (v[k * d + p], v[k * d + q]);
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[i * d + i].total_cmp(&a[j * d + j]));
    let values = order.iter().map(|&i| a[i * d + i]).collect();
    let mut vectors = vec![0.0; d * d];
    for (new, &old) in order.iter().enumerate() {
        for k in 0..d {
            vectors[k * d + new] = v[k * d + old];
        }
    }
    (values, vectors)
}
