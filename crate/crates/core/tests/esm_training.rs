mod common;

use common::{normal_vec, rng};
use esm_select_core::{apply_esm, train_esm_closed_form, train_esm_iterative, EmbeddingMatrix, Esm, EsmMeta, EsmTrainConfig};
use rand::rngs::StdRng;

struct LinearTask {
    base: EmbeddingMatrix,
    tuned: EmbeddingMatrix,
    weight: Vec<f32>,
    bias: Vec<f32>,
}

/// `tuned = W·base + b` with `W = I + 0.1·N`, evaluated in f64 and rounded.
fn linear_task(r: &mut StdRng, n: usize, d: usize, bias_scale: f32) -> LinearTask {
    let base = EmbeddingMatrix::new(n, d, normal_vec(r, n * d), "base").unwrap();
    let mut weight: Vec<f32> = normal_vec(r, d * d).iter().map(|v| 0.1 * v).collect();
    for i in 0..d {
        weight[i * d + i] += 1.0;
    }
    let bias: Vec<f32> = normal_vec(r, d).iter().map(|v| bias_scale * v).collect();
    let mut tuned = Vec::with_capacity(n * d);
    for row in base.iter_rows() {
        for o in 0..d {
            let v: f64 = (0..d).map(|i| f64::from(weight[o * d + i]) * f64::from(row[i])).sum::<f64>() + f64::from(bias[o]);
            tuned.push(v as f32);
        }
    }
    let tuned = EmbeddingMatrix::new(n, d, tuned, "tuned").unwrap();
    LinearTask { base, tuned, weight, bias }
}

fn frobenius(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn closed_form_recovers_linear_map() {
    let task = linear_task(&mut rng(7), 200, 16, 1.0);
    let esm = train_esm_closed_form(&task.base, &task.tuned, 0.0).unwrap();
    assert!(frobenius(esm.weight(), &task.weight) < 1e-6);
    assert!(frobenius(esm.bias(), &task.bias) < 1e-6);
    assert!(esm.meta.train_mse.unwrap() < 1e-12);
}

#[test]
fn closed_form_recovers_small_rectangular_map() {
    let mut r = rng(3);
    let base = EmbeddingMatrix::new(50, 3, normal_vec(&mut r, 150), "base").unwrap();
    let w = [0.5f32, -1.0, 2.0, 1.5, 0.25, -0.75];
    let b = [0.3f32, -0.2];
    let tuned: Vec<f32> = base
        .iter_rows()
        .flat_map(|x| (0..2).map(move |o| (0..3).map(|i| f64::from(w[o * 3 + i]) * f64::from(x[i])).sum::<f64>() as f32 + b[o]))
        .collect();
    let tuned = EmbeddingMatrix::new(50, 2, tuned, "tuned").unwrap();
    let esm = train_esm_closed_form(&base, &tuned, 0.0).unwrap();
    assert!(frobenius(esm.weight(), &w) < 1e-6);
    assert!(frobenius(esm.bias(), &b) < 1e-6);
}

#[test]
fn iterative_reaches_ridge_optimum_neighbourhood() {
    let task = linear_task(&mut rng(11), 200, 16, 0.1);
    let cfg = EsmTrainConfig::iterative();
    let iterative = train_esm_iterative(&task.base, &task.tuned, &cfg).unwrap();
    let ridge = train_esm_closed_form(&task.base, &task.tuned, cfg.equivalent_ridge_lambda(200)).unwrap();
    let (it, cf) = (iterative.meta.train_mse.unwrap(), ridge.meta.train_mse.unwrap());
    assert!(it <= 10.0 * cf, "iterative mse {it:e} vs ridge mse {cf:e}");
    assert!(it < iterative.meta.initial_mse.unwrap());
}

/// `n·d_out·MSE + λ‖W‖²` with `λ` the ridge equivalent of the weight decay.
fn regularized_objective(esm: &Esm, base: &EmbeddingMatrix, tuned: &EmbeddingMatrix, lambda: f64) -> f64 {
    let pred = apply_esm(esm, base).unwrap();
    let sse: f64 = pred.data().iter().zip(tuned.data()).map(|(&p, &t)| (f64::from(p) - f64::from(t)).powi(2)).sum();
    sse + lambda * esm.weight().iter().map(|&w| f64::from(w).powi(2)).sum::<f64>()
}

#[test]
fn ridge_optimum_is_never_beaten_by_iterative() {
    for seed in 0..5 {
        let task = linear_task(&mut rng(seed), 120, 6, 0.5);
        let cfg = EsmTrainConfig { seed, ..EsmTrainConfig::iterative() };
        let lambda = cfg.equivalent_ridge_lambda(120);
        let iterative = train_esm_iterative(&task.base, &task.tuned, &cfg).unwrap();
        let ridge = train_esm_closed_form(&task.base, &task.tuned, lambda).unwrap();
        let (it, cf) = (
            regularized_objective(&iterative, &task.base, &task.tuned, lambda),
            regularized_objective(&ridge, &task.base, &task.tuned, lambda),
        );
        assert!(cf <= it + 1e-6 * it.max(1.0), "seed {seed}: ridge {cf} > iterative {it}");
    }
}

#[test]
fn identical_pair_descends_regularized_objective() {
    let mut r = rng(21);
    let base = EmbeddingMatrix::new(100, 8, normal_vec(&mut r, 800), "base").unwrap();
    let cfg = EsmTrainConfig::iterative();
    let lambda = cfg.equivalent_ridge_lambda(100);
    let esm = train_esm_iterative(&base, &base, &cfg).unwrap();
    let start = regularized_objective(&Esm::identity(8), &base, &base, lambda);
    assert!(regularized_objective(&esm, &base, &base, lambda) <= start);
}

#[test]
fn apply_matches_naive_matvec() {
    let mut r = rng(5);
    let (n, d_in, d_out) = (17, 9, 4);
    let x = EmbeddingMatrix::new(n, d_in, normal_vec(&mut r, n * d_in), "x").unwrap();
    let esm = Esm::new(d_in, d_out, normal_vec(&mut r, d_in * d_out), normal_vec(&mut r, d_out), EsmMeta::default()).unwrap();
    let out = apply_esm(&esm, &x).unwrap();
    assert_eq!((out.rows(), out.cols()), (n, d_out));
    for i in 0..n {
        for o in 0..d_out {
            let mut acc = f64::from(esm.bias()[o]);
            for j in 0..d_in {
                acc += f64::from(esm.weight()[o * d_in + j]) * f64::from(x.row(i)[j]);
            }
            assert!((f64::from(out.row(i)[o]) - acc).abs() < 1e-6 * acc.abs().max(1.0));
        }
    }
}

#[test]
fn apply_is_affine() {
    let mut r = rng(8);
    let (n, d) = (10, 6);
    let esm = Esm::new(d, d, normal_vec(&mut r, d * d), normal_vec(&mut r, d), EsmMeta::default()).unwrap();
    let x = EmbeddingMatrix::new(n, d, normal_vec(&mut r, n * d), "x").unwrap();
    let z = EmbeddingMatrix::new(n, d, normal_vec(&mut r, n * d), "z").unwrap();
    let sum: Vec<f32> = x.data().iter().zip(z.data()).map(|(a, b)| a + b).collect();
    let xz = EmbeddingMatrix::new(n, d, sum, "xz").unwrap();
    let (ax, az, axz) = (apply_esm(&esm, &x).unwrap(), apply_esm(&esm, &z).unwrap(), apply_esm(&esm, &xz).unwrap());
    for i in 0..n {
        for o in 0..d {
            let gap = axz.row(i)[o] - ax.row(i)[o] - az.row(i)[o] + esm.bias()[o];
            assert!(gap.abs() < 1e-5, "({i},{o}) gap {gap}");
        }
    }
}
