#![allow(dead_code)]

use std::path::Path;

use esm_select::store;
use esm_select_core::{EmbeddingMatrix, Esm, EsmMeta, LabelData, PseudoLabelMatrix, TokenSet, TrainMethod};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn normal_vec(r: &mut StdRng, len: usize) -> Vec<f32> {
    (0..len).map(|_| r.sample::<f32, _>(StandardNormal)).collect()
}

/// Arbitrary finite f32 bit patterns, including subnormals and signed zeros.
fn finite_bits(r: &mut StdRng, len: usize) -> Vec<f32> {
    (0..len)
        .map(|_| loop {
            let v = f32::from_bits(r.random());
            if v.is_finite() {
                break v;
            }
        })
        .collect()
}

fn tag(r: &mut StdRng, i: usize) -> String {
    match i % 3 {
        0 => String::new(),
        1 => format!("model-{}", r.random::<u16>()),
        _ => "ünïcode/\"quoted\"\\name".into(),
    }
}

/// Instance `i` of each format; every tenth instance has a large `n`.
pub struct Instances {
    pub matrix: EmbeddingMatrix,
    pub labels: LabelData,
    pub pseudo: PseudoLabelMatrix,
    pub tokens: TokenSet,
    pub esm: Esm,
}

pub fn instance(i: usize) -> Instances {
    let mut r = rng(1000 + i as u64);
    let large = i % 10 == 9;
    let n = if large { r.random_range(20_000..50_000) } else { r.random_range(1..40) };
    let d = r.random_range(1..12);
    let matrix = EmbeddingMatrix::new(n, d, finite_bits(&mut r, n * d), tag(&mut r, i)).unwrap();

    let labels = if i.is_multiple_of(2) {
        let k = r.random_range(2..7u32);
        LabelData::classification((0..n).map(|_| r.random_range(0..k)).collect(), k).unwrap()
    } else {
        let m = r.random_range(1..4);
        LabelData::regression(n, m, normal_vec(&mut r, n * m)).unwrap()
    };

    let z = r.random_range(2..6);
    let mut probs = Vec::with_capacity(n * z);
    for _ in 0..n {
        let raw: Vec<f32> = (0..z).map(|_| r.random::<f32>() + 1e-3).collect();
        let sum: f32 = raw.iter().sum();
        probs.extend(raw.iter().map(|v| v / sum));
    }
    let pseudo = PseudoLabelMatrix::new(n, z, probs, tag(&mut r, i + 1)).unwrap();

    let count = if large { 30_000 } else { r.random_range(0..50) };
    let tokens = TokenSet::from_unsorted((0..count).map(|_| r.random()).collect(), tag(&mut r, i + 2));

    let (d_in, d_out) = (r.random_range(1..10), r.random_range(1..10));
    let meta = if i.is_multiple_of(3) {
        EsmMeta::default()
    } else {
        EsmMeta {
            base_model_id: tag(&mut r, i),
            source_task_id: format!("task-{i}"),
            train_method: TrainMethod::Iterative,
            train_mse: Some(r.random()),
            ..EsmMeta::default()
        }
    };
    let esm = Esm::new(d_in, d_out, finite_bits(&mut r, d_in * d_out), finite_bits(&mut r, d_out), meta).unwrap();
    Instances { matrix, labels, pseudo, tokens, esm }
}

/// `read(write(x)) == x` and `write(read(file)) == file` for one value.
fn check<T: PartialEq + std::fmt::Debug>(
    dir: &Path,
    name: &str,
    value: &T,
    write: fn(&T, &Path) -> store::Result<()>,
    read: fn(&Path) -> store::Result<T>,
) -> Result<(), String> {
    let (a, b) = (dir.join(format!("{name}.a")), dir.join(format!("{name}.b")));
    write(value, &a).map_err(|e| format!("{name}: write failed: {e}"))?;
    let back = read(&a).map_err(|e| format!("{name}: read failed: {e}"))?;
    if &back != value {
        return Err(format!("{name}: value changed on round trip"));
    }
    write(&back, &b).map_err(|e| format!("{name}: rewrite failed: {e}"))?;
    if std::fs::read(&a).unwrap() != std::fs::read(&b).unwrap() {
        return Err(format!("{name}: bytes changed on rewrite"));
    }
    Ok(())
}

/// Runs every format through both round trips on `count` instances.
/// Bitwise float equality is checked through the bit patterns.
pub fn format_round_trips(count: usize) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for i in 0..count {
        let inst = instance(i);
        check(dir.path(), "eseb", &BitEq(inst.matrix), |m, p| store::write_matrix(&m.0, p), |p| store::read_matrix(p).map(BitEq))
            .map_err(|e| format!("instance {i}: {e}"))?;
        check(dir.path(), "eslb", &BitEq(inst.labels), |m, p| store::write_labels(&m.0, p), |p| store::read_labels(p).map(BitEq))
            .map_err(|e| format!("instance {i}: {e}"))?;
        check(dir.path(), "espl", &BitEq(inst.pseudo), |m, p| store::write_pseudo(&m.0, p), |p| store::read_pseudo(p).map(BitEq))
            .map_err(|e| format!("instance {i}: {e}"))?;
        check(dir.path(), "ests", &inst.tokens, store::write_tokenset, store::read_tokenset).map_err(|e| format!("instance {i}: {e}"))?;
        check(dir.path(), "esmw", &BitEq(inst.esm), |m, p| store::write_esm(&m.0, p), |p| store::read_esm(p).map(BitEq))
            .map_err(|e| format!("instance {i}: {e}"))?;
    }
    Ok(())
}

/// Equality on the Debug rendering of values with their floats replaced by
/// bit patterns, so `-0.0 != 0.0` and NaN-free payloads compare exactly.
#[derive(Debug)]
pub struct BitEq<T>(pub T);

pub trait FloatBits {
    fn bits(&self) -> (Vec<u32>, String);
}

impl FloatBits for EmbeddingMatrix {
    fn bits(&self) -> (Vec<u32>, String) {
        (self.data().iter().map(|v| v.to_bits()).collect(), format!("{}x{} {}", self.rows(), self.cols(), self.model_id()))
    }
}

impl FloatBits for PseudoLabelMatrix {
    fn bits(&self) -> (Vec<u32>, String) {
        (self.data().iter().map(|v| v.to_bits()).collect(), format!("{}x{} {}", self.rows(), self.classes(), self.model_id()))
    }
}

impl FloatBits for LabelData {
    fn bits(&self) -> (Vec<u32>, String) {
        match self {
            LabelData::Classification { ids, num_classes } => (ids.clone(), format!("cls {num_classes}")),
            LabelData::Regression { rows, cols, values } => (values.iter().map(|v| v.to_bits()).collect(), format!("reg {rows}x{cols}")),
        }
    }
}

impl FloatBits for Esm {
    fn bits(&self) -> (Vec<u32>, String) {
        let bits = self.weight().iter().chain(self.bias()).map(|v| v.to_bits()).collect();
        (bits, format!("{}x{} {:?}", self.d_out(), self.d_in(), self.meta))
    }
}

impl<T: FloatBits> PartialEq for BitEq<T> {
    fn eq(&self, other: &Self) -> bool {
        self.0.bits() == other.0.bits()
    }
}
