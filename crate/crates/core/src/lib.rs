//! Embedding space maps (ESMs) and transferability scoring for intermediate
//! task selection.
//!
//! An ESM is a single affine layer that maps base-model embeddings onto an
//! approximation of the embeddings a fine-tuned model would produce. Scoring
//! a candidate source task then only needs the base embeddings of the target
//! dataset, the source's ESM and the target labels ([`transferability::esm_logme`]).
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. All file formats, the CLI and thread pools live in the companion
//! `esm-select` crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_op_in_unsafe_fn)]

extern crate alloc;

mod error;
pub mod esm;
pub mod labels;
pub mod linalg;
pub mod matrix;
pub mod pca;
pub mod ranking;
pub mod tokens;
pub mod transferability;

pub use error::{Error, Result};
pub use esm::{apply_esm, train_esm, train_esm_closed_form, train_esm_iterative, Esm, EsmMeta, EsmTrainConfig, TrainMethod};
pub use labels::{LabelData, PseudoLabelMatrix};
pub use matrix::EmbeddingMatrix;
pub use ranking::{aggregate_report, ndcg, regret_at_k, EvalReport, EvalRow, GroundTruth, RankedSource, Ranking};
pub use tokens::TokenSet;
pub use transferability::{Method, Score};
