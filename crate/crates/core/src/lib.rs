//! Consistency-aware stance classification toolkit.
//!
//! The crate trains and evaluates classifiers that decide whether a
//! perspective supports or opposes a claim. Two transformer variants share
//! one encoder: a plain classifier over the pooled pair encoding, and a
//! consistency variant that also encodes the claim alone and feeds the
//! cosine similarity between the two encodings through both the feature
//! vector and an auxiliary loss. A recurrent baseline, evaluation metrics
//! with paired significance testing, and a phrase-attribution tool for
//! inspecting trained models round out the toolkit.
//!
//! Everything is pure Rust on `f64` matrices: gradients come from a small
//! reverse-mode tape (`nn`), so analytic gradients can be validated against
//! finite differences without any framework dependency.

pub mod config;
pub mod data;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod interpret;
pub mod model;
pub mod nn;
pub mod seeding;
pub mod train;

pub use config::ExperimentConfig;
pub use data::{Split, StanceLabel, StancePair};
pub use error::{Error, Result};
pub use eval::{EvalReport, PredictionRecord};
pub use model::{ModelKind, Prediction, StancyModel, Variant};
pub use train::{TrainConfig, TrainReport};
