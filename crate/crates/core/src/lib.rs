//! End-to-end behavior classification from triaxial accelerometry.
//!
//! The model normalizes raw accelerometer counts per axis, extracts nine
//! features through learnable digital filters (per-axis means, a first-order
//! high-pass IIR stage with trainable pole, and a nonlinear filter built from
//! two FIR filters joined by a tanh activation), and classifies the feature
//! vector with a single-hidden-layer MLP. Every stage is differentiable, so
//! the filters are trained jointly with the classifier.
//!
//! The crate provides:
//!
//! - [`model`]: parameter containers, initialization, and the binary model
//!   file format.
//! - [`data`]: labeled segment datasets and their CSV interchange format.
//! - [`featurizer`]: the whole-segment forward pipeline.
//! - [`trainer`]: reverse-mode gradients through the full pipeline (including
//!   the IIR recurrence), Adam, and the training loop.
//! - [`evaluator`]: confusion matrices, multiclass MCC, leave-one-animal-out
//!   cross-validation, and cross-dataset evaluation.
//! - [`stream`]: a constant-memory per-sample inference engine that matches
//!   the batch pipeline bit for bit, plus exact operation-count accounting.
//! - [`synth`]: a deterministic synthetic accelerometry generator.
//! - [`analysis`]: spectral density curves, FIR frequency responses, and
//!   feature export.

// Indexed loops over co-indexed per-axis arrays are the clearer form in the
// numeric kernels.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod data;
pub mod error;
pub mod evaluator;
pub mod featurizer;
pub mod model;
pub mod real;
pub mod stream;
pub mod synth;
pub mod trainer;

pub use data::{Dataset, Segment};
pub use error::{Error, Result};
pub use model::{Dims, FeatureVector, FilterBank, ModelParams, NormStats, Variant};
pub use real::Real;
