//! Student-performance prediction pipeline.
//!
//! The crate turns the 17-column student activity CSV into a numeric design
//! matrix, standardizes and partitions it, and trains a small dense network
//! (ReLU hidden layers, softmax output) with Adam on sparse categorical
//! cross-entropy. Everything runs in `f64` on a single thread so that a fixed
//! seed reproduces the same parameters bit for bit.
//!
//! Modules, in pipeline order:
//!
//! - [`ingest`]: CSV parsing, validation and summary statistics
//! - [`encode`]: feature schema, fitting and one-hot/ordinal/binary encoding
//! - [`preprocess`]: standard scaling and seeded train/validation/test splits
//! - [`mlp`]: the network, forward pass, loss and backpropagation
//! - [`optim`]: Adam and the finite-difference gradient oracle
//! - [`train`]: the mini-batch loop, evaluation and confusion matrices
//! - [`pipeline`]: the end-to-end reference run used by the CLI

pub mod encode;
pub mod error;
pub mod ingest;
pub mod matrix;
pub mod mlp;
pub mod optim;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Number of target classes (L, M, H).
pub const NUM_CLASSES: usize = 3;
