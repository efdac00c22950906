//! Few-shot classification on frozen embeddings that tolerates noisy support labels.
//!
//! The pipeline per episode:
//!
//! 1. [`episode::sample_episode`] draws an N-way K-shot task and
//!    [`noise::apply_noise`] corrupts its support set.
//! 2. [`prototype::run_clustering`] turns the support set into one
//!    representative per class with label-initialized soft k-means.
//! 3. [`field::predict`] classifies each query with difference-of-Gaussians
//!    receptive fields whose scale is adapted until a single class fires.
//!
//! [`eval::run_evaluation`] repeats this over many seeded episodes in parallel.

pub mod embedding;
pub mod episode;
pub mod error;
pub mod eval;
pub mod field;
pub mod noise;
pub mod prototype;

pub use error::{Error, Result};
