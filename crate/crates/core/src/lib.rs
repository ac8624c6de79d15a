//! Cross-domain (gallery/probe) face recognition toolkit.
//!
//! The pipeline bridges high-quality enrollment images and degraded
//! surveillance probes in five stages:
//!
//! 1. [`preprocess`]: degrade the gallery (Gaussian blur), enhance the
//!    probes (power-law contrast), resize to a common resolution.
//! 2. [`features`]: extract a bank of holistic descriptors (eigenfaces,
//!    fisherfaces, weberfaces, LBP, Gabor) or ingest externally computed
//!    ones (BOW, FV-SIFT, VLAD-SIFT).
//! 3. [`mfkc`]: for each of the configured [`kernels`], learn soft-margin
//!    simplex weights over the features with an [`svm`] inner solver and
//!    select the best feature-kernel pairs.
//! 4. [`embed`] + [`da`]: realize each selected pair as explicit RKHS
//!    coordinates and learn a max-margin transform aligning the gallery
//!    with sparsely labeled probe-domain samples.
//! 5. [`eval`]: nearest-neighbor identification over the transformed
//!    gallery plus rank-1/CMC/ROC reporting.
//!
//! [`pipeline`] wires the stages together behind a checkpointed,
//! seed-deterministic CLI; [`pipeline::synth`] generates seeded synthetic
//! domain-shift benchmarks standing in for license-restricted datasets.

pub mod da;
pub mod embed;
pub mod error;
pub mod eval;
pub mod features;
pub mod kernels;
pub mod linalg;
pub mod mfkc;
pub mod pipeline;
pub mod preprocess;
pub mod svm;

pub use error::{Error, Result};
