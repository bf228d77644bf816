//! Dimensionality selection for matrix-factorization embeddings.
//!
//! An embedding of a signal matrix `M = U D Vᵀ` is `E = U[:, ..k] · D[..k]^α`.
//! Two embeddings are compared through their pairwise inner product (PIP)
//! matrices `E Eᵀ`, which makes the comparison invariant to rotations of the
//! embedding space. Given an estimate of the noise level and of the clean
//! spectrum, the expected PIP loss between the oracle embedding and the one
//! trained on noisy data can be bounded analytically or simulated, and the
//! dimensionality minimizing it selected.
//!
//! The pipeline is split into modules mirroring its stages:
//!
//! - [`corpus`]: vocabulary, co-occurrence and term-document counting, corpus splitting
//! - [`transforms`]: PMI / PPMI / SPPMI / log-count / TF / TF-IDF signal matrices
//! - [`linalg`]: SVD-based factorization, PIP distance, principal angles, Procrustes
//! - [`estimate`]: noise level (count-twice) and spectrum (singular value thresholding)
//! - [`theory`]: exact and bounded PIP losses
//! - [`montecarlo`]: simulated PIP-loss curves
//! - [`select`]: argmin and near-optimality intervals, forward-stability ratios
//! - [`cli`]: file formats and the command implementations behind the `pipdim` binary

pub mod cli;
pub mod corpus;
pub mod error;
pub mod estimate;
pub mod exec;
pub mod linalg;
pub mod montecarlo;
pub mod select;
pub mod theory;
pub mod transforms;

pub use error::{Error, Result};
pub use estimate::{NoiseEstimate, Spectrum};
pub use exec::Exec;
pub use linalg::{Embedding, PrincipalAngles, Svd};
pub use montecarlo::{CurveMethod, PipCurve};
pub use select::{SelectionReport, StabilityMatrix};
pub use theory::{BoundBreakdown, GapPolicy};
pub use transforms::{SignalMatrix, TransformKind};
