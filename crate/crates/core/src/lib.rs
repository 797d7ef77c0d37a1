//! Streaming matrix sketches.
//!
//! A sketch summarises an n x d matrix `A`, seen one row at a time, by a small
//! ℓ x d matrix `B` with `BᵀB ≈ AᵀA`. Three families are provided:
//!
//! - [`iterative`]: SVD-based shrinking (Frequent Directions and relatives),
//! - [`sampling`]: rescaled original rows,
//! - [`projection`]: random linear maps `B = SA`.
//!
//! [`metrics`] scores a sketch against its input and [`datasets`] supplies
//! synthetic and on-disk inputs.

pub mod datasets;
pub mod error;
pub mod iterative;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod projection;
pub mod rng;
pub mod sampling;

pub use error::{Result, SketchError};
pub use iterative::{IterativeSketch, ReduceRule};
pub use matrix::{RowMatrix, RowView};
pub use metrics::{cov_err, proj_err, ErrorEvaluator, ErrorReport};
pub use projection::{ProjectionKind, ProjectionState};
