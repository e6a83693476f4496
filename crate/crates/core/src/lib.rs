//! Filtering, retrofiltering and prior-extended smoothing of discretely
//! monitored open quantum systems.
//!
//! Every numerical type is generic over a [`Real`] scalar (`f32` or `f64`).
//! The aliases at the crate root fix the scalar to `f64`, which is what the
//! tolerances in the documentation refer to.

pub mod classical;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod random;
pub mod retrodiction;
pub mod scalar;
pub mod smoothers;
pub mod trajectory;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type Matrix = linalg::Matrix<f64>;
pub type DensityOperator = linalg::DensityOperator<f64>;
pub type Effect = linalg::Effect<f64>;
pub type HermitianMatrix = linalg::HermitianMatrix<f64>;
