//! Simulation and analysis of rephased amplified spontaneous emission (RASE)
//! as a two-mode Gaussian process.
//!
//! * [`cv_gaussian`]: covariance-matrix algebra, the ASE/RASE state model,
//!   heterodyne convention, analytic inseparability, sampling and calibration.
//! * [`sequence`]: synthetic heterodyne records for the two-π-pulse sequence.
//! * [`analysis`]: the measurement chain from raw records to inseparability
//!   curves with bootstrap confidence.
//! * [`shotfile`] and [`runconfig`]: persistence and configuration.
//!
//! The Gaussian-state algebra and quadrature statistics are generic over
//! [`Real`] (`f32` or `f64`); records are `f64` throughout.

pub mod analysis;
pub mod cv_gaussian;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod runconfig;
pub mod scalar;
pub mod sequence;
pub mod shotfile;

pub use error::{Error, Result};
pub use scalar::Real;

pub type GaussianState = cv_gaussian::TwoModeGaussianState<f64>;
pub type GaussianStateF32 = cv_gaussian::TwoModeGaussianState<f32>;
pub type PhysicsParams = cv_gaussian::RasePhysicsParams<f64>;
pub type PhysicsParamsF32 = cv_gaussian::RasePhysicsParams<f32>;
pub type Sample = cv_gaussian::QuadratureSample<f64>;
pub type SampleF32 = cv_gaussian::QuadratureSample<f32>;
pub type Matrix4 = linalg::Mat4<f64>;
