//! Certification of EPR steering with finite measurement sets.
//!
//! The crate builds steering assemblages from bipartite states and
//! projective measurements, and decides steerability with semidefinite
//! programs solved by its own interior-point engine in [`sdp`].
//! Everything numeric is generic over [`Scalar`]; the aliases below fix
//! `f64`, which is what the command-line tool uses.

pub mod assemblage;
pub mod error;
pub mod linalg;
pub mod measurements;
pub mod scalar;
pub mod sdp;
pub mod states;
pub mod steering;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Hermitian = linalg::HermitianOperator<f64>;
pub type Density = linalg::DensityMatrix<f64>;
pub type Measurements = measurements::MeasurementSet<f64>;
pub type Assemblage = assemblage::Assemblage<f64>;
pub type Problem = sdp::BlockSdpProblem<f64>;
pub type Solution = sdp::SdpSolution<f64>;
