//! Steering certification programs and threshold search.
//!
//! * [`steering_weight`] decides whether an assemblage admits a local hidden
//!   state model over deterministic strategies;
//! * [`loss_counted_sw`] runs the same program on the loss-extended
//!   assemblage;
//! * [`unsteerability_q`] is the relaxation that certifies unsteerability
//!   for all projective measurements from a finite noisy set;
//! * [`critical_p`] bisects a state family for the onset of steering.

mod analytic;
mod general;
mod threshold;
mod weight;

use serde::Serialize;

use crate::scalar::Scalar;
use crate::sdp::{SdpSolution, SdpStatus, SolverSettings};

pub use analytic::{analytic_pstar_bta, analytic_pstar_bta_exact, harmonic, harmonic_number, shrinking_factor_mub};
pub use general::{unsteerability_q, unsteerability_q_with, unsteerability_problem, GeneralBoundConfig, QResult};
pub use threshold::{critical_p, CriticalPoint, Mode, ThresholdSpec};
pub use weight::{
    cheating_ensemble, lhs_reconstruction_error, loss_counted_sw, loss_counted_sw_with, steering_weight,
    steering_weight_problem, steering_weight_with, SteeringVerdict,
};

/// Default separation between numerical zero and genuine steering.
pub const DEFAULT_STEER_TOL: f64 = 1e-5;

/// `Q` at or above `1 - 1e-6` counts as `Q = 1`.
pub const DEFAULT_Q_TOL: f64 = 1e-6;

/// Shared knobs of the certification programs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifyConfig<T> {
    pub steer_tol: T,
    pub q_tol: T,
    pub solver: SolverSettings<T>,
}

impl<T: Scalar> Default for CertifyConfig<T> {
    fn default() -> Self {
        Self {
            steer_tol: T::lit(DEFAULT_STEER_TOL),
            q_tol: T::lit(DEFAULT_Q_TOL),
            solver: SolverSettings::default(),
        }
    }
}

/// Diagnostics of one solve, without the solution blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSummary<T> {
    pub status: SdpStatus,
    pub objective_value: T,
    pub dual_bound: T,
    pub gap: T,
    pub primal_residual: T,
    pub dual_residual: T,
    pub iterations: usize,
}

impl<T: Scalar> From<&SdpSolution<T>> for SolverSummary<T> {
    fn from(s: &SdpSolution<T>) -> Self {
        Self {
            status: s.status,
            objective_value: s.objective_value,
            dual_bound: s.dual_bound,
            gap: s.gap,
            primal_residual: s.primal_residual,
            dual_residual: s.dual_residual,
            iterations: s.iterations,
        }
    }
}
