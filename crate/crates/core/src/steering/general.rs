//! Relaxation certifying unsteerability for all projective measurements.
//!
//! With a measurement set whose noisy version (visibility `eta`) contains
//! every projective measurement, the program
//!
//! ```text
//!   max  Q = sum_l tr sigma_l
//!   s.t. Tr_A((M_{a|x} (x) I) O_AB) = sum_l D(a|x,l) sigma_l
//!        eta O_AB + (1 - eta) rho_A (x) O_B = rho_AB
//!        Tr_A O_AB = O_B
//! ```
//!
//! has a feasible point exactly when the finite set admits an LHS model for
//! the auxiliary operator `O_AB`, and that model carries over to `rho_AB`
//! for every projective measurement. The last family ties `O_B` to the
//! marginal of `O_AB`; without it `O_B` is unconstrained and the program is
//! unbounded whenever feasible. On the feasible set `Q = tr O_AB = 1`.

use serde::Serialize;

use super::{CertifyConfig, SolverSummary};
use crate::assemblage::Direction;
use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_basis, DensityMatrix, HermitianOperator, Subsystem};
use crate::measurements::{MeasurementSet, StrategySpace};
use crate::scalar::Scalar;
use crate::sdp::{solve_with, BlockSdpProblem, BlockSpec, SdpStatus, Term};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralBoundConfig<T> {
    pub eta: T,
    pub measurements: MeasurementSet<T>,
    /// Adds `Tr_A O_AB = O_B`. Turning it off gives the two displayed
    /// families only, which are unbounded when feasible.
    pub tie_steered_marginal: bool,
}

impl<T: Scalar> GeneralBoundConfig<T> {
    pub fn new(eta: T, measurements: MeasurementSet<T>) -> Result<Self> {
        if !(eta > T::zero() && eta <= T::one()) {
            return invalid(format!("shrinking factor {eta} outside (0, 1]"));
        }
        Ok(Self { eta, measurements, tie_steered_marginal: true })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QResult<T> {
    /// Optimal `Q`; absent when the program is infeasible or unbounded.
    pub q: Option<T>,
    pub certified_unsteerable: bool,
    #[serde(skip)]
    pub o_ab: Option<HermitianOperator<T>>,
    #[serde(skip)]
    pub o_b: Option<HermitianOperator<T>>,
    pub solver: SolverSummary<T>,
}

/// Builds the program for `AtoB`; `BtoA` swaps the state's factors first.
/// Blocks: `0` is `O_AB`, `1` is `O_B`, then one PSD block per strategy.
pub fn unsteerability_problem<T: Scalar>(
    rho: &DensityMatrix<T>,
    cfg: &GeneralBoundConfig<T>,
    dir: Direction,
) -> Result<BlockSdpProblem<T>> {
    let ms = &cfg.measurements;
    let d = ms.dim();
    if rho.dim() != d * d {
        return invalid(format!("state dimension {} does not match measurements of dimension {d}", rho.dim()));
    }
    if !(cfg.eta > T::zero() && cfg.eta <= T::one()) {
        return invalid(format!("shrinking factor {} outside (0, 1]", cfg.eta));
    }
    let rho = match dir {
        Direction::AtoB => rho.clone(),
        Direction::BtoA => rho.swap_factors((d, d))?,
    };
    let rho_a = rho.reduced((d, d), Subsystem::Second)?;

    let m = ms.settings();
    let o = ms.outcomes();
    let space = StrategySpace::new(m, o)?;
    let mut blocks = vec![BlockSpec::free(d * d), BlockSpec::free(d)];
    blocks.extend(std::iter::repeat(BlockSpec::psd(d)).take(space.len()));
    let mut problem = BlockSdpProblem::new(blocks);
    let identity = HermitianOperator::identity(d);
    for l in 0..space.len() {
        problem.add_objective(2 + l, identity.clone());
    }

    let basis = hermitian_basis::<T>(d);
    let mut answering = vec![Vec::new(); m * o];
    for s in space.iter() {
        for x in 0..m {
            answering[x * o + s.outcome(x)].push(2 + s.index());
        }
    }
    // <E, Tr_A((M (x) I) O)> = <M (x) E, O>
    for x in 0..m {
        for a in 0..o {
            let effect = ms.effect(a, x);
            for e in &basis {
                let mut terms = vec![Term::new(0, effect.kron(e))];
                terms.extend(answering[x * o + a].iter().map(|&b| Term::new(b, e.scale(-T::one()))));
                problem.add_constraint(terms, T::zero());
            }
        }
    }

    // <E, rho_A (x) O_B> = <Tr_A(sym(rho_A (x) I) E), O_B>
    let lift = rho_a.op().kron(&identity);
    for e in hermitian_basis::<T>(d * d) {
        let prod = lift.matrix().matmul(e.matrix());
        let sym = HermitianOperator::new(prod.add(&prod.adjoint()).scale(T::lit(0.5)))?;
        let on_b = sym.partial_trace((d, d), Subsystem::First)?.scale(T::one() - cfg.eta);
        problem.add_constraint(
            vec![Term::new(0, e.scale(cfg.eta)), Term::new(1, on_b)],
            e.inner(rho.op()),
        );
    }

    if cfg.tie_steered_marginal {
        for e in &basis {
            problem.add_constraint(
                vec![Term::new(0, identity.kron(e)), Term::new(1, e.scale(-T::one()))],
                T::zero(),
            );
        }
    }
    Ok(problem)
}

pub fn unsteerability_q<T: Scalar>(
    rho: &DensityMatrix<T>,
    cfg: &GeneralBoundConfig<T>,
    dir: Direction,
) -> Result<QResult<T>> {
    unsteerability_q_with(rho, cfg, dir, &CertifyConfig::default())
}

pub fn unsteerability_q_with<T: Scalar>(
    rho: &DensityMatrix<T>,
    cfg: &GeneralBoundConfig<T>,
    dir: Direction,
    certify: &CertifyConfig<T>,
) -> Result<QResult<T>> {
    let problem = unsteerability_problem(rho, cfg, dir)?;
    let sol = solve_with(&problem, &certify.solver)?;
    let summary = SolverSummary::from(&sol);
    match sol.status {
        SdpStatus::Optimal => {
            let q = sol.objective_value;
            Ok(QResult {
                q: Some(q),
                certified_unsteerable: q >= T::one() - certify.q_tol,
                o_ab: Some(sol.blocks[0].clone()),
                o_b: Some(sol.blocks[1].clone()),
                solver: summary,
            })
        }
        SdpStatus::PrimalInfeasible | SdpStatus::DualInfeasible => Ok(QResult {
            q: None,
            certified_unsteerable: false,
            o_ab: None,
            o_b: None,
            solver: summary,
        }),
        SdpStatus::NumericFailure => Err(Error::NumericFailure(format!(
            "unsteerability solve stopped after {} iterations (gap {}, residuals {} / {})",
            sol.iterations, sol.gap, sol.primal_residual, sol.dual_residual
        ))),
    }
}
