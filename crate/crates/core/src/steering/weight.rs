use serde::Serialize;

use super::{CertifyConfig, SolverSummary};
use crate::assemblage::{priori_from_state, Assemblage, Direction, Efficiency};
use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_basis, DensityMatrix, HermitianOperator};
use crate::measurements::{MeasurementSet, StrategySpace};
use crate::scalar::Scalar;
use crate::sdp::{solve_with, BlockSdpProblem, BlockSpec, SdpStatus, Term};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteeringVerdict<T> {
    pub sw: T,
    pub mu: T,
    pub steerable: bool,
    /// Optimal `sigma_lambda`, indexed by strategy.
    #[serde(skip)]
    pub lhs_blocks: Vec<HermitianOperator<T>>,
    pub solver: SolverSummary<T>,
}

/// Slack form of the LHS decomposition. Blocks `0..L` are the strategy
/// states `sigma_lambda`, followed by one slack per `(x, a)` in setting-major
/// order:
///
/// ```text
///   max  sum_l tr sigma_l
///   s.t. sum_l D(a|x,l) sigma_l + S_{a|x} = sigma_{a|x}
/// ```
pub fn steering_weight_problem<T: Scalar>(asm: &Assemblage<T>) -> Result<BlockSdpProblem<T>> {
    let d = asm.dim();
    let m = asm.settings();
    let o = asm.outcomes();
    let space = StrategySpace::new(m, o)?;
    let n_strat = space.len();

    let mut blocks = vec![BlockSpec::psd(d); n_strat];
    blocks.extend(std::iter::repeat(BlockSpec::psd(d)).take(m * o));
    let mut problem = BlockSdpProblem::new(blocks);
    let identity = HermitianOperator::identity(d);
    for l in 0..n_strat {
        problem.add_objective(l, identity.clone());
    }

    let basis = hermitian_basis::<T>(d);
    // strategies answering a at x, per (x, a)
    let mut answering = vec![Vec::new(); m * o];
    for s in space.iter() {
        for x in 0..m {
            answering[x * o + s.outcome(x)].push(s.index());
        }
    }
    for x in 0..m {
        for a in 0..o {
            let slack = n_strat + x * o + a;
            let target = asm.member(a, x);
            for e in &basis {
                let mut terms: Vec<Term<T>> =
                    answering[x * o + a].iter().map(|&l| Term::new(l, e.clone())).collect();
                terms.push(Term::new(slack, e.clone()));
                problem.add_constraint(terms, e.inner(target));
            }
        }
    }
    Ok(problem)
}

pub fn steering_weight<T: Scalar>(asm: &Assemblage<T>) -> Result<SteeringVerdict<T>> {
    steering_weight_with(asm, &CertifyConfig::default())
}

pub fn steering_weight_with<T: Scalar>(asm: &Assemblage<T>, cfg: &CertifyConfig<T>) -> Result<SteeringVerdict<T>> {
    let problem = steering_weight_problem(asm)?;
    let n_strat = problem.blocks.len() - asm.settings() * asm.outcomes();
    let sol = solve_with(&problem, &cfg.solver)?;
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::NumericFailure => {
            return Err(Error::NumericFailure(format!(
                "steering weight solve stopped after {} iterations (gap {}, residuals {} / {})",
                sol.iterations, sol.gap, sol.primal_residual, sol.dual_residual
            )))
        }
        other => {
            return Err(Error::Internal(format!(
                "steering weight program reported {} although zero is always feasible",
                other.label()
            )))
        }
    }
    let mut sw = T::one() - sol.objective_value;
    if sw.abs() < T::lit(1e-9) {
        sw = T::zero();
    }
    let sw = sw.max(T::zero()).min(T::one());
    Ok(SteeringVerdict {
        sw,
        mu: T::one() - sw,
        steerable: sw > cfg.steer_tol,
        lhs_blocks: sol.blocks[..n_strat].to_vec(),
        solver: SolverSummary::from(&sol),
    })
}

/// Steering weight of the priori assemblage of `rho`.
pub fn loss_counted_sw<T: Scalar>(
    rho: &DensityMatrix<T>,
    ms: &MeasurementSet<T>,
    dir: Direction,
    eps: &Efficiency<T>,
) -> Result<SteeringVerdict<T>> {
    loss_counted_sw_with(rho, ms, dir, eps, &CertifyConfig::default())
}

pub fn loss_counted_sw_with<T: Scalar>(
    rho: &DensityMatrix<T>,
    ms: &MeasurementSet<T>,
    dir: Direction,
    eps: &Efficiency<T>,
    cfg: &CertifyConfig<T>,
) -> Result<SteeringVerdict<T>> {
    let asm = priori_from_state(rho, ms, dir, eps)?;
    steering_weight_with(&asm, cfg)
}

/// Explicit LHS ensemble reproducing the priori assemblage when
/// `eps(x) <= 1/m` for every setting: the strategy answering `a` at `x0`
/// and null elsewhere carries `eps(x0) sigma_{a|x0}`, the all-null strategy
/// carries `(1 - sum_x eps(x)) rho_steered`.
///
/// `lossless` must be lossless; the result is indexed like the strategies
/// of the `(d+1)`-outcome program, as `(strategy index, state)` pairs.
pub fn cheating_ensemble<T: Scalar>(
    lossless: &Assemblage<T>,
    steered: &DensityMatrix<T>,
    eps: &Efficiency<T>,
) -> Result<Vec<(usize, HermitianOperator<T>)>> {
    let m = lossless.settings();
    let d = lossless.outcomes();
    eps.check(m)?;
    let total: T = (0..m).map(|x| eps.at(x)).sum();
    if total > T::one() + T::lit(1e-12) {
        return invalid(format!("efficiencies sum to {total} > 1; no cheating ensemble"));
    }
    let o = d + 1;
    let space = StrategySpace::new(m, o)?;
    let null_index: usize = (0..m).map(|x| d * o.pow(x as u32)).sum();
    let mut out = Vec::with_capacity(m * d + 1);
    for x0 in 0..m {
        for a in 0..d {
            let index = null_index - d * o.pow(x0 as u32) + a * o.pow(x0 as u32);
            debug_assert!(index < space.len());
            out.push((index, lossless.member(a, x0).scale(eps.at(x0))));
        }
    }
    out.push((null_index, steered.op().scale((T::one() - total).max(T::zero()))));
    Ok(out)
}

/// Largest entrywise deviation between `asm` and `sum_l D(a|x,l) sigma_l`,
/// and the most negative eigenvalue among the ensemble members.
pub fn lhs_reconstruction_error<T: Scalar>(
    asm: &Assemblage<T>,
    ensemble: &[(usize, HermitianOperator<T>)],
) -> Result<(T, T)> {
    let m = asm.settings();
    let o = asm.outcomes();
    let space = StrategySpace::new(m, o)?;
    let mut worst = T::zero();
    for x in 0..m {
        for a in 0..o {
            let mut acc = HermitianOperator::zeros(asm.dim());
            for (l, s) in ensemble {
                if *l >= space.len() {
                    return invalid(format!("strategy index {l} out of range"));
                }
                if space.get(*l).outcome(x) == a {
                    acc = acc.add(s);
                }
            }
            worst = worst.max(acc.max_abs_diff(asm.member(a, x)));
        }
    }
    let mut min_eig = T::infinity();
    for (_, s) in ensemble {
        min_eig = min_eig.min(s.min_eigenvalue()?);
    }
    Ok((worst, min_eig))
}
