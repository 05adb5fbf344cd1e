//! Linear conic programs over lists of Hermitian blocks.
//!
//! A [`BlockSdpProblem`] maximizes `sum_k <C_k, X_k>` subject to scalar
//! equalities `sum_k <A_jk, X_k> = b_j`, where each block `X_k` is either
//! positive semidefinite or a free Hermitian matrix and `<A, B> = trace(AB)`.
//!
//! Internally every PSD block is replaced by its real symmetric embedding of
//! doubled size, free blocks by their coordinates in an orthonormal Hermitian
//! basis, and the resulting real program is solved with a primal-dual
//! path-following method on the homogeneous self-dual embedding. Linearly
//! dependent equality rows are removed up front; inconsistent ones produce a
//! Farkas certificate directly.

mod ipm;
mod json;
mod presolve;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::HermitianOperator;
use crate::scalar::Scalar;

pub use json::{ProblemDocument, SolutionDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cone {
    Psd,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub size: usize,
    pub cone: Cone,
}

impl BlockSpec {
    pub fn psd(size: usize) -> Self {
        Self { size, cone: Cone::Psd }
    }

    pub fn free(size: usize) -> Self {
        Self { size, cone: Cone::Free }
    }
}

/// Coefficient operator attached to one block.
#[derive(Debug, Clone, PartialEq)]
pub struct Term<T> {
    pub block: usize,
    pub coeff: HermitianOperator<T>,
}

impl<T> Term<T> {
    pub fn new(block: usize, coeff: HermitianOperator<T>) -> Self {
        Self { block, coeff }
    }
}

/// `sum_terms <coeff, X_block> = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub terms: Vec<Term<T>>,
    pub rhs: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSdpProblem<T> {
    pub blocks: Vec<BlockSpec>,
    /// Cost operators; blocks without a term have zero cost.
    pub objective: Vec<Term<T>>,
    pub constraints: Vec<Constraint<T>>,
}

impl<T: Scalar> BlockSdpProblem<T> {
    pub fn new(blocks: Vec<BlockSpec>) -> Self {
        Self {
            blocks,
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_block(&mut self, spec: BlockSpec) -> usize {
        self.blocks.push(spec);
        self.blocks.len() - 1
    }

    pub fn add_objective(&mut self, block: usize, coeff: HermitianOperator<T>) {
        self.objective.push(Term::new(block, coeff));
    }

    pub fn add_constraint(&mut self, terms: Vec<Term<T>>, rhs: T) {
        self.constraints.push(Constraint { terms, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        for (k, b) in self.blocks.iter().enumerate() {
            if b.size == 0 {
                return invalid(format!("block {k} has size 0"));
            }
        }
        let check_term = |t: &Term<T>, what: &str| -> Result<()> {
            let Some(spec) = self.blocks.get(t.block) else {
                return invalid(format!("{what} refers to missing block {}", t.block));
            };
            if t.coeff.dim() != spec.size {
                return invalid(format!(
                    "{what} coefficient on block {} has size {}, expected {}",
                    t.block,
                    t.coeff.dim(),
                    spec.size
                ));
            }
            if t.coeff.matrix().entries().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return invalid(format!("{what} has a non-finite coefficient"));
            }
            Ok(())
        };
        for t in &self.objective {
            check_term(t, "objective")?;
        }
        for (j, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return invalid(format!("constraint {j} has a non-finite right-hand side"));
            }
            for t in &c.terms {
                check_term(t, &format!("constraint {j}"))?;
            }
        }
        Ok(())
    }

    /// `sum_k <C_k, X_k>` for a candidate point.
    pub fn objective_at(&self, x: &[HermitianOperator<T>]) -> T {
        self.objective.iter().map(|t| t.coeff.inner(&x[t.block])).sum()
    }

    /// Equality residuals `sum_k <A_jk, X_k> - b_j`.
    pub fn residuals_at(&self, x: &[HermitianOperator<T>]) -> Vec<T> {
        self.constraints
            .iter()
            .map(|c| c.terms.iter().map(|t| t.coeff.inner(&x[t.block])).sum::<T>() - c.rhs)
            .collect()
    }

    /// Copy with every right-hand side and cost multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        for t in &mut out.objective {
            t.coeff = t.coeff.scale(factor);
        }
        for c in &mut out.constraints {
            c.rhs *= factor;
        }
        out
    }
}

/// Tolerances and limits of the interior-point solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSettings<T> {
    pub feasibility_tol: T,
    pub gap_tol: T,
    pub infeasibility_tol: T,
    /// Relative residual below which an equality row counts as dependent.
    pub rank_tol: T,
    pub max_iterations: usize,
    pub step_fraction: T,
}

impl<T: Scalar> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            feasibility_tol: T::lit(1e-8),
            gap_tol: T::lit(1e-8),
            infeasibility_tol: T::lit(1e-8),
            rank_tol: T::lit(1e-9),
            max_iterations: 200,
            step_fraction: T::lit(0.99),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    PrimalInfeasible,
    /// The dual is infeasible; the primal is unbounded when feasible.
    DualInfeasible,
    NumericFailure,
}

impl SdpStatus {
    pub fn label(self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::PrimalInfeasible => "primal-infeasible",
            SdpStatus::DualInfeasible => "dual-infeasible",
            SdpStatus::NumericFailure => "numeric-failure",
        }
    }
}

/// Evidence backing an infeasibility status.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate<T> {
    /// Multipliers `y` (unit norm) with `sum_j y_j A_jk` negative semidefinite
    /// on PSD blocks, zero on free blocks, and `b^T y = margin > 0`.
    Farkas { y: Vec<T>, margin: T, residual: T },
    /// Direction `X` (unit norm) with `A(X) = 0`, PSD blocks PSD, and
    /// objective increase `margin > 0`.
    ImprovingRay {
        blocks: Vec<HermitianOperator<T>>,
        margin: T,
        residual: T,
    },
}

impl<T: Scalar> Certificate<T> {
    pub fn margin(&self) -> T {
        match self {
            Certificate::Farkas { margin, .. } | Certificate::ImprovingRay { margin, .. } => *margin,
        }
    }

    pub fn residual(&self) -> T {
        match self {
            Certificate::Farkas { residual, .. } | Certificate::ImprovingRay { residual, .. } => *residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution<T> {
    pub status: SdpStatus,
    /// Optimal blocks; empty unless `status` is optimal.
    pub blocks: Vec<HermitianOperator<T>>,
    /// Multipliers of the maximization's dual `min b^T y` subject to
    /// `sum_j y_j A_jk - C_k` PSD (PSD blocks) or zero (free blocks).
    pub dual: Vec<T>,
    pub objective_value: T,
    pub dual_bound: T,
    pub gap: T,
    pub primal_residual: T,
    pub dual_residual: T,
    pub iterations: usize,
    pub certificate: Option<Certificate<T>>,
    pub settings: SolverSettings<T>,
}

impl<T: Scalar> SdpSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

/// Solves with default settings. Errors only on malformed problems; solver
/// trouble is reported through [`SdpStatus::NumericFailure`].
pub fn solve<T: Scalar>(problem: &BlockSdpProblem<T>) -> Result<SdpSolution<T>> {
    solve_with(problem, &SolverSettings::default())
}

pub fn solve_with<T: Scalar>(problem: &BlockSdpProblem<T>, settings: &SolverSettings<T>) -> Result<SdpSolution<T>> {
    problem.validate()?;
    ipm::solve(problem, settings)
}

#[cfg(test)]
mod tests;
