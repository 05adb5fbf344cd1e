//! JSON debug format for problems and solutions.
//!
//! Coefficients are flattened row-major as `[re, im]` pairs:
//!
//! ```json
//! {"blocks": [{"size": 2, "cone": "psd"}],
//!  "objective": [{"block": 0, "coeff": [[1,0],[0,0],[0,0],[1,0]]}],
//!  "constraints": [{"terms": [{"block": 0, "coeff": [...]}], "rhs": 1.0}]}
//! ```

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{BlockSdpProblem, BlockSpec, Certificate, Constraint, SdpSolution, Term};
use crate::error::{invalid, Result};
use crate::linalg::{ComplexMatrix, HermitianOperator};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDocument {
    pub block: usize,
    pub coeff: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDocument {
    pub terms: Vec<TermDocument>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDocument {
    pub blocks: Vec<BlockSpec>,
    #[serde(default)]
    pub objective: Vec<TermDocument>,
    #[serde(default)]
    pub constraints: Vec<ConstraintDocument>,
}

fn flatten<T: Scalar>(h: &HermitianOperator<T>) -> Vec<[f64; 2]> {
    h.matrix()
        .entries()
        .iter()
        .map(|z| [z.re.to_f64_lossy(), z.im.to_f64_lossy()])
        .collect()
}

fn rows(n: usize, flat: &[[f64; 2]]) -> Vec<Vec<[f64; 2]>> {
    flat.chunks(n).map(|r| r.to_vec()).collect()
}

fn term_doc<T: Scalar>(t: &Term<T>) -> TermDocument {
    TermDocument { block: t.block, coeff: flatten(&t.coeff) }
}

impl ProblemDocument {
    pub fn from_problem<T: Scalar>(problem: &BlockSdpProblem<T>) -> Self {
        Self {
            blocks: problem.blocks.clone(),
            objective: problem.objective.iter().map(term_doc).collect(),
            constraints: problem
                .constraints
                .iter()
                .map(|c| ConstraintDocument {
                    terms: c.terms.iter().map(term_doc).collect(),
                    rhs: c.rhs.to_f64_lossy(),
                })
                .collect(),
        }
    }

    /// Rebuilds the problem; coefficients must be Hermitian (within 1e-12
    /// relative) and sized to their block.
    pub fn to_problem<T: Scalar>(&self) -> Result<BlockSdpProblem<T>> {
        let term = |t: &TermDocument, what: &str| -> Result<Term<T>> {
            let Some(spec) = self.blocks.get(t.block) else {
                return invalid(format!("{what} refers to missing block {}", t.block));
            };
            let n = spec.size;
            if t.coeff.len() != n * n {
                return invalid(format!(
                    "{what} coefficient has {} entries, expected {}",
                    t.coeff.len(),
                    n * n
                ));
            }
            let entries = t.coeff.iter().map(|[re, im]| Complex::new(T::lit(*re), T::lit(*im))).collect();
            let m = ComplexMatrix::from_vec(n, n, entries)?;
            Ok(Term::new(t.block, HermitianOperator::new(m)?))
        };
        let mut problem = BlockSdpProblem::new(self.blocks.clone());
        for t in &self.objective {
            problem.objective.push(term(t, "objective")?);
        }
        for (j, c) in self.constraints.iter().enumerate() {
            let terms = c
                .terms
                .iter()
                .map(|t| term(t, &format!("constraint {j}")))
                .collect::<Result<Vec<_>>>()?;
            problem.constraints.push(Constraint { terms, rhs: T::lit(c.rhs) });
        }
        problem.validate()?;
        Ok(problem)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertificateDocument {
    Farkas { y: Vec<f64>, margin: f64, residual: f64 },
    ImprovingRay { blocks: Vec<Vec<Vec<[f64; 2]>>>, margin: f64, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingsDocument {
    pub feasibility_tol: f64,
    pub gap_tol: f64,
    pub infeasibility_tol: f64,
    pub rank_tol: f64,
    pub max_iterations: usize,
    pub step_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub status: super::SdpStatus,
    /// Each block as rows of `[re, im]` pairs.
    pub blocks: Vec<Vec<Vec<[f64; 2]>>>,
    pub dual: Vec<f64>,
    pub objective_value: Option<f64>,
    pub dual_bound: Option<f64>,
    pub gap: Option<f64>,
    pub primal_residual: Option<f64>,
    pub dual_residual: Option<f64>,
    pub iterations: usize,
    pub certificate: Option<CertificateDocument>,
    pub settings: SettingsDocument,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn nested<T: Scalar>(h: &HermitianOperator<T>) -> Vec<Vec<[f64; 2]>> {
    rows(h.dim(), &flatten(h))
}

impl SolutionDocument {
    pub fn from_solution<T: Scalar>(sol: &SdpSolution<T>) -> Self {
        let f = |v: T| v.to_f64_lossy();
        Self {
            status: sol.status,
            blocks: sol.blocks.iter().map(nested).collect(),
            dual: sol.dual.iter().map(|v| f(*v)).collect(),
            objective_value: finite(f(sol.objective_value)),
            dual_bound: finite(f(sol.dual_bound)),
            gap: finite(f(sol.gap)),
            primal_residual: finite(f(sol.primal_residual)),
            dual_residual: finite(f(sol.dual_residual)),
            iterations: sol.iterations,
            certificate: sol.certificate.as_ref().map(|c| match c {
                Certificate::Farkas { y, margin, residual } => CertificateDocument::Farkas {
                    y: y.iter().map(|v| f(*v)).collect(),
                    margin: f(*margin),
                    residual: f(*residual),
                },
                Certificate::ImprovingRay { blocks, margin, residual } => CertificateDocument::ImprovingRay {
                    blocks: blocks.iter().map(nested).collect(),
                    margin: f(*margin),
                    residual: f(*residual),
                },
            }),
            settings: SettingsDocument {
                feasibility_tol: f(sol.settings.feasibility_tol),
                gap_tol: f(sol.settings.gap_tol),
                infeasibility_tol: f(sol.settings.infeasibility_tol),
                rank_tol: f(sol.settings.rank_tol),
                max_iterations: sol.settings.max_iterations,
                step_fraction: f(sol.settings.step_fraction),
            },
        }
    }
}
