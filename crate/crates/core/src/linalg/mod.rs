//! Dense complex linear algebra for the small operators that show up in
//! bipartite steering problems (dimension at most a few dozen).

mod complex;
mod dense;
mod hermitian;

pub use complex::ComplexMatrix;
pub use dense::{dot, norm2, HouseholderQr, LuFactor, RealMatrix, SemidefiniteCholesky};
pub use hermitian::{hermitian_basis, DensityMatrix, HermitianOperator, Subsystem};

use crate::error::Result;
use crate::scalar::Scalar;

/// Numerical thresholds used when validating states, effects and
/// assemblages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Trace, positivity and completeness checks.
    pub validity: T,
    /// Conjugate-symmetry checks.
    pub symmetry: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            validity: T::lit(1e-10),
            symmetry: T::lit(1e-12),
        }
    }
}

pub fn kron<T: Scalar>(a: &HermitianOperator<T>, b: &HermitianOperator<T>) -> HermitianOperator<T> {
    a.kron(b)
}

pub fn partial_trace<T: Scalar>(
    op: &HermitianOperator<T>,
    dims: (usize, usize),
    side: Subsystem,
) -> Result<HermitianOperator<T>> {
    op.partial_trace(dims, side)
}

pub fn min_eigenvalue<T: Scalar>(op: &HermitianOperator<T>) -> Result<T> {
    op.min_eigenvalue()
}
