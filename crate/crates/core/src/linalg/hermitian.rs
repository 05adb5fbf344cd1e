use num_complex::Complex;

use super::{ComplexMatrix, RealMatrix, Tolerances};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Which factor of a bipartite space an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subsystem {
    First,
    Second,
}

/// Square complex matrix equal to its own adjoint.
///
/// Construction always symmetrizes `H <- (H + H^dagger) / 2`, so every value
/// of this type is exactly Hermitian up to rounding in that average.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<T> {
    matrix: ComplexMatrix<T>,
}

impl<T: Scalar> HermitianOperator<T> {
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        if !matrix.is_square() {
            return invalid(format!(
                "hermitian operator needs a square matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            ));
        }
        let n = matrix.rows();
        let half = T::lit(0.5);
        let sym = ComplexMatrix::from_fn(n, n, |i, j| (matrix[(i, j)] + matrix[(j, i)].conj()) * half);
        Ok(Self { matrix: sym })
    }

    /// Wraps a matrix the caller has already built Hermitian. Only the
    /// diagonal imaginary parts are cleared.
    pub(crate) fn from_hermitian_unchecked(mut matrix: ComplexMatrix<T>) -> Self {
        debug_assert!(matrix.is_square());
        for i in 0..matrix.rows() {
            matrix[(i, i)].im = T::zero();
        }
        Self { matrix }
    }

    pub fn zeros(n: usize) -> Self {
        Self { matrix: ComplexMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(n) }
    }

    pub fn diag(values: &[T]) -> Self {
        let n = values.len();
        Self {
            matrix: ComplexMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex::new(values[i], T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            }),
        }
    }

    /// Rank-one operator `|v><v|`.
    pub fn projector(v: &[Complex<T>]) -> Self {
        Self::from_hermitian_unchecked(ComplexMatrix::outer(v, v))
    }

    /// Builds a real symmetric operator from row-major entries; used mostly
    /// in tests and fixtures.
    pub fn from_real(n: usize, entries: &[T]) -> Result<Self> {
        if entries.len() != n * n {
            return invalid("entry count does not match dimension");
        }
        Self::new(ComplexMatrix::from_fn(n, n, |i, j| Complex::new(entries[i * n + j], T::zero())))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// Hilbert-Schmidt inner product `trace(self * other)`, real for
    /// Hermitian arguments.
    pub fn inner(&self, other: &Self) -> T {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.matrix
            .entries()
            .iter()
            .zip(other.matrix.entries())
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.inner(self).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self { matrix: self.matrix.scale(s) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { matrix: self.matrix.add(&other.matrix) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { matrix: self.matrix.sub(&other.matrix) }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: T, other: &Self) -> Self {
        Self { matrix: self.matrix.add(&other.matrix.scale(s)) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.matrix.max_abs_diff(&other.matrix)
    }

    /// Entrywise transpose; equals the complex conjugate for Hermitian input.
    pub fn transpose(&self) -> Self {
        Self { matrix: self.matrix.transpose() }
    }

    /// `B self B^dagger` for an arbitrary square `b` of matching size.
    pub fn conjugate_by(&self, b: &ComplexMatrix<T>) -> Self {
        Self::from_hermitian_unchecked(b.matmul(&self.matrix).matmul(&b.adjoint()))
            .resymmetrized()
    }

    fn resymmetrized(self) -> Self {
        Self::new(self.matrix).expect("square by construction")
    }

    /// Tensor product `self (x) other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self { matrix: self.matrix.kron(&other.matrix) }
    }

    /// Traces out `side` of a bipartite operator on `dims.0 x dims.1`, returning
    /// the reduced operator on the remaining factor.
    pub fn partial_trace(&self, dims: (usize, usize), side: Subsystem) -> Result<Self> {
        let (d1, d2) = dims;
        if d1 == 0 || d2 == 0 || d1 * d2 != self.dim() {
            return invalid(format!(
                "partial trace dims {d1}x{d2} do not match operator dimension {}",
                self.dim()
            ));
        }
        let zero = Complex::new(T::zero(), T::zero());
        let m = &self.matrix;
        let out = match side {
            Subsystem::First => ComplexMatrix::from_fn(d2, d2, |i, j| {
                (0..d1).fold(zero, |acc, k| acc + m[(k * d2 + i, k * d2 + j)])
            }),
            Subsystem::Second => ComplexMatrix::from_fn(d1, d1, |i, j| {
                (0..d2).fold(zero, |acc, k| acc + m[(i * d2 + k, j * d2 + k)])
            }),
        };
        Ok(Self::from_hermitian_unchecked(out))
    }

    /// Exchanges the two tensor factors: `A (x) B -> B (x) A`.
    pub fn swap_factors(&self, dims: (usize, usize)) -> Result<Self> {
        let (d1, d2) = dims;
        if d1 * d2 != self.dim() {
            return invalid("swap dims do not match operator dimension");
        }
        let m = &self.matrix;
        let perm = |idx: usize| {
            let (b, a) = (idx / d1, idx % d1);
            a * d2 + b
        };
        Ok(Self {
            matrix: ComplexMatrix::from_fn(d1 * d2, d1 * d2, |i, j| m[(perm(i), perm(j))]),
        })
    }

    /// Real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]`.
    pub fn realify(&self) -> RealMatrix<T> {
        let n = self.dim();
        let m = &self.matrix;
        RealMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let z = m[(i % n, j % n)];
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        })
    }

    /// Inverse of [`realify`](Self::realify) that also accepts embeddings
    /// lacking the block structure, by averaging the redundant copies.
    pub fn from_realified(y: &RealMatrix<T>) -> Result<Self> {
        if !y.is_square() || y.rows() % 2 != 0 {
            return invalid("realified operator must be square with even size");
        }
        let n = y.rows() / 2;
        let half = T::lit(0.5);
        let m = ComplexMatrix::from_fn(n, n, |i, j| {
            Complex::new(
                (y[(i, j)] + y[(i + n, j + n)]) * half,
                (y[(i + n, j)] - y[(i, j + n)]) * half,
            )
        });
        Self::new(m)
    }

    /// Ascending eigenvalues, computed from the realified embedding where each
    /// eigenvalue appears twice.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        let doubled = self.realify().symmetric_eigenvalues()?;
        let half = T::lit(0.5);
        Ok(doubled.chunks(2).map(|p| (p[0] + p[1]) * half).collect())
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        self.eigenvalues()?
            .first()
            .copied()
            .ok_or_else(|| Error::InvalidArgument("empty operator".into()))
    }

    /// Coordinates in the orthonormal basis returned by [`hermitian_basis`].
    pub fn coords(&self) -> Vec<T> {
        let n = self.dim();
        let sqrt2 = T::lit(2.0).sqrt();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            out.push(self.matrix[(i, i)].re);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let z = self.matrix[(i, j)];
                out.push(sqrt2 * z.re);
                out.push(sqrt2 * z.im);
            }
        }
        out
    }

    /// Rebuilds an operator from basis coordinates.
    pub fn from_coords(n: usize, coords: &[T]) -> Result<Self> {
        if coords.len() != n * n {
            return invalid(format!("expected {} hermitian coordinates, got {}", n * n, coords.len()));
        }
        let inv_sqrt2 = T::one() / T::lit(2.0).sqrt();
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(coords[i], T::zero());
        }
        let mut k = n;
        for i in 0..n {
            for j in (i + 1)..n {
                let z = Complex::new(coords[k] * inv_sqrt2, coords[k + 1] * inv_sqrt2);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
                k += 2;
            }
        }
        Ok(Self { matrix: m })
    }

    pub fn is_psd(&self, tol: T) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -tol)
    }
}

/// Orthonormal basis of the real vector space of `n x n` Hermitian matrices
/// under `<A, B> = trace(AB)`: the diagonal units, then for each `i < j` the
/// symmetric and antisymmetric off-diagonal pairs scaled by `1/sqrt(2)`.
pub fn hermitian_basis<T: Scalar>(n: usize) -> Vec<HermitianOperator<T>> {
    (0..n * n)
        .map(|k| {
            let mut e = vec![T::zero(); n * n];
            e[k] = T::one();
            HermitianOperator::from_coords(n, &e).expect("length matches")
        })
        .collect()
}

/// A Hermitian operator with unit trace and no eigenvalue below `-tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    op: HermitianOperator<T>,
}

impl<T: Scalar> DensityMatrix<T> {
    pub fn new(op: HermitianOperator<T>, tol: &Tolerances<T>) -> Result<Self> {
        let tr = op.trace();
        if (tr - T::one()).abs() > tol.validity {
            return invalid(format!("density matrix trace is {tr}, expected 1"));
        }
        let min = op.min_eigenvalue()?;
        if min < -tol.validity {
            return invalid(format!("density matrix has negative eigenvalue {min}"));
        }
        Ok(Self { op })
    }

    pub fn with_default_tolerances(op: HermitianOperator<T>) -> Result<Self> {
        Self::new(op, &Tolerances::default())
    }

    #[inline]
    pub fn op(&self) -> &HermitianOperator<T> {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator<T> {
        self.op
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Reduced state on the factor that survives tracing out `side`.
    pub fn reduced(&self, dims: (usize, usize), side: Subsystem) -> Result<Self> {
        Ok(Self { op: self.op.partial_trace(dims, side)? })
    }

    pub fn swap_factors(&self, dims: (usize, usize)) -> Result<Self> {
        Ok(Self { op: self.op.swap_factors(dims)? })
    }
}
