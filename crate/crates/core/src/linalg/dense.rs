//! Small dense real matrices and the factorizations the solver needs.
//!
//! Everything here is row-major and sized for blocks of a few dozen rows at
//! most; no blocking or vectorization tricks are attempted.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_JACOBI_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> RealMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == T::zero() {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * other^T`.
    pub fn matmul_transposed(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = &self.data[i * self.cols..(i + 1) * self.cols];
            for j in 0..other.rows {
                let b_row = &other.data[j * other.cols..(j + 1) * other.cols];
                out.data[i * other.rows + j] = dot(a_row, b_row);
            }
        }
        out
    }

    /// `A B A^T` for a square `b`, symmetrized on output.
    pub fn congruence(&self, b: &Self) -> Self {
        let mut out = self.matmul(b).matmul_transposed(self);
        out.symmetrize();
        out
    }

    pub fn symmetrize(&mut self) {
        debug_assert!(self.is_square());
        let n = self.rows;
        let half = T::lit(0.5);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = (self.data[i * n + j] + self.data[j * n + i]) * half;
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn scale_mut(&mut self, s: T) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: T, other: &Self) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(T::one(), other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-T::one(), other);
        out
    }

    /// Frobenius inner product `trace(self^T other)`.
    pub fn inner(&self, other: &Self) -> T {
        dot(&self.data, &other.data)
    }

    pub fn frobenius_norm(&self) -> T {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| dot(&self.data[i * self.cols..(i + 1) * self.cols], v))
            .collect()
    }

    /// Lower Cholesky factor `L` with `self = L L^T`.
    pub fn cholesky(&self) -> Result<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return Err(Error::NumericFailure(format!(
                    "cholesky pivot {j} is not positive"
                )));
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut v = self[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / d;
            }
        }
        Ok(l)
    }

    /// Swaps rows and columns `i` and `j` together.
    pub fn swap_symmetric(&mut self, i: usize, j: usize) {
        let n = self.cols;
        for k in 0..self.rows {
            self.data.swap(i * n + k, j * n + k);
        }
        for k in 0..self.rows {
            self.data.swap(k * n + i, k * n + j);
        }
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Eigenvalues are returned in ascending order, eigenvectors as the
    /// matching columns.
    pub fn symmetric_eigen(&self) -> Result<(Vec<T>, Self)> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        a.symmetrize();
        let mut v = Self::identity(n);
        let scale = a.frobenius_norm();
        if scale == T::zero() {
            return Ok((vec![T::zero(); n], v));
        }
        let target = T::epsilon() * scale;
        let mut converged = false;
        for _ in 0..MAX_JACOBI_SWEEPS {
            let mut off = T::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            if off.sqrt() <= target {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= T::min_positive_value() {
                        continue;
                    }
                    let (c, s) = jacobi_rotation(a[(p, p)], a[(q, q)], apq);
                    rotate_symmetric(&mut a, p, q, c, s);
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        if !converged {
            return Err(Error::NumericFailure(
                "jacobi eigensolver did not converge".into(),
            ));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| a[(i, i)]).collect();
        let vectors = Self::from_fn(n, n, |r, c| v[(r, order[c])]);
        Ok((values, vectors))
    }

    pub fn symmetric_eigenvalues(&self) -> Result<Vec<T>> {
        self.symmetric_eigen().map(|(values, _)| values)
    }

    /// Singular value decomposition `self = U diag(sigma) V^T` of a square
    /// matrix via one-sided Jacobi. Singular values are not sorted.
    pub fn svd(&self) -> Result<(Self, Vec<T>, Self)> {
        assert!(self.is_square());
        let n = self.rows;
        // Work on columns of A, accumulating the right rotations in V.
        let mut a = self.clone();
        let mut v = Self::identity(n);
        // A bare epsilon threshold can cycle forever on rounding noise.
        let tol = T::from_usize_lossy(n.max(1)) * T::epsilon();
        let floor = {
            let f = self.frobenius_norm() * T::epsilon();
            f * f
        };
        let mut converged = false;
        for _ in 0..MAX_JACOBI_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = T::zero();
                    for k in 0..n {
                        let ap = a[(k, p)];
                        let aq = a[(k, q)];
                        alpha += ap * ap;
                        beta += aq * aq;
                        gamma += ap * aq;
                    }
                    if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma.abs() <= floor {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    for k in 0..n {
                        let ap = a[(k, p)];
                        let aq = a[(k, q)];
                        a[(k, p)] = c * ap - s * aq;
                        a[(k, q)] = s * ap + c * aq;
                        let vp = v[(k, p)];
                        let vq = v[(k, q)];
                        v[(k, p)] = c * vp - s * vq;
                        v[(k, q)] = s * vp + c * vq;
                    }
                }
            }
            if !rotated {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NumericFailure("jacobi svd did not converge".into()));
        }
        let mut sigma = vec![T::zero(); n];
        let mut u = Self::zeros(n, n);
        for j in 0..n {
            let norm = (0..n).map(|k| a[(k, j)] * a[(k, j)]).sum::<T>().sqrt();
            sigma[j] = norm;
            if norm > T::zero() {
                for k in 0..n {
                    u[(k, j)] = a[(k, j)] / norm;
                }
            }
        }
        if sigma.iter().any(|&s| s == T::zero()) {
            return Err(Error::NumericFailure("singular matrix in svd".into()));
        }
        Ok((u, sigma, v))
    }
}

impl<T> Index<(usize, usize)> for RealMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for RealMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn jacobi_rotation<T: Scalar>(app: T, aqq: T, apq: T) -> (T, T) {
    let theta = (aqq - app) / (T::lit(2.0) * apq);
    let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
    let c = T::one() / (T::one() + t * t).sqrt();
    (c, t * c)
}

fn rotate_symmetric<T: Scalar>(a: &mut RealMatrix<T>, p: usize, q: usize, c: T, s: T) {
    let n = a.rows;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
}

/// Rank-revealing Cholesky factor `P A P^T = L L^T` of a positive
/// semidefinite matrix, with diagonal pivoting. Elimination stops once the
/// largest remaining pivot falls below `rel_tol` times the largest
/// diagonal; solves return zero along the unresolved directions instead of
/// amplifying rounding noise there.
#[derive(Debug, Clone)]
pub struct SemidefiniteCholesky<T> {
    /// Column-major lower factor in pivoted order, `rank` columns.
    l: RealMatrix<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Scalar> SemidefiniteCholesky<T> {
    pub fn new(a: &RealMatrix<T>, rel_tol: T) -> Result<Self> {
        assert!(a.is_square());
        let n = a.rows;
        let mut w = a.clone();
        w.symmetrize();
        let top = (0..n).map(|i| w[(i, i)]).fold(T::zero(), |m, v| m.max(v));
        if !(top > T::zero()) {
            return Err(Error::NumericFailure("semidefinite cholesky of a zero matrix".into()));
        }
        let floor = top * rel_tol;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rank = 0;
        for k in 0..n {
            let (piv, pval) = (k..n)
                .map(|i| (i, w[(i, i)]))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pval > floor) {
                break;
            }
            if piv != k {
                perm.swap(k, piv);
                w.swap_symmetric(k, piv);
            }
            let d = w[(k, k)].sqrt();
            w[(k, k)] = d;
            for i in (k + 1)..n {
                w[(i, k)] = w[(i, k)] / d;
            }
            for j in (k + 1)..n {
                let ljk = w[(j, k)];
                if ljk == T::zero() {
                    continue;
                }
                // Full update: later symmetric swaps read both triangles.
                for i in (k + 1)..n {
                    let v = w[(i, k)] * ljk;
                    w[(i, j)] -= v;
                }
            }
            rank += 1;
        }
        Ok(Self { l: w, perm, rank })
    }

    /// Number of directions left unresolved.
    pub fn deficiency(&self) -> usize {
        self.perm.len() - self.rank
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.perm.len();
        let r = self.rank;
        let mut z: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..r {
            let mut v = z[i];
            for k in 0..i {
                v -= self.l[(i, k)] * z[k];
            }
            z[i] = v / self.l[(i, i)];
        }
        for zi in z.iter_mut().skip(r) {
            *zi = T::zero();
        }
        for i in (0..r).rev() {
            let mut v = z[i];
            for k in (i + 1)..r {
                v -= self.l[(k, i)] * z[k];
            }
            z[i] = v / self.l[(i, i)];
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }
}

/// Householder QR of a tall matrix with full column rank, `A = Q [R; 0]`.
/// `Q^T` is kept explicitly since callers need both of its row blocks.
#[derive(Debug, Clone)]
pub struct HouseholderQr<T> {
    qt: RealMatrix<T>,
    r: RealMatrix<T>,
}

impl<T: Scalar> HouseholderQr<T> {
    /// `None` when a diagonal of `R` falls below `rel_tol` times the
    /// largest column norm, i.e. the columns are numerically dependent.
    pub fn new(a: &RealMatrix<T>, rel_tol: T) -> Option<Self> {
        let (m, n) = (a.rows, a.cols);
        if n > m {
            return None;
        }
        let scale = (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)] * a[(i, j)]).sum::<T>().sqrt())
            .fold(T::zero(), |acc, v| acc.max(v));
        if n > 0 && !(scale > T::zero()) {
            return None;
        }
        let mut w = a.clone();
        // Reflectors applied to the identity accumulate `Q^T` directly.
        let mut qt = RealMatrix::identity(m);
        for k in 0..n {
            let norm = (k..m).map(|i| w[(i, k)] * w[(i, k)]).sum::<T>().sqrt();
            if !(norm > rel_tol * scale) {
                return None;
            }
            let alpha = if w[(k, k)] > T::zero() { -norm } else { norm };
            let mut v: Vec<T> = (k..m).map(|i| w[(i, k)]).collect();
            v[0] -= alpha;
            let vn = norm2(&v);
            v.iter_mut().for_each(|x| *x /= vn);
            let reflect = |mat: &mut RealMatrix<T>, from: usize| {
                for j in from..mat.cols {
                    let d = (k..m).map(|i| v[i - k] * mat[(i, j)]).sum::<T>();
                    let d2 = d + d;
                    for i in k..m {
                        mat[(i, j)] -= d2 * v[i - k];
                    }
                }
            };
            reflect(&mut w, k);
            reflect(&mut qt, 0);
        }
        let r = RealMatrix::from_fn(n, n, |i, j| if i <= j { w[(i, j)] } else { T::zero() });
        Some(Self { qt, r })
    }

    pub fn q_transpose(&self) -> &RealMatrix<T> {
        &self.qt
    }

    pub fn r(&self) -> &RealMatrix<T> {
        &self.r
    }

    /// Solves `R x = b`.
    pub fn solve_r(&self, b: &[T]) -> Vec<T> {
        let n = self.r.rows;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let s = ((i + 1)..n).map(|j| self.r[(i, j)] * x[j]).sum::<T>();
            x[i] = (x[i] - s) / self.r[(i, i)];
        }
        x
    }

    /// Solves `R^T x = b`.
    pub fn solve_rt(&self, b: &[T]) -> Vec<T> {
        let n = self.r.rows;
        let mut x = b.to_vec();
        for i in 0..n {
            let s = (0..i).map(|j| self.r[(j, i)] * x[j]).sum::<T>();
            x[i] = (x[i] - s) / self.r[(i, i)];
        }
        x
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactor<T> {
    lu: RealMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> LuFactor<T> {
    pub fn new(a: &RealMatrix<T>) -> Result<Self> {
        assert!(a.is_square());
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(T::min_positive_value());
        for k in 0..n {
            let (piv, pval) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pval > scale * T::epsilon() * T::lit(1e-4)) {
                return Err(Error::NumericFailure(format!(
                    "singular linear system at pivot {k}"
                )));
            }
            if piv != k {
                perm.swap(piv, k);
                for j in 0..n {
                    lu.data.swap(k * n + j, piv * n + j);
                }
            }
            let d = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f == T::zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let ukj = lu.data[k * n + j];
                    lu.data[i * n + j] -= f * ukj;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut v = x[i];
            for k in 0..i {
                v -= self.lu[(i, k)] * x[k];
            }
            x[i] = v;
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            for k in (i + 1)..n {
                v -= self.lu[(i, k)] * x[k];
            }
            x[i] = v / self.lu[(i, i)];
        }
        x
    }

    /// Solve followed by one round of iterative refinement against `a`.
    pub fn solve_refined(&self, a: &RealMatrix<T>, b: &[T]) -> Vec<T> {
        let mut x = self.solve(b);
        let ax = a.mul_vec(&x);
        let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        let dx = self.solve(&r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
        x
    }
}
