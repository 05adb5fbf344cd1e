//! Removal of free variables whose columns have full rank.
//!
//! With `A_f = Q [R; 0]`, the leading rotated rows fix `x_f` once the cone
//! part is known, and the trailing rows `Q_2^T A_c x = Q_2^T b` involve the
//! cones alone. Multipliers split as `y = g + Q_2 y_2` with
//! `g = Q_1 R^{-T} c_f`, which moves the free costs into the cone costs and
//! a constant offset. The reduced problem has no free variables, so its
//! Schur complement is semidefinite and the pivoted Cholesky path applies.

use super::{ConeBlock, Iterate, Outcome, RawCertificate, RealProblem};
use crate::linalg::{dot, norm2, HouseholderQr, RealMatrix};
use crate::scalar::Scalar;

pub(super) struct Elimination<T> {
    qr: HouseholderQr<T>,
    g: Vec<T>,
}

impl<T: Scalar> Elimination<T> {
    /// `None` when there is nothing to eliminate or the free columns are
    /// numerically dependent; the caller then keeps the augmented system.
    pub(super) fn new(prob: &RealProblem<T>, rank_tol: T) -> Option<(Self, RealProblem<T>)> {
        let (m, nf) = (prob.m(), prob.nf());
        if nf == 0 || m <= nf {
            return None;
        }
        let qr = HouseholderQr::new(&prob.a_free, rank_tol)?;
        let qt = qr.q_transpose();
        let t = qr.solve_rt(&prob.c_free);
        let g: Vec<T> = (0..m).map(|j| (0..nf).map(|i| qt[(i, j)] * t[i]).sum()).collect();
        let rotate = |v: &[T], i: usize| -> T { (0..m).map(|j| qt[(nf + i, j)] * v[j]).sum() };

        let m2 = m - nf;
        let b = (0..m2).map(|i| rotate(&prob.b, i)).collect();
        let cones = prob
            .cones
            .iter()
            .map(|cone| {
                // rows carrying each distinct coefficient
                let mut rows_of = vec![Vec::new(); cone.coeffs.len()];
                for &(row, u) in &cone.terms {
                    rows_of[u].push(row);
                }
                let mut cost = cone.cost.clone();
                for (u, rows) in rows_of.iter().enumerate() {
                    let weight: T = rows.iter().map(|&j| g[j]).sum();
                    if weight != T::zero() {
                        cost.axpy(-weight, &cone.coeffs[u]);
                    }
                }
                let mut coeffs = Vec::new();
                let mut terms = Vec::new();
                for i in 0..m2 {
                    let mut acc = RealMatrix::zeros(cone.size, cone.size);
                    let mut touched = false;
                    for (u, rows) in rows_of.iter().enumerate() {
                        let weight: T = rows.iter().map(|&j| qt[(nf + i, j)]).sum();
                        if weight != T::zero() {
                            acc.axpy(weight, &cone.coeffs[u]);
                            touched = true;
                        }
                    }
                    if touched {
                        terms.push((i, coeffs.len()));
                        coeffs.push(acc);
                    }
                }
                ConeBlock { source: cone.source, size: cone.size, coeffs, terms, cost }
            })
            .collect();
        let reduced = RealProblem {
            b,
            cones,
            free_blocks: Vec::new(),
            a_free: RealMatrix::zeros(m2, 0),
            c_free: Vec::new(),
            offset: prob.offset + dot(&g, &prob.b),
        };
        Some((Self { qr, g }, reduced))
    }

    /// `Q_2 y_2`.
    fn lift_dual(&self, y2: &[T]) -> Vec<T> {
        let qt = self.qr.q_transpose();
        let (m, nf) = (qt.rows(), self.qr.r().rows());
        (0..m).map(|j| y2.iter().enumerate().map(|(i, &v)| qt[(nf + i, j)] * v).sum()).collect()
    }

    /// Free coordinates solving the leading rotated rows for `rhs = b tau - A_c x`.
    fn free_part(&self, rhs: &[T]) -> Vec<T> {
        let qt = self.qr.q_transpose();
        let nf = self.qr.r().rows();
        let head: Vec<T> = (0..nf).map(|i| rhs.iter().enumerate().map(|(j, &v)| qt[(i, j)] * v).sum()).collect();
        self.qr.solve_r(&head)
    }

    /// Maps a run on the reduced problem back onto the original one.
    pub(super) fn expand(&self, prob: &RealProblem<T>, out: Outcome<T>) -> Outcome<T> {
        let nf = prob.nf();
        let zeros = vec![T::zero(); nf];
        let Outcome { status, it, iterations, certificate, .. } = out;

        let ax = prob.apply_a(&it.x, &zeros);
        let rhs: Vec<T> = prob.b.iter().zip(&ax).map(|(&b, &a)| b * it.tau - a).collect();
        let xf = self.free_part(&rhs);
        let mut y = self.lift_dual(&it.y);
        for (yi, gi) in y.iter_mut().zip(&self.g) {
            *yi += *gi * it.tau;
        }
        let it = Iterate { x: it.x, s: it.s, xf, y, tau: it.tau, kappa: it.kappa };

        let certificate = certificate.map(|c| match c {
            RawCertificate::Farkas { y, margin, residual } => RawCertificate::Farkas { y: self.lift_dual(&y), margin, residual },
            RawCertificate::Ray { x, .. } => {
                let ax = prob.apply_a(&x, &zeros);
                let neg: Vec<T> = ax.iter().map(|&v| -v).collect();
                let xf = self.free_part(&neg);
                let norm = (x.iter().map(|b| b.inner(b)).sum::<T>() + dot(&xf, &xf)).sqrt();
                let x: Vec<RealMatrix<T>> = x.iter().map(|b| b.scale(T::one() / norm)).collect();
                let xf: Vec<T> = xf.iter().map(|v| *v / norm).collect();
                let margin = -prob.cost_dot(&x, &xf);
                let residual = norm2(&prob.apply_a(&x, &xf));
                RawCertificate::Ray { x, xf, margin, residual }
            }
        });

        let nb = norm2(&prob.b);
        let nc = prob.cost_norm();
        let res = super::residuals(prob, &it);
        let metrics = super::metrics(prob, &it, &res, nb, nc);
        Outcome { status, it, metrics, iterations, certificate }
    }
}
