//! Detection of linearly dependent equality rows.

use crate::linalg::{dot, norm2};
use crate::scalar::Scalar;

pub(crate) enum RowReduction<T> {
    /// Indices of a maximal independent subset of rows, in original order.
    Independent(Vec<usize>),
    /// Unit-norm multipliers with `A^T y ~ 0` and `b^T y = margin > 0`.
    Inconsistent { y: Vec<T>, margin: T, residual: T },
}

/// Modified Gram-Schmidt (two passes) over the rows, tracking each
/// orthonormalized row as a combination of the originals so that a
/// dependent row yields the exact multiplier vector that annihilates it.
pub(crate) fn reduce_rows<T: Scalar>(rows: &[Vec<T>], b: &[T], rank_tol: T, consistency_tol: T) -> RowReduction<T> {
    let m = rows.len();
    let b_inf = b.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let mut basis: Vec<(Vec<T>, Vec<T>, T)> = Vec::new();
    let mut kept = Vec::new();
    for (j, row) in rows.iter().enumerate() {
        let mut v = row.clone();
        let mut combo = vec![T::zero(); m];
        combo[j] = T::one();
        let mut beta = b[j];
        let norm0 = norm2(&v);
        for _ in 0..2 {
            for (q, qc, qb) in &basis {
                let c = dot(q, &v);
                if c == T::zero() {
                    continue;
                }
                for (vi, &qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
                for (ci, &qi) in combo.iter_mut().zip(qc) {
                    *ci -= c * qi;
                }
                beta -= c * *qb;
            }
        }
        let nv = norm2(&v);
        if nv <= rank_tol * norm0 || norm0 == T::zero() {
            let cnorm = norm2(&combo);
            if beta.abs() > consistency_tol * (T::one()).max(cnorm * b_inf) {
                let sign = beta.signum();
                let y = combo.iter().map(|&c| sign * c / cnorm).collect();
                return RowReduction::Inconsistent {
                    y,
                    margin: beta.abs() / cnorm,
                    residual: nv / cnorm,
                };
            }
            continue;
        }
        let inv = T::one() / nv;
        v.iter_mut().for_each(|x| *x *= inv);
        combo.iter_mut().for_each(|x| *x *= inv);
        basis.push((v, combo, beta * inv));
        kept.push(j);
    }
    RowReduction::Independent(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_consistent_duplicates() {
        let rows = vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![2.0, 1.0, 2.0]];
        match reduce_rows(&rows, &[1.0, 2.0, 4.0], 1e-9, 1e-8) {
            RowReduction::Independent(kept) => assert_eq!(kept, vec![0, 1]),
            RowReduction::Inconsistent { .. } => panic!("consistent system flagged"),
        }
    }

    #[test]
    fn certifies_inconsistent_duplicates() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        match reduce_rows(&rows, &[1.0, 2.0], 1e-9, 1e-8) {
            RowReduction::Inconsistent { y, margin, residual } => {
                assert!((y[0] + y[1]).abs() < 1e-12);
                assert!((margin - 1.0 / 2f64.sqrt()).abs() < 1e-12);
                assert!(residual < 1e-12);
            }
            RowReduction::Independent(_) => panic!("inconsistency missed"),
        }
    }

    #[test]
    fn zero_row_with_nonzero_rhs_is_inconsistent() {
        let rows = vec![vec![0.0, 0.0]];
        assert!(matches!(reduce_rows(&rows, &[3.0], 1e-9, 1e-8), RowReduction::Inconsistent { .. }));
        assert!(matches!(reduce_rows(&rows, &[0.0], 1e-9, 1e-8), RowReduction::Independent(k) if k.is_empty()));
    }
}
