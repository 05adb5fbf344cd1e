//! Homogeneous self-dual interior-point method on the realified problem.
//!
//! Internal form (minimization):
//!
//! ```text
//!   min  c^T x   s.t.  A x = b,  x_c in S_+ (per block),  x_f free
//!   max  b^T y   s.t.  A_c^T y + s = c_c,  s in S_+,  A_f^T y = c_f
//! ```
//!
//! embedded as `A x - b tau = 0`, `A^T y + s - c tau = 0`,
//! `c^T x - b^T y + kappa = 0`. Directions use Nesterov-Todd scaling and a
//! Mehrotra predictor-corrector. Free variables with independent columns
//! are eliminated up front; any others stay next to the Schur complement in
//! one augmented matrix.

mod eliminate;

use std::collections::HashMap;

use super::presolve::{reduce_rows, RowReduction};
use super::{BlockSdpProblem, Certificate, Cone, SdpSolution, SdpStatus, SolverSettings};
use crate::error::Result;
use crate::linalg::{dot, norm2, HermitianOperator, LuFactor, RealMatrix, SemidefiniteCholesky};
use crate::scalar::Scalar;
use eliminate::Elimination;

struct ConeBlock<T> {
    /// Index into the caller's block list.
    source: usize,
    /// Realified size `2n`.
    size: usize,
    /// Distinct realified coefficients `R(A)/2`.
    coeffs: Vec<RealMatrix<T>>,
    /// `(row, coefficient id)` pairs.
    terms: Vec<(usize, usize)>,
    /// Internal (minimization) cost `-R(C)/2`.
    cost: RealMatrix<T>,
}

struct FreeBlock {
    source: usize,
    dim: usize,
    offset: usize,
}

struct RealProblem<T> {
    b: Vec<T>,
    cones: Vec<ConeBlock<T>>,
    free_blocks: Vec<FreeBlock>,
    /// `m x nf` free-variable columns.
    a_free: RealMatrix<T>,
    c_free: Vec<T>,
    /// Constant added to both objectives once free variables are eliminated.
    offset: T,
}

impl<T: Scalar> RealProblem<T> {
    fn m(&self) -> usize {
        self.b.len()
    }

    fn nf(&self) -> usize {
        self.c_free.len()
    }

    /// Barrier parameter `nu` of the cone part.
    fn degree(&self) -> usize {
        self.cones.iter().map(|c| c.size).sum()
    }

    fn apply_a(&self, x: &[RealMatrix<T>], xf: &[T]) -> Vec<T> {
        let mut out = if self.nf() > 0 { self.a_free.mul_vec(xf) } else { vec![T::zero(); self.m()] };
        for (k, cone) in self.cones.iter().enumerate() {
            let vals: Vec<T> = cone.coeffs.iter().map(|a| a.inner(&x[k])).collect();
            for &(row, u) in &cone.terms {
                out[row] += vals[u];
            }
        }
        out
    }

    fn apply_at_block(&self, k: usize, y: &[T]) -> RealMatrix<T> {
        let cone = &self.cones[k];
        let mut weights = vec![T::zero(); cone.coeffs.len()];
        for &(row, u) in &cone.terms {
            weights[u] += y[row];
        }
        let mut out = RealMatrix::zeros(cone.size, cone.size);
        for (w, a) in weights.iter().zip(&cone.coeffs) {
            if *w != T::zero() {
                out.axpy(*w, a);
            }
        }
        out
    }

    fn apply_aft(&self, y: &[T]) -> Vec<T> {
        let nf = self.nf();
        let mut out = vec![T::zero(); nf];
        for (i, &yi) in y.iter().enumerate() {
            if yi == T::zero() {
                continue;
            }
            for (o, j) in out.iter_mut().zip(0..nf) {
                *o += yi * self.a_free[(i, j)];
            }
        }
        out
    }

    fn cost_norm(&self) -> T {
        (self.cones.iter().map(|c| c.cost.inner(&c.cost)).sum::<T>() + dot(&self.c_free, &self.c_free)).sqrt()
    }

    fn cost_dot(&self, x: &[RealMatrix<T>], xf: &[T]) -> T {
        self.cones.iter().zip(x).map(|(c, xk)| c.cost.inner(xk)).sum::<T>() + dot(&self.c_free, xf)
    }
}

/// Sums coefficients of repeated blocks within one row.
fn merged_terms<T: Scalar>(terms: &[super::Term<T>]) -> Vec<(usize, HermitianOperator<T>)> {
    let mut out: Vec<(usize, HermitianOperator<T>)> = Vec::new();
    for t in terms {
        match out.iter_mut().find(|(b, _)| *b == t.block) {
            Some((_, c)) => *c = c.add(&t.coeff),
            None => out.push((t.block, t.coeff.clone())),
        }
    }
    out
}

fn bits_key<T: Scalar>(h: &HermitianOperator<T>) -> Vec<u64> {
    h.coords().iter().map(|v| v.to_f64_lossy().to_bits()).collect()
}

/// Dense row matrix over all Hermitian coordinates, used for the rank check.
fn coordinate_rows<T: Scalar>(problem: &BlockSdpProblem<T>) -> Vec<Vec<T>> {
    let mut offsets = Vec::with_capacity(problem.blocks.len());
    let mut total = 0;
    for b in &problem.blocks {
        offsets.push(total);
        total += b.size * b.size;
    }
    problem
        .constraints
        .iter()
        .map(|c| {
            let mut row = vec![T::zero(); total];
            for t in &c.terms {
                for (i, v) in t.coeff.coords().into_iter().enumerate() {
                    row[offsets[t.block] + i] += v;
                }
            }
            row
        })
        .collect()
}

fn build_real_problem<T: Scalar>(problem: &BlockSdpProblem<T>, kept: &[usize]) -> RealProblem<T> {
    let half = T::lit(0.5);
    let mut cone_of_block = vec![usize::MAX; problem.blocks.len()];
    let mut cones = Vec::new();
    let mut free_blocks = Vec::new();
    let mut nf = 0;
    for (k, spec) in problem.blocks.iter().enumerate() {
        match spec.cone {
            Cone::Psd => {
                cone_of_block[k] = cones.len();
                cones.push(ConeBlock {
                    source: k,
                    size: 2 * spec.size,
                    coeffs: Vec::new(),
                    terms: Vec::new(),
                    cost: RealMatrix::zeros(2 * spec.size, 2 * spec.size),
                });
            }
            Cone::Free => {
                cone_of_block[k] = usize::MAX - 1 - free_blocks.len();
                free_blocks.push(FreeBlock { source: k, dim: spec.size, offset: nf });
                nf += spec.size * spec.size;
            }
        }
    }
    let free_index = |k: usize| usize::MAX - 1 - cone_of_block[k];

    let m = kept.len();
    let mut a_free = RealMatrix::zeros(m, nf);
    let mut c_free = vec![T::zero(); nf];
    let mut dedup: Vec<HashMap<Vec<u64>, usize>> = vec![HashMap::new(); cones.len()];

    for (row, &j) in kept.iter().enumerate() {
        for (k, coeff) in merged_terms(&problem.constraints[j].terms) {
            match problem.blocks[k].cone {
                Cone::Psd => {
                    let ci = cone_of_block[k];
                    let cone = &mut cones[ci];
                    let next = cone.coeffs.len();
                    let id = *dedup[ci].entry(bits_key(&coeff)).or_insert(next);
                    if id == next {
                        cone.coeffs.push(coeff.realify().scale(half));
                    }
                    cone.terms.push((row, id));
                }
                Cone::Free => {
                    let fb = &free_blocks[free_index(k)];
                    for (i, v) in coeff.coords().into_iter().enumerate() {
                        a_free[(row, fb.offset + i)] += v;
                    }
                }
            }
        }
    }
    for (k, coeff) in merged_terms(&problem.objective) {
        match problem.blocks[k].cone {
            Cone::Psd => {
                let cone = &mut cones[cone_of_block[k]];
                cone.cost.axpy(-half, &coeff.realify());
            }
            Cone::Free => {
                let fb = &free_blocks[free_index(k)];
                for (i, v) in coeff.coords().into_iter().enumerate() {
                    c_free[fb.offset + i] -= v;
                }
            }
        }
    }
    let b = kept.iter().map(|&j| problem.constraints[j].rhs).collect();
    RealProblem { b, cones, free_blocks, a_free, c_free, offset: T::zero() }
}

/// Nesterov-Todd scaling of one block: `W = R R^T`, `R^{-1} x R^{-T} =
/// R^T s R = diag(lambda)`.
struct Scaling<T> {
    r: RealMatrix<T>,
    r_inv: RealMatrix<T>,
    w: RealMatrix<T>,
    lambda: Vec<T>,
}

fn nt_scaling<T: Scalar>(x: &RealMatrix<T>, s: &RealMatrix<T>) -> Result<Scaling<T>> {
    let l1 = x.cholesky()?;
    let l2 = s.cholesky()?;
    let (u, sigma, v) = l2.transpose().matmul(&l1).svd()?;
    let inv_sqrt: Vec<T> = sigma.iter().map(|s| T::one() / s.sqrt()).collect();
    let n = x.rows();
    let r = RealMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| l1[(i, k)] * v[(k, j)]).sum::<T>() * inv_sqrt[j]
    });
    // R^{-1} = diag(sigma^{-1/2}) U^T L2^T
    let r_inv = RealMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| u[(k, i)] * l2[(j, k)]).sum::<T>() * inv_sqrt[i]
    });
    let mut w = r.matmul_transposed(&r);
    w.symmetrize();
    Ok(Scaling { r, r_inv, w, lambda: sigma })
}

fn sym_mul<T: Scalar>(w: &RealMatrix<T>, a: &RealMatrix<T>) -> RealMatrix<T> {
    // W A W for symmetric W
    w.congruence(a)
}

/// Largest `alpha` keeping `diag(lambda) + alpha * d` PSD (infinite if any
/// step is allowed).
fn max_step<T: Scalar>(lambda: &[T], d: &RealMatrix<T>) -> Result<T> {
    let n = lambda.len();
    let inv_sqrt: Vec<T> = lambda.iter().map(|l| T::one() / l.sqrt()).collect();
    let scaled = RealMatrix::from_fn(n, n, |i, j| d[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    let min = scaled.symmetric_eigenvalues()?[0];
    Ok(if min < T::zero() { -T::one() / min } else { T::infinity() })
}

fn jordan<T: Scalar>(a: &RealMatrix<T>, b: &RealMatrix<T>) -> RealMatrix<T> {
    let mut out = a.matmul(b);
    out.axpy(T::one(), &b.matmul(a));
    out.scale_mut(T::lit(0.5));
    out
}

#[derive(Clone)]
struct Iterate<T> {
    x: Vec<RealMatrix<T>>,
    s: Vec<RealMatrix<T>>,
    xf: Vec<T>,
    y: Vec<T>,
    tau: T,
    kappa: T,
}

struct Residuals<T> {
    rp: Vec<T>,
    rdc: Vec<RealMatrix<T>>,
    rdf: Vec<T>,
    rg: T,
}

#[derive(Clone, Copy)]
struct Metrics<T> {
    pobj: T,
    dobj: T,
    pres: T,
    dres: T,
    gap: T,
}

struct Step<T> {
    dx: Vec<RealMatrix<T>>,
    ds: Vec<RealMatrix<T>>,
    dx_scaled: Vec<RealMatrix<T>>,
    ds_scaled: Vec<RealMatrix<T>>,
    dxf: Vec<T>,
    dy: Vec<T>,
    dtau: T,
    dkappa: T,
}

impl<T: Scalar> Step<T> {
    fn add(&mut self, other: &Self) {
        let pairs = [
            (&mut self.dx, &other.dx),
            (&mut self.ds, &other.ds),
            (&mut self.dx_scaled, &other.dx_scaled),
            (&mut self.ds_scaled, &other.ds_scaled),
        ];
        for (mine, theirs) in pairs {
            for (a, b) in mine.iter_mut().zip(theirs) {
                a.axpy(T::one(), b);
            }
        }
        for (a, b) in self.dxf.iter_mut().zip(&other.dxf) {
            *a += *b;
        }
        for (a, b) in self.dy.iter_mut().zip(&other.dy) {
            *a += *b;
        }
        self.dtau += other.dtau;
        self.dkappa += other.dkappa;
    }
}

const REFINEMENT_ROUNDS: usize = 2;

/// How the reduced Newton system is factored. Degenerate problems make the
/// Schur complement numerically singular, and which treatment copes best
/// varies, so a failed run is retried with the next strategy.
#[derive(Debug, Clone, Copy)]
enum LinearStrategy {
    /// Rank-revealing Cholesky with the given relative pivot floor.
    Pivoted(f64),
    Lu,
}

const STRATEGIES: [LinearStrategy; 4] = [
    LinearStrategy::Pivoted(1e-16),
    LinearStrategy::Pivoted(1e-18),
    LinearStrategy::Lu,
    LinearStrategy::Pivoted(1e-13),
];

/// Factor of the reduced Newton matrix. Without free variables it is the
/// semidefinite Schur complement, factored with pivot dropping; otherwise
/// the indefinite augmented matrix goes through LU.
enum KktFactor<T> {
    Cholesky(SemidefiniteCholesky<T>),
    Lu(LuFactor<T>),
}

impl<T: Scalar> KktFactor<T> {
    fn solve_refined(&self, a: &RealMatrix<T>, b: &[T]) -> Vec<T> {
        match self {
            KktFactor::Lu(lu) => lu.solve_refined(a, b),
            KktFactor::Cholesky(ch) => {
                let mut x = ch.solve(b);
                let ax = a.mul_vec(&x);
                let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
                for (xi, di) in x.iter_mut().zip(ch.solve(&r)) {
                    *xi += di;
                }
                x
            }
        }
    }
}

/// Per-iteration data shared by the predictor and corrector solves.
struct Newton<'a, T> {
    prob: &'a RealProblem<T>,
    scal: Vec<Scaling<T>>,
    kkt: RealMatrix<T>,
    lu: KktFactor<T>,
    res: &'a Residuals<T>,
    /// `A_c(W r_dc W)` and `<c, W r_dc W>`.
    a_wr: Vec<T>,
    c_wr: T,
    h: Vec<T>,
    u2: Vec<T>,
    denom: T,
    tau: T,
    kappa: T,
}

impl<'a, T: Scalar> Newton<'a, T> {
    fn new(prob: &'a RealProblem<T>, it: &Iterate<T>, res: &'a Residuals<T>, strategy: LinearStrategy) -> Result<Self> {
        let m = prob.m();
        let nf = prob.nf();
        let scal = it
            .x
            .iter()
            .zip(&it.s)
            .map(|(x, s)| nt_scaling(x, s))
            .collect::<Result<Vec<_>>>()?;

        let mut kkt = RealMatrix::zeros(m + nf, m + nf);
        for (cone, sc) in prob.cones.iter().zip(&scal) {
            let wa: Vec<RealMatrix<T>> = cone.coeffs.iter().map(|a| sym_mul(&sc.w, a)).collect();
            let nu = cone.coeffs.len();
            let mut gram = vec![T::zero(); nu * nu];
            for u in 0..nu {
                for v in u..nu {
                    let g = cone.coeffs[u].inner(&wa[v]);
                    gram[u * nu + v] = g;
                    gram[v * nu + u] = g;
                }
            }
            for &(i, u) in &cone.terms {
                for &(j, v) in &cone.terms {
                    kkt[(i, j)] += gram[u * nu + v];
                }
            }
        }
        for i in 0..m {
            for j in 0..nf {
                let a = prob.a_free[(i, j)];
                kkt[(i, m + j)] = a;
                kkt[(m + j, i)] = a;
            }
        }
        let lu = match strategy {
            LinearStrategy::Pivoted(tol) if nf == 0 => KktFactor::Cholesky(SemidefiniteCholesky::new(&kkt, T::lit(tol))?),
            _ => match LuFactor::new(&kkt) {
                Ok(lu) => KktFactor::Lu(lu),
                Err(_) => {
                    let reg = kkt.max_abs().max(T::one()) * T::lit(1e-13);
                    for i in 0..m {
                        kkt[(i, i)] += reg;
                    }
                    for j in 0..nf {
                        kkt[(m + j, m + j)] -= reg;
                    }
                    KktFactor::Lu(LuFactor::new(&kkt)?)
                }
            },
        };

        let wc: Vec<RealMatrix<T>> = prob.cones.iter().zip(&scal).map(|(c, sc)| sym_mul(&sc.w, &c.cost)).collect();
        let h = prob.apply_a(&wc, &vec![T::zero(); nf]);
        let wr: Vec<RealMatrix<T>> = res.rdc.iter().zip(&scal).map(|(r, sc)| sym_mul(&sc.w, r)).collect();
        let a_wr = prob.apply_a(&wr, &vec![T::zero(); nf]);
        let c_wr: T = prob.cones.iter().zip(&wr).map(|(c, w)| c.cost.inner(w)).sum();

        // The tau pivot is a negative sum of squares. Evaluating it through
        // that form avoids the cancellation in the naive expression, which
        // otherwise swamps the step once the scaling grows.
        let mut g_c = h.clone();
        g_c.extend_from_slice(&prob.c_free);
        let z = lu.solve_refined(&kkt, &g_c);
        let mut g_b = prob.b.clone();
        g_b.extend(std::iter::repeat(T::zero()).take(nf));
        let w = lu.solve_refined(&kkt, &g_b);
        let mut pivot = it.kappa / it.tau;
        for (k, (cone, sc)) in prob.cones.iter().zip(&scal).enumerate() {
            let mut v = prob.apply_at_block(k, &z[..m]).scale(-T::one());
            v.axpy(T::one(), &cone.cost);
            pivot += v.inner(&sym_mul(&sc.w, &v));
            let aw = prob.apply_at_block(k, &w[..m]);
            pivot += aw.inner(&sym_mul(&sc.w, &aw));
        }
        let denom = -pivot;
        let u2: Vec<T> = z.iter().zip(&w).map(|(&a, &b)| a + b).collect();

        Ok(Self {
            prob,
            scal,
            kkt,
            lu,
            res,
            a_wr,
            c_wr,
            h,
            u2,
            denom,
            tau: it.tau,
            kappa: it.kappa,
        })
    }

    /// Solves the linearized system with residual weight `eta`, scaled
    /// complementarity right-hand sides `rc`, and `r_tau` for `tau*kappa`.
    /// The direction is refined against the unfactored equations, which
    /// matters once the scaling becomes badly conditioned.
    fn solve(&self, eta: T, rc: &[RealMatrix<T>], rtau: T) -> Step<T> {
        let prob = self.prob;
        let rp_t: Vec<T> = self.res.rp.iter().map(|&r| -eta * r).collect();
        let rdf_t: Vec<T> = self.res.rdf.iter().map(|&r| -eta * r).collect();
        let rg_t = -eta * self.res.rg;
        let mut step = self.solve_raw(&rp_t, eta, &rdf_t, rg_t, Some(rc), rtau);
        let zero_rc: Vec<RealMatrix<T>> = self.scal.iter().map(|sc| RealMatrix::zeros(sc.lambda.len(), sc.lambda.len())).collect();
        let error = |step: &Step<T>| {
            let ax = prob.apply_a(&step.dx, &step.dxf);
            let ep: Vec<T> = (0..prob.m()).map(|i| rp_t[i] - (ax[i] - prob.b[i] * step.dtau)).collect();
            let aft = prob.apply_aft(&step.dy);
            let ef: Vec<T> = (0..prob.nf()).map(|j| rdf_t[j] - (aft[j] - prob.c_free[j] * step.dtau)).collect();
            let eg = rg_t - (prob.cost_dot(&step.dx, &step.dxf) - dot(&prob.b, &step.dy) + step.dkappa);
            let size = norm2(&ep) + norm2(&ef) + eg.abs();
            (ep, ef, eg, size)
        };
        let (mut ep, mut ef, mut eg, mut size) = error(&step);
        for _ in 0..REFINEMENT_ROUNDS {
            if !(size > T::epsilon() * (norm2(&rp_t) + norm2(&rdf_t) + rg_t.abs())) {
                break;
            }
            // Kept only when it shrinks the error: near-singular systems can
            // make a correction worse than none.
            let mut trial = self.solve_raw(&ep, T::zero(), &ef, eg, Some(&zero_rc), T::zero());
            trial.add(&step);
            let next = error(&trial);
            if !(next.3 < size) {
                break;
            }
            step = trial;
            (ep, ef, eg, size) = next;
        }
        step
    }

    /// Direction for explicit targets: `A dx + A_f dxf - b dtau = rp_t`,
    /// `A_f^T dy - c_f dtau = rdf_t`, `c.dx - b.dy + dkappa = rg_t`, with
    /// the dual cone residual weighted by `eta_dc`.
    fn solve_raw(&self, rp_t: &[T], eta_dc: T, rdf_t: &[T], rg_t: T, rc: Option<&[RealMatrix<T>]>, rtau: T) -> Step<T> {
        let prob = self.prob;
        let m = prob.m();
        let two = T::lit(2.0);
        let u_blocks: Vec<RealMatrix<T>> = self
            .scal
            .iter()
            .enumerate()
            .map(|(k, sc)| {
                let n = sc.lambda.len();
                match rc {
                    Some(rc) => {
                        let r = &rc[k];
                        let q = RealMatrix::from_fn(n, n, |i, j| two * r[(i, j)] / (sc.lambda[i] + sc.lambda[j]));
                        sc.r.congruence(&q)
                    }
                    None => RealMatrix::zeros(n, n),
                }
            })
            .collect();
        let nf = prob.nf();
        let a_u = prob.apply_a(&u_blocks, &vec![T::zero(); nf]);
        let c_u: T = prob.cones.iter().zip(&u_blocks).map(|(c, u)| c.cost.inner(u)).sum();

        let mut rhs: Vec<T> = (0..m).map(|i| rp_t[i] - a_u[i] - eta_dc * self.a_wr[i]).collect();
        rhs.extend_from_slice(rdf_t);
        let u1 = self.lu.solve_refined(&self.kkt, &rhs);

        let hb: Vec<T> = self.h.iter().zip(&prob.b).map(|(&hi, &bi)| hi - bi).collect();
        let num = rg_t - c_u - eta_dc * self.c_wr - rtau / self.tau - dot(&hb, &u1[..m]) - dot(&prob.c_free, &u1[m..]);
        let dtau = num / self.denom;
        let dy: Vec<T> = (0..m).map(|i| u1[i] + dtau * self.u2[i]).collect();
        let dxf: Vec<T> = (0..nf).map(|i| u1[m + i] + dtau * self.u2[m + i]).collect();

        let mut dx = Vec::with_capacity(prob.cones.len());
        let mut ds = Vec::with_capacity(prob.cones.len());
        let mut dx_scaled = Vec::with_capacity(prob.cones.len());
        let mut ds_scaled = Vec::with_capacity(prob.cones.len());
        for (k, cone) in prob.cones.iter().enumerate() {
            let sc = &self.scal[k];
            let mut dsk = prob.apply_at_block(k, &dy).scale(-T::one());
            if eta_dc != T::zero() {
                dsk.axpy(-eta_dc, &self.res.rdc[k]);
            }
            dsk.axpy(dtau, &cone.cost);
            let mut dxk = u_blocks[k].clone();
            dxk.axpy(-T::one(), &sym_mul(&sc.w, &dsk));
            dx_scaled.push(sc.r_inv.congruence(&dxk));
            ds_scaled.push(sc.r.transpose().congruence(&dsk));
            dx.push(dxk);
            ds.push(dsk);
        }
        let dkappa = (rtau - self.kappa * dtau) / self.tau;
        Step { dx, ds, dx_scaled, ds_scaled, dxf, dy, dtau, dkappa }
    }

    fn max_step(&self, step: &Step<T>, it: &Iterate<T>) -> Result<T> {
        let mut alpha = T::infinity();
        for (k, sc) in self.scal.iter().enumerate() {
            alpha = alpha.min(max_step(&sc.lambda, &step.dx_scaled[k])?);
            alpha = alpha.min(max_step(&sc.lambda, &step.ds_scaled[k])?);
        }
        if step.dtau < T::zero() {
            alpha = alpha.min(-it.tau / step.dtau);
        }
        if step.dkappa < T::zero() {
            alpha = alpha.min(-it.kappa / step.dkappa);
        }
        Ok(alpha)
    }
}

fn residuals<T: Scalar>(prob: &RealProblem<T>, it: &Iterate<T>) -> Residuals<T> {
    let ax = prob.apply_a(&it.x, &it.xf);
    let rp = ax.iter().zip(&prob.b).map(|(&a, &b)| a - b * it.tau).collect();
    let rdc = (0..prob.cones.len())
        .map(|k| {
            let mut r = prob.apply_at_block(k, &it.y);
            r.axpy(T::one(), &it.s[k]);
            r.axpy(-it.tau, &prob.cones[k].cost);
            r
        })
        .collect();
    let rdf = prob
        .apply_aft(&it.y)
        .iter()
        .zip(&prob.c_free)
        .map(|(&a, &c)| a - c * it.tau)
        .collect();
    let rg = prob.cost_dot(&it.x, &it.xf) - dot(&prob.b, &it.y) + it.kappa;
    Residuals { rp, rdc, rdf, rg }
}

fn metrics<T: Scalar>(prob: &RealProblem<T>, it: &Iterate<T>, res: &Residuals<T>, nb: T, nc: T) -> Metrics<T> {
    let tau = it.tau;
    let pobj = prob.cost_dot(&it.x, &it.xf) / tau + prob.offset;
    let dobj = dot(&prob.b, &it.y) / tau + prob.offset;
    let pres = norm2(&res.rp) / tau / (T::one() + nb);
    let dsq: T = res.rdc.iter().map(|r| r.inner(r)).sum::<T>() + dot(&res.rdf, &res.rdf);
    let dres = dsq.sqrt() / tau / (T::one() + nc);
    let gap = (pobj - dobj).abs() / (T::one() + pobj.abs() + dobj.abs());
    Metrics { pobj, dobj, pres, dres, gap }
}

struct Outcome<T> {
    status: SdpStatus,
    it: Iterate<T>,
    metrics: Metrics<T>,
    iterations: usize,
    certificate: Option<RawCertificate<T>>,
}

enum RawCertificate<T> {
    Farkas { y: Vec<T>, margin: T, residual: T },
    Ray { x: Vec<RealMatrix<T>>, xf: Vec<T>, margin: T, residual: T },
}

fn run<T: Scalar>(prob: &RealProblem<T>, settings: &SolverSettings<T>, strategy: LinearStrategy) -> Outcome<T> {
    let m = prob.m();
    let nf = prob.nf();
    let nu = T::from_usize_lossy(prob.degree() + 1);
    let nb = norm2(&prob.b);
    let nc = prob.cost_norm();

    let mut it = Iterate {
        x: prob.cones.iter().map(|c| RealMatrix::identity(c.size)).collect(),
        s: prob.cones.iter().map(|c| RealMatrix::identity(c.size)).collect(),
        xf: vec![T::zero(); nf],
        y: vec![T::zero(); m],
        tau: T::one(),
        kappa: T::one(),
    };

    // Once the tolerances are met, a few extra steps push the reported
    // bounds into the weak-duality order; the first converged point is
    // kept in case those steps stall.
    let mut converged: Option<(Iterate<T>, Metrics<T>, usize)> = None;
    let polish_limit = 10;
    let mut iterations = 0;
    loop {
        let res = residuals(prob, &it);
        let met = metrics(prob, &it, &res, nb, nc);

        if met.pres <= settings.feasibility_tol && met.dres <= settings.feasibility_tol && met.gap <= settings.gap_tol {
            let ordered = met.pobj - met.dobj >= -T::lit(1e-10) * (T::one() + met.pobj.abs() + met.dobj.abs());
            if ordered {
                return Outcome { status: SdpStatus::Optimal, it, metrics: met, iterations, certificate: None };
            }
            if converged.is_none() {
                converged = Some((it.clone(), met, iterations));
            }
        }
        if let Some((first, first_met, first_iter)) = &converged {
            if iterations >= first_iter + polish_limit {
                let (it, metrics) = (first.clone(), *first_met);
                return Outcome { status: SdpStatus::Optimal, it, metrics, iterations, certificate: None };
            }
        } else if let Some(cert) = infeasibility(prob, &it, settings, nb, nc) {
            let status = match cert {
                RawCertificate::Farkas { .. } => SdpStatus::PrimalInfeasible,
                RawCertificate::Ray { .. } => SdpStatus::DualInfeasible,
            };
            return Outcome { status, it, metrics: met, iterations, certificate: Some(cert) };
        }
        if iterations >= settings.max_iterations && converged.is_none() {
            return Outcome { status: SdpStatus::NumericFailure, it, metrics: met, iterations, certificate: None };
        }

        let stepped = matches!(iterate_once(prob, &mut it, &res, settings, nu, strategy), Ok(true));
        if !stepped {
            if let Some((it, metrics, _)) = converged {
                return Outcome { status: SdpStatus::Optimal, it, metrics, iterations, certificate: None };
            }
            return Outcome { status: SdpStatus::NumericFailure, it, metrics: met, iterations, certificate: None };
        }
        iterations += 1;
    }
}

/// One predictor-corrector step. Returns `Ok(false)` on a stalled step.
fn iterate_once<T: Scalar>(
    prob: &RealProblem<T>,
    it: &mut Iterate<T>,
    res: &Residuals<T>,
    settings: &SolverSettings<T>,
    nu: T,
    strategy: LinearStrategy,
) -> Result<bool> {
    let newton = Newton::new(prob, it, res, strategy)?;
    let gap: T = it.x.iter().zip(&it.s).map(|(x, s)| x.inner(s)).sum::<T>() + it.tau * it.kappa;
    let mu = gap / nu;

    // predictor
    let rc_aff: Vec<RealMatrix<T>> = newton
        .scal
        .iter()
        .map(|sc| RealMatrix::diag(&sc.lambda.iter().map(|l| -*l * *l).collect::<Vec<_>>()))
        .collect();
    let aff = newton.solve(T::one(), &rc_aff, -it.tau * it.kappa);
    let alpha_aff = newton.max_step(&aff, it)?.min(T::one());
    let sigma = (T::one() - alpha_aff).powi(3).max(T::zero()).min(T::one());

    // corrector
    let rc: Vec<RealMatrix<T>> = newton
        .scal
        .iter()
        .enumerate()
        .map(|(k, sc)| {
            let mut r = RealMatrix::diag(&sc.lambda.iter().map(|l| sigma * mu - *l * *l).collect::<Vec<_>>());
            r.axpy(-T::one(), &jordan(&aff.dx_scaled[k], &aff.ds_scaled[k]));
            r
        })
        .collect();
    let rtau = -it.tau * it.kappa + sigma * mu - aff.dtau * aff.dkappa;
    let step = newton.solve(T::one() - sigma, &rc, rtau);
    let alpha_max = newton.max_step(&step, it)?;
    let alpha = (settings.step_fraction * alpha_max).min(T::one());
    if !(alpha > T::lit(1e-12)) || !step.dtau.is_finite() {
        return Ok(false);
    }

    for k in 0..it.x.len() {
        it.x[k].axpy(alpha, &step.dx[k]);
        it.x[k].symmetrize();
        it.s[k].axpy(alpha, &step.ds[k]);
        it.s[k].symmetrize();
    }
    for (v, d) in it.xf.iter_mut().zip(&step.dxf) {
        *v += alpha * *d;
    }
    for (v, d) in it.y.iter_mut().zip(&step.dy) {
        *v += alpha * *d;
    }
    it.tau += alpha * step.dtau;
    it.kappa += alpha * step.dkappa;
    Ok(true)
}

fn infeasibility<T: Scalar>(
    prob: &RealProblem<T>,
    it: &Iterate<T>,
    settings: &SolverSettings<T>,
    nb: T,
    nc: T,
) -> Option<RawCertificate<T>> {
    let tiny = T::lit(1e-8);
    let by = dot(&prob.b, &it.y);
    if by > T::zero() {
        let mut sq = T::zero();
        for k in 0..prob.cones.len() {
            let mut r = prob.apply_at_block(k, &it.y);
            r.axpy(T::one(), &it.s[k]);
            sq += r.inner(&r);
        }
        let af = prob.apply_aft(&it.y);
        sq += dot(&af, &af);
        let res = sq.sqrt();
        if res / T::one().max(nc) / by <= settings.infeasibility_tol {
            let ynorm = norm2(&it.y);
            let margin = by / ynorm;
            if margin > tiny {
                return Some(RawCertificate::Farkas {
                    y: it.y.iter().map(|v| *v / ynorm).collect(),
                    margin,
                    residual: res / ynorm,
                });
            }
        }
    }
    let cx = prob.cost_dot(&it.x, &it.xf);
    if cx < T::zero() {
        let ax = prob.apply_a(&it.x, &it.xf);
        let res = norm2(&ax);
        if res / T::one().max(nb) / (-cx) <= settings.infeasibility_tol {
            let xnorm = (it.x.iter().map(|x| x.inner(x)).sum::<T>() + dot(&it.xf, &it.xf)).sqrt();
            let margin = -cx / xnorm;
            if margin > tiny {
                return Some(RawCertificate::Ray {
                    x: it.x.iter().map(|x| x.scale(T::one() / xnorm)).collect(),
                    xf: it.xf.iter().map(|v| *v / xnorm).collect(),
                    margin,
                    residual: res / xnorm,
                });
            }
        }
    }
    None
}

/// Reassembles Hermitian blocks from cone matrices and free coordinates.
fn hermitian_blocks<T: Scalar>(
    problem: &BlockSdpProblem<T>,
    prob: &RealProblem<T>,
    x: &[RealMatrix<T>],
    xf: &[T],
    scale: T,
) -> Vec<HermitianOperator<T>> {
    let mut out: Vec<HermitianOperator<T>> = problem.blocks.iter().map(|b| HermitianOperator::zeros(b.size)).collect();
    for (cone, xk) in prob.cones.iter().zip(x) {
        out[cone.source] = HermitianOperator::from_realified(&xk.scale(scale)).expect("even square block");
    }
    for fb in &prob.free_blocks {
        let coords: Vec<T> = xf[fb.offset..fb.offset + fb.dim * fb.dim].iter().map(|v| *v * scale).collect();
        out[fb.source] = HermitianOperator::from_coords(fb.dim, &coords).expect("coordinate count");
    }
    out
}

pub(super) fn solve<T: Scalar>(problem: &BlockSdpProblem<T>, settings: &SolverSettings<T>) -> Result<SdpSolution<T>> {
    let m_total = problem.constraints.len();
    let b_full: Vec<T> = problem.constraints.iter().map(|c| c.rhs).collect();
    let kept = match reduce_rows(&coordinate_rows(problem), &b_full, settings.rank_tol, settings.infeasibility_tol) {
        RowReduction::Independent(kept) => kept,
        RowReduction::Inconsistent { y, margin, residual } => {
            return Ok(SdpSolution {
                status: SdpStatus::PrimalInfeasible,
                blocks: Vec::new(),
                dual: vec![T::zero(); m_total],
                objective_value: T::nan(),
                dual_bound: T::nan(),
                gap: T::nan(),
                primal_residual: T::nan(),
                dual_residual: T::nan(),
                iterations: 0,
                certificate: Some(Certificate::Farkas { y, margin, residual }),
                settings: *settings,
            });
        }
    };
    let prob = build_real_problem(problem, &kept);
    let elimination = Elimination::new(&prob, settings.rank_tol);
    let working = elimination.as_ref().map_or(&prob, |(_, reduced)| reduced);
    let strategies: &[LinearStrategy] = if working.nf() == 0 { &STRATEGIES } else { &[LinearStrategy::Lu] };
    let mut total = 0;
    let mut out = None;
    for &strategy in strategies {
        let attempt = run(working, settings, strategy);
        total += attempt.iterations;
        let done = attempt.status != SdpStatus::NumericFailure;
        out = Some(attempt);
        if done {
            break;
        }
    }
    let mut out = out.expect("at least one strategy");
    out.iterations = total;
    if let Some((elim, _)) = &elimination {
        out = elim.expand(&prob, out);
    }

    let mut dual = vec![T::zero(); m_total];
    let inv_tau = T::one() / out.it.tau;
    for (row, &j) in kept.iter().enumerate() {
        // maximization dual uses the opposite sign
        dual[j] = -out.it.y[row] * inv_tau;
    }
    let certificate = out.certificate.map(|c| match c {
        RawCertificate::Farkas { y, margin, residual } => {
            let mut full = vec![T::zero(); m_total];
            for (row, &j) in kept.iter().enumerate() {
                full[j] = y[row];
            }
            Certificate::Farkas { y: full, margin, residual }
        }
        RawCertificate::Ray { x, xf, margin, residual } => Certificate::ImprovingRay {
            blocks: hermitian_blocks(problem, &prob, &x, &xf, T::one()),
            margin,
            residual,
        },
    });
    let blocks = if out.status == SdpStatus::Optimal {
        hermitian_blocks(problem, &prob, &out.it.x, &out.it.xf, inv_tau)
    } else {
        Vec::new()
    };
    Ok(SdpSolution {
        status: out.status,
        blocks,
        dual,
        objective_value: -out.metrics.pobj,
        dual_bound: -out.metrics.dobj,
        gap: out.metrics.gap,
        primal_residual: out.metrics.pres,
        dual_residual: out.metrics.dres,
        iterations: out.iterations,
        certificate,
        settings: *settings,
    })
}
