//! Bipartite state families: the d-dimensional partially entangled states,
//! their two-qutrit angle parameterization, and isotropic states.

use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::linalg::{DensityMatrix, HermitianOperator};
use crate::scalar::Scalar;

/// Mixing weight and Schmidt amplitudes of a partially entangled state
/// `p |psi_a><psi_a| + (1 - p) rho_a (x) I/d` with `|psi_a> = sum_i a_i |ii>`.
#[derive(Debug, Clone, PartialEq)]
pub struct PesParams<T> {
    p: T,
    amps: Vec<T>,
}

impl<T: Scalar> PesParams<T> {
    pub fn new(p: T, amps: Vec<T>) -> Result<Self> {
        check_weight(p)?;
        if amps.len() < 2 {
            return invalid("partially entangled state needs dimension >= 2");
        }
        if amps.iter().any(|a| !(a.is_finite() && *a >= T::zero())) {
            return invalid("schmidt amplitudes must be finite and nonnegative");
        }
        let norm: T = amps.iter().map(|&a| a * a).sum();
        if (norm - T::one()).abs() > T::lit(1e-10) {
            return invalid(format!("schmidt amplitudes must form a unit vector (norm^2 = {norm})"));
        }
        Ok(Self { p, amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn amps(&self) -> &[T] {
        &self.amps
    }
}

/// Angles of the two-qutrit family: amplitudes
/// `(cos t sin f, sin t sin f, cos f)` with `t in [0, pi/4]`, `f in [0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritAngles<T> {
    pub theta: T,
    pub phi: T,
}

impl<T: Scalar> QutritAngles<T> {
    /// Angles a little outside the ranges, as when `pi/4` is written to four
    /// decimals, are accepted and clamped onto them.
    pub fn new(theta: T, phi: T) -> Result<Self> {
        let slack = T::lit(5e-5);
        if !(theta >= -slack && theta <= T::FRAC_PI_4() + slack) {
            return invalid(format!("theta = {theta} outside [0, pi/4]"));
        }
        if !(phi >= -slack && phi <= T::FRAC_PI_2() + slack) {
            return invalid(format!("phi = {phi} outside [0, pi/2]"));
        }
        Ok(Self {
            theta: theta.max(T::zero()).min(T::FRAC_PI_4()),
            phi: phi.max(T::zero()).min(T::FRAC_PI_2()),
        })
    }

    pub fn amplitudes(&self) -> Vec<T> {
        let (st, ct) = self.theta.sin_cos();
        let (sf, cf) = self.phi.sin_cos();
        vec![ct * sf, st * sf, cf]
    }
}

fn check_weight<T: Scalar>(p: T) -> Result<()> {
    if !(p >= T::zero() && p <= T::one()) {
        return invalid(format!("mixing weight p = {p} outside [0, 1]"));
    }
    Ok(())
}

pub fn pes_state<T: Scalar>(params: &PesParams<T>) -> Result<DensityMatrix<T>> {
    let d = params.dim();
    let amps = params.amps();
    let mut psi = vec![Complex::new(T::zero(), T::zero()); d * d];
    for (i, &a) in amps.iter().enumerate() {
        psi[i * d + i] = Complex::new(a, T::zero());
    }
    let pure = HermitianOperator::projector(&psi);
    let reduced = HermitianOperator::diag(&amps.iter().map(|&a| a * a).collect::<Vec<_>>());
    let noise = reduced.kron(&HermitianOperator::identity(d).scale(T::one() / T::from_usize_lossy(d)));
    let p = params.p();
    DensityMatrix::with_default_tolerances(pure.scale(p).add(&noise.scale(T::one() - p)))
}

pub fn qutrit_pes<T: Scalar>(p: T, angles: QutritAngles<T>) -> Result<DensityMatrix<T>> {
    pes_state(&PesParams::new(p, angles.amplitudes())?)
}

/// `p |Phi+><Phi+| + (1 - p) I / d^2` with `|Phi+>` the equal-amplitude state.
pub fn isotropic_state<T: Scalar>(d: usize, p: T) -> Result<DensityMatrix<T>> {
    check_weight(p)?;
    if d < 2 {
        return invalid("isotropic state needs dimension >= 2");
    }
    let amp = T::one() / T::from_usize_lossy(d).sqrt();
    let mut psi = vec![Complex::new(T::zero(), T::zero()); d * d];
    for i in 0..d {
        psi[i * d + i] = Complex::new(amp, T::zero());
    }
    let pure = HermitianOperator::projector(&psi);
    let noise = HermitianOperator::identity(d * d).scale(T::one() / T::from_usize_lossy(d * d));
    DensityMatrix::with_default_tolerances(pure.scale(p).add(&noise.scale(T::one() - p)))
}

/// A one-parameter state family indexed by the mixing weight `p`.
#[derive(Debug, Clone, PartialEq)]
pub enum StateFamily<T> {
    Isotropic { dim: usize },
    PartiallyEntangled { amps: Vec<T> },
}

impl<T: Scalar> StateFamily<T> {
    pub fn qutrit(angles: QutritAngles<T>) -> Self {
        Self::PartiallyEntangled { amps: angles.amplitudes() }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Isotropic { dim } => *dim,
            Self::PartiallyEntangled { amps } => amps.len(),
        }
    }

    pub fn at(&self, p: T) -> Result<DensityMatrix<T>> {
        match self {
            Self::Isotropic { dim } => isotropic_state(*dim, p),
            Self::PartiallyEntangled { amps } => pes_state(&PesParams::new(p, amps.clone())?),
        }
    }
}
