//! Measurement families and deterministic response strategies.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::linalg::{ComplexMatrix, HermitianOperator, Tolerances};
use crate::scalar::Scalar;

/// Effects `M_{a|x}` stored as `effects[x][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet<T> {
    dim: usize,
    effects: Vec<Vec<HermitianOperator<T>>>,
}

impl<T: Scalar> MeasurementSet<T> {
    /// Validates positivity and completeness of every setting.
    pub fn new(effects: Vec<Vec<HermitianOperator<T>>>, tol: &Tolerances<T>) -> Result<Self> {
        let dim = match effects.first().and_then(|s| s.first()) {
            Some(e) => e.dim(),
            None => return invalid("measurement set needs at least one setting with one outcome"),
        };
        let identity = HermitianOperator::identity(dim);
        for (x, setting) in effects.iter().enumerate() {
            if setting.is_empty() {
                return invalid(format!("setting {x} has no outcomes"));
            }
            let mut total = HermitianOperator::zeros(dim);
            for (a, effect) in setting.iter().enumerate() {
                if effect.dim() != dim {
                    return invalid(format!("effect ({a},{x}) has dimension {}, expected {dim}", effect.dim()));
                }
                if effect.min_eigenvalue()? < -tol.validity {
                    return invalid(format!("effect ({a},{x}) is not positive semidefinite"));
                }
                total = total.add(effect);
            }
            if total.max_abs_diff(&identity) > tol.validity {
                return invalid(format!("effects of setting {x} do not sum to the identity"));
            }
        }
        Ok(Self { dim, effects })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn settings(&self) -> usize {
        self.effects.len()
    }

    /// Largest outcome count over settings; equal for every setting in the
    /// families built here.
    pub fn outcomes(&self) -> usize {
        self.effects.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn effect(&self, a: usize, x: usize) -> &HermitianOperator<T> {
        &self.effects[x][a]
    }

    pub fn setting(&self, x: usize) -> &[HermitianOperator<T>] {
        &self.effects[x]
    }
}

pub fn is_prime(d: usize) -> bool {
    d >= 2 && (2..).take_while(|k| k * k <= d).all(|k| d % k != 0)
}

/// Basis vectors of the canonical complete MUB set: `vectors[j][k]` is the
/// `k`-th vector of basis `j`.
pub fn mub_vectors<T: Scalar>(d: usize) -> Result<Vec<Vec<Vec<Complex<T>>>>> {
    if !is_prime(d) {
        return Err(Error::UnsupportedDimension(d));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let computational: Vec<Vec<Complex<T>>> = (0..d)
        .map(|k| (0..d).map(|l| if l == k { one } else { zero }).collect())
        .collect();
    let mut bases = vec![computational];
    let amp = T::one() / T::from_usize_lossy(d).sqrt();
    if d == 2 {
        let r = Complex::new(amp, T::zero());
        let i = Complex::new(T::zero(), amp);
        bases.push(vec![vec![r, r], vec![r, -r]]);
        bases.push(vec![vec![r, i], vec![r, -i]]);
        return Ok(bases);
    }
    let two_pi_over_d = T::TAU() / T::from_usize_lossy(d);
    for j in 1..=d {
        let basis = (0..d)
            .map(|k| {
                (0..d)
                    .map(|l| {
                        let phase = (j * l * l + k * l) % d;
                        Complex::from_polar(amp, two_pi_over_d * T::from_usize_lossy(phase))
                    })
                    .collect()
            })
            .collect();
        bases.push(basis);
    }
    Ok(bases)
}

/// The `d + 1` mutually unbiased bases for prime `d`, as rank-one projective
/// measurements in canonical order (computational basis first).
pub fn mub<T: Scalar>(d: usize) -> Result<MeasurementSet<T>> {
    let effects = mub_vectors::<T>(d)?
        .iter()
        .map(|basis| basis.iter().map(|v| HermitianOperator::projector(v)).collect())
        .collect();
    MeasurementSet::new(effects, &Tolerances { validity: T::lit(1e-9), ..Tolerances::default() })
}

/// First `m` settings in canonical order.
pub fn take_settings<T: Scalar>(ms: &MeasurementSet<T>, m: usize) -> Result<MeasurementSet<T>> {
    if m == 0 || m > ms.settings() {
        return invalid(format!("setting count {m} outside 1..={}", ms.settings()));
    }
    Ok(MeasurementSet {
        dim: ms.dim,
        effects: ms.effects[..m].to_vec(),
    })
}

/// Reorders settings by `order`, which must be a permutation of a subset of
/// the setting indices (no repeats).
pub fn reorder_settings<T: Scalar>(ms: &MeasurementSet<T>, order: &[usize]) -> Result<MeasurementSet<T>> {
    let mut seen = vec![false; ms.settings()];
    for &x in order {
        if x >= ms.settings() || std::mem::replace(&mut seen[x], true) {
            return invalid(format!("setting order {order:?} is not a valid selection"));
        }
    }
    if order.is_empty() {
        return invalid("setting order is empty");
    }
    Ok(MeasurementSet {
        dim: ms.dim,
        effects: order.iter().map(|&x| ms.effects[x].clone()).collect(),
    })
}

/// Orthonormality and unbiasedness errors of a basis family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MubReport<T> {
    pub max_gram_error: T,
    pub max_overlap_error: T,
}

impl<T: Scalar> MubReport<T> {
    pub fn passed(&self, tol: T) -> bool {
        self.max_gram_error <= tol && self.max_overlap_error <= tol
    }
}

pub fn verify_mub<T: Scalar>(bases: &[Vec<Vec<Complex<T>>>]) -> MubReport<T> {
    let inner = |u: &[Complex<T>], v: &[Complex<T>]| {
        u.iter()
            .zip(v)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
    };
    let d = bases.first().map_or(1, |b| b.len());
    let inv_d = T::one() / T::from_usize_lossy(d);
    let mut gram = T::zero();
    let mut overlap = T::zero();
    for (j, bj) in bases.iter().enumerate() {
        for (jp, bjp) in bases.iter().enumerate() {
            for (k, u) in bj.iter().enumerate() {
                for (kp, v) in bjp.iter().enumerate() {
                    let ip = inner(u, v);
                    if j == jp {
                        let target = if k == kp { T::one() } else { T::zero() };
                        gram = gram.max((ip - Complex::new(target, T::zero())).norm());
                    } else {
                        overlap = overlap.max((ip.norm_sqr() - inv_d).abs());
                    }
                }
            }
        }
    }
    MubReport {
        max_gram_error: gram,
        max_overlap_error: overlap,
    }
}

/// Basis vectors as a unitary whose columns are the vectors; handy for
/// printing and for building rotated measurements.
pub fn basis_matrix<T: Scalar>(basis: &[Vec<Complex<T>>]) -> ComplexMatrix<T> {
    let d = basis.len();
    ComplexMatrix::from_fn(d, d, |l, k| basis[k][l])
}

/// Deterministic response function `x -> a(x)`, the `index`-th assignment in
/// little-endian base-`outcomes` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeterministicStrategy {
    index: usize,
    settings: usize,
    outcomes: usize,
}

impl DeterministicStrategy {
    pub fn new(index: usize, settings: usize, outcomes: usize) -> Result<Self> {
        let space = StrategySpace::new(settings, outcomes)?;
        if index >= space.len() {
            return invalid(format!("strategy index {index} >= {}", space.len()));
        }
        Ok(Self { index, settings, outcomes })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Outcome answered for setting `x`: digit `x` of the index in base `o`.
    pub fn outcome(&self, x: usize) -> usize {
        debug_assert!(x < self.settings);
        (self.index / self.outcomes.pow(x as u32)) % self.outcomes
    }

    /// `D(a|x)`: 1 when the strategy answers `a` to `x`.
    pub fn response(&self, a: usize, x: usize) -> u8 {
        u8::from(self.outcome(x) == a)
    }

    pub fn outcomes_tuple(&self) -> Vec<usize> {
        (0..self.settings).map(|x| self.outcome(x)).collect()
    }
}

/// All `outcomes^settings` deterministic strategies, indexable so that
/// parallel workers can address them without shared state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrategySpace {
    settings: usize,
    outcomes: usize,
    len: usize,
}

impl StrategySpace {
    pub fn new(settings: usize, outcomes: usize) -> Result<Self> {
        if settings == 0 || outcomes == 0 {
            return invalid("strategies need at least one setting and one outcome");
        }
        let len = (0..settings)
            .try_fold(1usize, |acc, _| acc.checked_mul(outcomes))
            .ok_or_else(|| Error::InvalidArgument("strategy count overflows".into()))?;
        Ok(Self { settings, outcomes, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn settings(&self) -> usize {
        self.settings
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn get(&self, index: usize) -> DeterministicStrategy {
        assert!(index < self.len);
        DeterministicStrategy {
            index,
            settings: self.settings,
            outcomes: self.outcomes,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = DeterministicStrategy> + '_ {
        (0..self.len).map(|i| self.get(i))
    }
}

pub fn strategy_outcome(s: &DeterministicStrategy, x: usize) -> usize {
    s.outcome(x)
}
