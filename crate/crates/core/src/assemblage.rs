//! Assemblages `sigma_{a|x}` prepared on the steered party, and their
//! loss-extended (priori) form.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, HermitianOperator, Subsystem};
use crate::measurements::MeasurementSet;
use crate::scalar::Scalar;

/// Who measures and who is steered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Alice measures, Bob's conditional states are characterized.
    #[serde(rename = "a2b")]
    AtoB,
    /// Bob measures, Alice's conditional states are characterized.
    #[serde(rename = "b2a")]
    BtoA,
}

impl Direction {
    /// Subsystem that is traced out to get the steered party's marginal.
    pub fn steering_side(self) -> Subsystem {
        match self {
            Direction::AtoB => Subsystem::First,
            Direction::BtoA => Subsystem::Second,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::AtoB => Direction::BtoA,
            Direction::BtoA => Direction::AtoB,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::AtoB => "a2b",
            Direction::BtoA => "b2a",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a2b" | "AtoB" => Ok(Direction::AtoB),
            "b2a" | "BtoA" => Ok(Direction::BtoA),
            other => invalid(format!("unknown direction '{other}' (expected a2b or b2a)")),
        }
    }
}

/// Heralding efficiency, either shared by all settings or given per setting.
#[derive(Debug, Clone, PartialEq)]
pub enum Efficiency<T> {
    Uniform(T),
    PerSetting(Vec<T>),
}

impl<T: Scalar> Efficiency<T> {
    pub fn lossless() -> Self {
        Efficiency::Uniform(T::one())
    }

    pub fn at(&self, x: usize) -> T {
        match self {
            Efficiency::Uniform(e) => *e,
            Efficiency::PerSetting(v) => v[x],
        }
    }

    pub fn is_lossless(&self) -> bool {
        match self {
            Efficiency::Uniform(e) => *e == T::one(),
            Efficiency::PerSetting(v) => v.iter().all(|e| *e == T::one()),
        }
    }

    /// Checks `0 < eps <= 1` for every setting and the length of a
    /// per-setting vector.
    pub fn check(&self, settings: usize) -> Result<()> {
        let values: Vec<T> = match self {
            Efficiency::Uniform(e) => vec![*e],
            Efficiency::PerSetting(v) => {
                if v.len() != settings {
                    return invalid(format!("{} efficiencies given for {settings} settings", v.len()));
                }
                v.clone()
            }
        };
        for e in values {
            if !(e > T::zero() && e <= T::one()) {
                return invalid(format!("efficiency {e} outside (0, 1]"));
            }
        }
        Ok(())
    }

    /// Smallest efficiency over the settings.
    pub fn min(&self) -> T {
        match self {
            Efficiency::Uniform(e) => *e,
            Efficiency::PerSetting(v) => v.iter().copied().fold(T::infinity(), T::min),
        }
    }
}

/// Conditional states `members[x][a]` on the steered party.
#[derive(Debug, Clone, PartialEq)]
pub struct Assemblage<T> {
    dim: usize,
    members: Vec<Vec<HermitianOperator<T>>>,
    direction: Direction,
    efficiency: Efficiency<T>,
}

impl<T: Scalar> Assemblage<T> {
    /// Wraps an explicit member family. Shapes are checked; physical validity
    /// is left to [`validate`].
    pub fn new(
        members: Vec<Vec<HermitianOperator<T>>>,
        direction: Direction,
        efficiency: Efficiency<T>,
    ) -> Result<Self> {
        let dim = match members.first().and_then(|s| s.first()) {
            Some(m) => m.dim(),
            None => return invalid("assemblage needs at least one member"),
        };
        let outcomes = members[0].len();
        for setting in &members {
            if setting.len() != outcomes || setting.iter().any(|m| m.dim() != dim) {
                return invalid("assemblage members must share dimension and outcome count");
            }
        }
        efficiency.check(members.len())?;
        Ok(Self { dim, members, direction, efficiency })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn settings(&self) -> usize {
        self.members.len()
    }

    pub fn outcomes(&self) -> usize {
        self.members[0].len()
    }

    pub fn member(&self, a: usize, x: usize) -> &HermitianOperator<T> {
        &self.members[x][a]
    }

    pub fn members(&self) -> &[Vec<HermitianOperator<T>>] {
        &self.members
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn efficiency(&self) -> &Efficiency<T> {
        &self.efficiency
    }

    /// `sum_a sigma_{a|x}` for one setting.
    pub fn marginal(&self, x: usize) -> HermitianOperator<T> {
        self.members[x]
            .iter()
            .fold(HermitianOperator::zeros(self.dim), |acc, m| acc.add(m))
    }
}

/// `Tr_A((M (x) I) rho)` for `AtoB`, `Tr_B((I (x) M) rho)` for `BtoA`.
fn conditional_state<T: Scalar>(
    rho: &HermitianOperator<T>,
    effect: &HermitianOperator<T>,
    d: usize,
    direction: Direction,
) -> Result<HermitianOperator<T>> {
    let r = rho.matrix();
    let m = effect.matrix();
    let zero = Complex::new(T::zero(), T::zero());
    let out = ComplexMatrix::from_fn(d, d, |i, j| {
        let mut acc = zero;
        for k in 0..d {
            for l in 0..d {
                let mkl = m[(k, l)];
                if mkl == zero {
                    continue;
                }
                let entry = match direction {
                    Direction::AtoB => r[(l * d + i, k * d + j)],
                    Direction::BtoA => r[(i * d + l, j * d + k)],
                };
                acc = acc + mkl * entry;
            }
        }
        acc
    });
    HermitianOperator::new(out)
}

pub fn make_assemblage<T: Scalar>(
    rho: &DensityMatrix<T>,
    ms: &MeasurementSet<T>,
    direction: Direction,
) -> Result<Assemblage<T>> {
    let d = ms.dim();
    if rho.dim() != d * d {
        return invalid(format!(
            "state dimension {} does not match measurement dimension {d} squared",
            rho.dim()
        ));
    }
    let members = (0..ms.settings())
        .map(|x| {
            ms.setting(x)
                .iter()
                .map(|effect| conditional_state(rho.op(), effect, d, direction))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Assemblage::new(members, direction, Efficiency::lossless())
}

/// Loss-extended assemblage: every lossless member is scaled by `eps(x)` and
/// a null outcome `(1 - eps(x)) rho_steered` is appended as the last outcome.
pub fn make_priori<T: Scalar>(
    asm: &Assemblage<T>,
    rho_steered: &DensityMatrix<T>,
    eps: &Efficiency<T>,
) -> Result<Assemblage<T>> {
    if !asm.efficiency().is_lossless() {
        return invalid("priori assemblage must be built from a lossless assemblage");
    }
    eps.check(asm.settings())?;
    if rho_steered.dim() != asm.dim() {
        return invalid("steered state dimension does not match the assemblage");
    }
    let members = asm
        .members()
        .iter()
        .enumerate()
        .map(|(x, setting)| {
            let e = eps.at(x);
            let mut out: Vec<_> = setting.iter().map(|m| m.scale(e)).collect();
            out.push(rho_steered.op().scale(T::one() - e));
            out
        })
        .collect();
    Assemblage::new(members, asm.direction(), eps.clone())
}

/// Priori assemblage with the steered marginal taken from `rho` itself.
pub fn priori_from_state<T: Scalar>(
    rho: &DensityMatrix<T>,
    ms: &MeasurementSet<T>,
    direction: Direction,
    eps: &Efficiency<T>,
) -> Result<Assemblage<T>> {
    let d = ms.dim();
    let lossless = make_assemblage(rho, ms, direction)?;
    let steered = rho.reduced((d, d), direction.steering_side())?;
    make_priori(&lossless, &steered, eps)
}

/// Thresholds for [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblageTolerances<T> {
    pub psd: T,
    pub no_signalling: T,
    pub normalization: T,
}

impl<T: Scalar> Default for AssemblageTolerances<T> {
    fn default() -> Self {
        Self {
            psd: T::lit(1e-10),
            no_signalling: T::lit(1e-9),
            normalization: T::lit(1e-9),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport<T> {
    /// Smallest eigenvalue over all members.
    pub psd_margin: T,
    /// Largest entrywise difference between marginals of different settings.
    pub no_signalling_residual: T,
    /// Largest `|trace(sum_a sigma_{a|x}) - 1|`.
    pub normalization_residual: T,
    pub psd_ok: bool,
    pub no_signalling_ok: bool,
    pub normalization_ok: bool,
}

impl<T> ValidationReport<T> {
    pub fn passed(&self) -> bool {
        self.psd_ok && self.no_signalling_ok && self.normalization_ok
    }
}

pub fn validate<T: Scalar>(asm: &Assemblage<T>) -> ValidationReport<T> {
    validate_with(asm, &AssemblageTolerances::default())
}

pub fn validate_with<T: Scalar>(asm: &Assemblage<T>, tol: &AssemblageTolerances<T>) -> ValidationReport<T> {
    let mut psd_margin = T::infinity();
    for setting in asm.members() {
        for m in setting {
            // an eigensolver failure counts as a PSD failure
            let ev = m.min_eigenvalue().unwrap_or(T::neg_infinity());
            psd_margin = psd_margin.min(ev);
        }
    }
    let marginals: Vec<_> = (0..asm.settings()).map(|x| asm.marginal(x)).collect();
    let no_signalling_residual = marginals
        .iter()
        .skip(1)
        .fold(T::zero(), |acc, m| acc.max(m.max_abs_diff(&marginals[0])));
    let normalization_residual = marginals
        .iter()
        .fold(T::zero(), |acc, m| acc.max((m.trace() - T::one()).abs()));
    ValidationReport {
        psd_margin,
        no_signalling_residual,
        normalization_residual,
        psd_ok: psd_margin >= -tol.psd,
        no_signalling_ok: no_signalling_residual <= tol.no_signalling,
        normalization_ok: normalization_residual <= tol.normalization,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::{mub, take_settings};
    use crate::states::{isotropic_state, qutrit_pes, QutritAngles};
    use proptest::prelude::*;

    #[test]
    fn product_state_members_are_proportional_to_marginal() {
        let rho_a = HermitianOperator::diag(&[0.5, 0.3, 0.2]);
        let rho_b = HermitianOperator::from_real(3, &[0.4, 0.1, 0.0, 0.1, 0.35, 0.05, 0.0, 0.05, 0.25]).unwrap();
        let rho = DensityMatrix::with_default_tolerances(rho_a.kron(&rho_b)).unwrap();
        let ms = mub::<f64>(3).unwrap();
        let asm = make_assemblage(&rho, &ms, Direction::AtoB).unwrap();
        for x in 0..4 {
            for a in 0..3 {
                let weight = ms.effect(a, x).inner(&rho_a);
                assert!(asm.member(a, x).max_abs_diff(&rho_b.scale(weight)) < 1e-14);
            }
        }
        let asm = make_assemblage(&rho, &ms, Direction::BtoA).unwrap();
        for x in 0..4 {
            for a in 0..3 {
                let weight = ms.effect(a, x).inner(&rho_b);
                assert!(asm.member(a, x).max_abs_diff(&rho_a.scale(weight)) < 1e-14);
            }
        }
    }

    #[test]
    fn maximally_entangled_members_are_transposed_effects() {
        let rho = isotropic_state(3, 1.0).unwrap();
        let ms = mub::<f64>(3).unwrap();
        let asm = make_assemblage(&rho, &ms, Direction::AtoB).unwrap();
        for x in 0..4 {
            for a in 0..3 {
                let expected = ms.effect(a, x).transpose().scale(1.0 / 3.0);
                assert!(asm.member(a, x).max_abs_diff(&expected) < 1e-14);
            }
        }
        assert!(validate(&asm).passed());
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let rho = isotropic_state(2, 0.5).unwrap();
        assert!(make_assemblage(&rho, &mub::<f64>(3).unwrap(), Direction::AtoB).is_err());
    }

    #[test]
    fn priori_examples() {
        let rho = qutrit_pes(0.7, QutritAngles::new(0.3, 0.8).unwrap()).unwrap();
        let ms = mub::<f64>(3).unwrap();
        let asm = make_assemblage(&rho, &ms, Direction::AtoB).unwrap();
        let rho_b = rho.reduced((3, 3), Subsystem::First).unwrap();

        let full = make_priori(&asm, &rho_b, &Efficiency::Uniform(1.0)).unwrap();
        assert_eq!(full.outcomes(), 4);
        for x in 0..4 {
            assert_eq!(full.member(3, x), &HermitianOperator::zeros(3));
            for a in 0..3 {
                assert_eq!(full.member(a, x), asm.member(a, x));
            }
        }

        let half = make_priori(&asm, &rho_b, &Efficiency::Uniform(0.5)).unwrap();
        for x in 0..4 {
            assert!((half.member(3, x).trace() - 0.5).abs() < 1e-12);
            assert!((half.marginal(x).trace() - 1.0).abs() < 1e-12);
        }
        assert!(validate(&half).passed());

        assert!(make_priori(&asm, &rho_b, &Efficiency::Uniform(0.0)).is_err());
        assert!(make_priori(&asm, &rho_b, &Efficiency::Uniform(1.2)).is_err());
        assert!(make_priori(&half, &rho_b, &Efficiency::Uniform(0.5)).is_err());

        let per = make_priori(&asm, &rho_b, &Efficiency::PerSetting(vec![0.9, 0.8, 0.7, 0.6])).unwrap();
        assert!(validate(&per).passed());
        assert!((per.member(3, 2).trace() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn validate_flags_signalling_and_negativity() {
        let a = HermitianOperator::diag(&[0.3, 0.2]);
        let b = HermitianOperator::diag(&[0.2, 0.3]);
        let signalling = Assemblage::new(
            vec![vec![a.clone(), a.clone()], vec![b.clone(), b.clone()]],
            Direction::AtoB,
            Efficiency::lossless(),
        )
        .unwrap();
        let report = validate(&signalling);
        assert!(!report.no_signalling_ok && report.psd_ok && report.normalization_ok);

        let negative = Assemblage::new(
            vec![vec![HermitianOperator::diag(&[0.5, -1e-3]), HermitianOperator::diag(&[0.0, 0.501])]],
            Direction::AtoB,
            Efficiency::lossless(),
        )
        .unwrap();
        let report = validate(&negative);
        assert!(!report.psd_ok);
        assert!((report.psd_margin + 1e-3f64).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn marginals_reproduce_reduced_state(p in 0.0f64..=1.0, theta in 0.0f64..0.785, phi in 0.0f64..1.57,
                                             a2b in any::<bool>()) {
            let dir = if a2b { Direction::AtoB } else { Direction::BtoA };
            let rho = qutrit_pes(p, QutritAngles::new(theta, phi).unwrap()).unwrap();
            let ms = mub::<f64>(3).unwrap();
            let asm = make_assemblage(&rho, &ms, dir).unwrap();
            let reduced = rho.reduced((3, 3), dir.steering_side()).unwrap();
            for x in 0..4 {
                prop_assert!(asm.marginal(x).max_abs_diff(reduced.op()) < 1e-10);
            }
            prop_assert!(validate(&asm).passed());
            let pri = priori_from_state(&rho, &ms, dir, &Efficiency::Uniform(0.73)).unwrap();
            for x in 0..4 {
                prop_assert!((pri.marginal(x).trace() - asm.marginal(x).trace()).abs() < 1e-12);
            }
        }

        #[test]
        fn assemblage_is_linear_in_state(p in 0.0f64..=1.0, t1 in 0.0f64..0.785, t2 in 0.0f64..0.785) {
            let ms = take_settings(&mub::<f64>(3).unwrap(), 3).unwrap();
            let r1 = qutrit_pes(0.9, QutritAngles::new(t1, 0.6).unwrap()).unwrap();
            let r2 = qutrit_pes(0.2, QutritAngles::new(t2, 1.2).unwrap()).unwrap();
            let mix = DensityMatrix::with_default_tolerances(r1.op().scale(p).add(&r2.op().scale(1.0 - p))).unwrap();
            let a1 = make_assemblage(&r1, &ms, Direction::AtoB).unwrap();
            let a2 = make_assemblage(&r2, &ms, Direction::AtoB).unwrap();
            let am = make_assemblage(&mix, &ms, Direction::AtoB).unwrap();
            for x in 0..3 {
                for a in 0..3 {
                    let combo = a1.member(a, x).scale(p).add(&a2.member(a, x).scale(1.0 - p));
                    prop_assert!(am.member(a, x).max_abs_diff(&combo) < 1e-12);
                }
            }
        }
    }
}
