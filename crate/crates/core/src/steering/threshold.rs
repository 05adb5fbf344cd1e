use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::general::{unsteerability_q_with, GeneralBoundConfig};
use super::weight::{loss_counted_sw_with, steering_weight_with};
use super::CertifyConfig;
use crate::assemblage::{make_assemblage, Direction, Efficiency};
use crate::error::{invalid, Error, Result};
use crate::measurements::MeasurementSet;
use crate::scalar::Scalar;
use crate::states::StateFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Onset of a positive steering weight.
    Sw,
    /// Largest weight certified unsteerable for all projective measurements.
    General,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Sw => "sw",
            Mode::General => "general",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sw" => Ok(Mode::Sw),
            "general" => Ok(Mode::General),
            other => invalid(format!("unknown mode '{other}' (expected sw or general)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSpec<T> {
    pub direction: Direction,
    pub measurements: MeasurementSet<T>,
    pub efficiency: Efficiency<T>,
    pub mode: Mode,
    pub tol_p: T,
    /// Shrinking factor for [`Mode::General`].
    pub eta: T,
    /// Number of evenly spaced points checked for monotonicity before
    /// bisecting; `None` bisects directly.
    pub scan: Option<usize>,
    pub certify: CertifyConfig<T>,
}

impl<T: Scalar> ThresholdSpec<T> {
    pub fn new(direction: Direction, measurements: MeasurementSet<T>, mode: Mode) -> Self {
        Self {
            direction,
            measurements,
            efficiency: Efficiency::lossless(),
            mode,
            tol_p: T::lit(1e-4),
            eta: T::one(),
            scan: None,
            certify: CertifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint<T> {
    /// Midpoint of the final bracket.
    pub p_star: Option<T>,
    /// `(lo, hi)` with the predicate verified on each side.
    pub bracket: Option<(T, T)>,
    pub direction: Direction,
    pub mode: Mode,
    pub settings: usize,
    pub efficiency: T,
    pub tol_p: T,
    pub solves: usize,
    /// General-mode solves that ended without a verdict either way and were
    /// counted as not certified.
    pub uncertified: usize,
}

struct Predicate<'a, T: Scalar> {
    family: &'a StateFamily<T>,
    spec: &'a ThresholdSpec<T>,
    general: Option<GeneralBoundConfig<T>>,
    solves: usize,
    uncertified: usize,
}

impl<'a, T: Scalar> Predicate<'a, T> {
    /// Steerable (sw mode) or certified unsteerable (general mode).
    fn eval(&mut self, p: T) -> Result<bool> {
        self.solves += 1;
        let rho = self.family.at(p)?;
        let spec = self.spec;
        match spec.mode {
            Mode::Sw => {
                let verdict = if spec.efficiency.is_lossless() {
                    let asm = make_assemblage(&rho, &spec.measurements, spec.direction)?;
                    steering_weight_with(&asm, &spec.certify)?
                } else {
                    loss_counted_sw_with(&rho, &spec.measurements, spec.direction, &spec.efficiency, &spec.certify)?
                };
                Ok(verdict.steerable)
            }
            Mode::General => {
                let cfg = self.general.as_ref().expect("configured for general mode");
                // Right at the feasibility boundary neither an optimum nor an
                // infeasibility certificate can be resolved in floating point.
                // Withholding certification keeps the threshold a lower bound.
                match unsteerability_q_with(&rho, cfg, spec.direction, &spec.certify) {
                    Ok(q) => Ok(q.certified_unsteerable),
                    Err(Error::NumericFailure(_)) => {
                        self.uncertified += 1;
                        Ok(false)
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }
}

/// Critical mixing weight of `family`.
///
/// In sw mode the predicate "steerable" is assumed to switch from false to
/// true as `p` grows; in general mode "certified unsteerable" switches from
/// true to false. Either way the bracket holds the switch. Without a switch
/// `p_star` is absent when there is nothing to report (sw: not steerable at
/// `p = 1`; general: not certified at `p = 0`) and sits at the edge
/// otherwise.
pub fn critical_p<T: Scalar>(family: &StateFamily<T>, spec: &ThresholdSpec<T>) -> Result<CriticalPoint<T>> {
    if !(spec.tol_p >= T::lit(1e-6)) {
        return invalid(format!("bisection tolerance {} below 1e-6", spec.tol_p));
    }
    if spec.measurements.dim() != family.dim() {
        return invalid("measurement dimension does not match the state family");
    }
    spec.efficiency.check(spec.measurements.settings())?;
    let general = match spec.mode {
        Mode::Sw => None,
        Mode::General => {
            if !spec.efficiency.is_lossless() {
                return invalid("general mode supports only lossless measurements");
            }
            Some(GeneralBoundConfig::new(spec.eta, spec.measurements.clone())?)
        }
    };
    let mut pred = Predicate { family, spec, general, solves: 0, uncertified: 0 };
    // "above": steerable (sw) or not certified (general); false at small p
    let rising = spec.mode == Mode::Sw;

    let (mut lo, mut hi) = match spec.scan {
        Some(k) => {
            let k = k.max(2);
            let mut samples = Vec::with_capacity(k);
            for i in 0..k {
                let p = T::from_usize_lossy(i) / T::from_usize_lossy(k - 1);
                samples.push((p, pred.eval(p)? == rising));
            }
            if samples.windows(2).any(|w| w[0].1 && !w[1].1) {
                return Err(Error::AmbiguousThreshold {
                    samples: samples.iter().map(|(p, above)| (p.to_f64_lossy(), *above == rising)).collect(),
                });
            }
            match samples.iter().position(|s| s.1) {
                None => return Ok(finish(spec, Span::NeverAbove, &pred)),
                Some(0) => return Ok(finish(spec, Span::AlwaysAbove, &pred)),
                Some(i) => (samples[i - 1].0, samples[i].0),
            }
        }
        None => {
            if pred.eval(T::one())? != rising {
                return Ok(finish(spec, Span::NeverAbove, &pred));
            }
            if pred.eval(T::zero())? == rising {
                return Ok(finish(spec, Span::AlwaysAbove, &pred));
            }
            (T::zero(), T::one())
        }
    };

    let half = T::lit(0.5);
    while hi - lo > spec.tol_p {
        let mid = (lo + hi) * half;
        if pred.eval(mid)? == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(finish(spec, Span::Bracket(lo, hi), &pred))
}

enum Span<T> {
    Bracket(T, T),
    /// No switch: below the threshold on all of `[0, 1]`.
    NeverAbove,
    AlwaysAbove,
}

fn finish<T: Scalar>(spec: &ThresholdSpec<T>, span: Span<T>, pred: &Predicate<'_, T>) -> CriticalPoint<T> {
    let edge = |p: T| (Some(p), Some((p, p)));
    let (p_star, bracket) = match (span, spec.mode) {
        (Span::Bracket(lo, hi), _) => (Some((lo + hi) * T::lit(0.5)), Some((lo, hi))),
        (Span::NeverAbove, Mode::Sw) | (Span::AlwaysAbove, Mode::General) => (None, None),
        (Span::NeverAbove, Mode::General) => edge(T::one()),
        (Span::AlwaysAbove, Mode::Sw) => edge(T::zero()),
    };
    CriticalPoint {
        p_star,
        bracket,
        direction: spec.direction,
        mode: spec.mode,
        settings: spec.measurements.settings(),
        efficiency: spec.efficiency.min(),
        tol_p: spec.tol_p,
        solves: pred.solves,
        uncertified: pred.uncertified,
    }
}
