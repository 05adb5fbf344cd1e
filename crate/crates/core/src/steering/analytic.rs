//! Closed-form quantities attached to MUB measurements.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// `H_d = 1 + 1/2 + ... + 1/d`, exactly.
pub fn harmonic_number(d: usize) -> BigRational {
    (1..=d).fold(BigRational::zero(), |acc, k| acc + BigRational::new(BigInt::one(), BigInt::from(k)))
}

pub fn harmonic<T: Scalar>(d: usize) -> T {
    T::lit(harmonic_number(d).to_f64().unwrap_or(f64::NAN))
}

/// `(H_d - 1)/(d - 1)`, exactly.
pub fn analytic_pstar_bta_exact(d: usize) -> Result<BigRational> {
    if d < 2 {
        return invalid(format!("dimension {d} < 2"));
    }
    Ok((harmonic_number(d) - BigRational::one()) / BigRational::from_integer(BigInt::from(d - 1)))
}

pub fn analytic_pstar_bta<T: Scalar>(d: usize) -> Result<T> {
    let exact = analytic_pstar_bta_exact(d)?;
    Ok(T::lit(exact.to_f64().unwrap_or(f64::NAN)))
}

/// `1/sqrt((d^2 - 1)(d - 1))`. Only meaningful for prime-power `d`, where
/// a complete set of `d + 1` MUBs exists.
pub fn shrinking_factor_mub<T: Scalar>(d: usize) -> Result<T> {
    if d < 2 {
        return invalid(format!("dimension {d} < 2"));
    }
    let d = T::from_usize_lossy(d);
    Ok(T::one() / ((d * d - T::one()) * (d - T::one())).sqrt())
}
