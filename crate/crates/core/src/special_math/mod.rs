//! Special-function and polynomial kernels shared by the rest of the crate.
//!
//! Everything here is a pure function of its arguments. The double-double
//! type in [`double_double`] exists for one job: evaluating the alternating
//! multinomial expansion of the outage probability without losing the
//! result to cancellation.

pub mod double_double;
mod poly;

pub use double_double::DoubleDouble;
pub use poly::{poly_power_coefficients, PolyCoeffs};

use crate::error::MathError;

/// Below this magnitude `J0` is summed from its Maclaurin series.
const J0_SERIES_LIMIT: f64 = 3.0;

/// Zero-order Bessel function of the first kind.
///
/// For `|x| <= 3` the Maclaurin series is summed until the next term can no
/// longer change the result (absolute error near 1e-16). Beyond that a
/// modulus/phase rational approximation is used, accurate to better than
/// 1e-7.
pub fn bessel_j0(x: f64) -> Result<f64, MathError> {
    if !x.is_finite() {
        return Err(MathError::NonFinite { what: "bessel_j0 argument", value: x });
    }
    let ax = x.abs();
    if ax <= J0_SERIES_LIMIT {
        Ok(j0_series(ax))
    } else {
        Ok(j0_asymptotic(ax))
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        let next = sum + term;
        if next == sum {
            return sum;
        }
        sum = next;
        k += 1.0;
    }
}

// Abramowitz & Stegun 9.4.3: J0(x) = f0 cos(theta0) / sqrt(x), x >= 3.
fn j0_asymptotic(x: f64) -> f64 {
    let y = 3.0 / x;
    let f0 = 0.797_884_56
        + y * (-0.000_000_77
            + y * (-0.005_527_40 + y * (-0.000_095_12 + y * (0.001_372_37 + y * (-0.000_728_05 + y * 0.000_144_76)))));
    let theta0 = x - std::f64::consts::FRAC_PI_4
        + y * (-0.041_663_97
            + y * (-0.000_039_54 + y * (0.002_625_73 + y * (-0.000_541_25 + y * (-0.000_293_33 + y * 0.000_135_58)))));
    f0 * theta0.cos() / x.sqrt()
}

/// Regularized lower incomplete gamma `P(a, x)` for a positive integer shape.
///
/// Mathematically `P(a, x) = 1 - e^{-x} sum_{k<a} x^k / k!`. That form
/// cancels catastrophically for small `x`, so below `x = a + 1` the
/// equivalent all-positive tail `e^{-x} sum_{k>=a} x^k / k!` is summed
/// instead. The result is clamped to `[0, 1]`.
pub fn regularized_lower_gamma(a: u32, x: f64) -> Result<f64, MathError> {
    if a == 0 {
        return Err(MathError::Domain("incomplete gamma shape must be a positive integer".into()));
    }
    if x.is_nan() || x < 0.0 {
        return Err(MathError::Domain(format!("incomplete gamma argument must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let af = f64::from(a);
    let p = if x < af + 1.0 { lower_tail_series(a, x) } else { 1.0 - upper_finite_sum(a, x) };
    Ok(p.clamp(0.0, 1.0))
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`, computed
/// without cancellation where `Q` is small.
pub fn regularized_upper_gamma(a: u32, x: f64) -> Result<f64, MathError> {
    let p = regularized_lower_gamma(a, x)?;
    if x == 0.0 || x.is_infinite() {
        return Ok(1.0 - p);
    }
    let q = if x < f64::from(a) + 1.0 { 1.0 - p } else { upper_finite_sum(a, x) };
    Ok(q.clamp(0.0, 1.0))
}

/// `e^{-x} sum_{k>=a} x^k/k!`, valid for any x but only used where it
/// converges quickly.
fn lower_tail_series(a: u32, x: f64) -> f64 {
    // Leading term x^a e^{-x} / a! in log space keeps large shapes finite.
    let log_lead = f64::from(a) * x.ln() - x - ln_factorial(a);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = f64::from(a);
    loop {
        k += 1.0;
        term *= x / k;
        if term < sum * 1e-17 {
            break;
        }
        sum += term;
    }
    sum * log_lead.exp()
}

/// `e^{-x} sum_{k<a} x^k/k!`, the regularized upper incomplete gamma.
fn upper_finite_sum(a: u32, x: f64) -> f64 {
    let ln_x = x.ln();
    (0..a).map(|k| (f64::from(k) * ln_x - x - ln_factorial(k)).exp()).sum()
}

pub(crate) fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

pub(crate) fn factorial(n: u32) -> f64 {
    (2..=n).map(f64::from).product()
}
