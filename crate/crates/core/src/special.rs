//! Log-space incomplete gamma function.
//!
//! Shapes of order 10^4 underflow `Γ(a, x)` and `Γ(a)` in linear space, so
//! everything here is returned as a logarithm.

use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};

const MAX_ITER: usize = 100_000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// `ln Q(a, x)` where `Q(a, x) = Γ(a, x) / Γ(a)` is the regularized upper
/// incomplete gamma function. Requires `a > 0`, `x >= 0`.
pub fn ln_gamma_q(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) || !a.is_finite() {
        return invalid(format!("incomplete gamma domain: a={a}, x={x}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let ln_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        // P by series, then Q = 1 - P.
        let ln_p = ln_prefactor + lower_series(a, x)?.ln();
        Ok(ln_one_minus_exp(ln_p))
    } else {
        Ok(ln_prefactor + upper_continued_fraction(a, x)?.ln())
    }
}

/// `ln P(a, x)`, the regularized lower incomplete gamma function.
pub fn ln_gamma_p(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) || !a.is_finite() {
        return invalid(format!("incomplete gamma domain: a={a}, x={x}"));
    }
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let ln_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        Ok(ln_prefactor + lower_series(a, x)?.ln())
    } else {
        let ln_q = ln_prefactor + upper_continued_fraction(a, x)?.ln();
        Ok(ln_one_minus_exp(ln_q))
    }
}

/// `sum_n x^n / (a (a+1) ... (a+n))`.
fn lower_series(a: f64, x: f64) -> Result<f64> {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut denom = a;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term < sum * EPS {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence("incomplete gamma series"))
}

/// Modified Lentz evaluation of the continued fraction for `Q`, without
/// the `x^a e^-x / Γ(a)` prefactor.
fn upper_continued_fraction(a: f64, x: f64) -> Result<f64> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence("incomplete gamma continued fraction"))
}

/// `ln(1 - exp(v))` for `v <= 0`, accurate at both ends.
pub(crate) fn ln_one_minus_exp(v: f64) -> f64 {
    if v >= 0.0 {
        f64::NEG_INFINITY
    } else if v > -std::f64::consts::LN_2 {
        (-v.exp_m1()).ln()
    } else {
        (-v.exp()).ln_1p()
    }
}
