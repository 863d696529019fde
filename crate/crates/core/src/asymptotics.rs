//! Scaled exponential-family densities and their small-variance limits.
//!
//! The scaled exponential with rate `λ` and scale `β` is a gamma density with
//! shape `β` and rate `βλ`. As `β → ∞` its negative log-density divided by
//! `β` tends to the dwell penalty `λt - ln(λt) - 1`, and the negative log
//! survival function tends to the censored penalty. The finite-`β` forms are
//! kept here so those limits can be checked numerically.

use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::special::ln_gamma_q;

/// Rate and scale of a scaled exponential (gamma(β, βλ)) density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledExpParams {
    pub rate: f64,
    pub scale: f64,
}

impl ScaledExpParams {
    pub fn new(rate: f64, scale: f64) -> Result<Self> {
        positive("rate", rate)?;
        positive("scale", scale)?;
        Ok(Self { rate, scale })
    }

    pub fn logpdf(&self, t: f64) -> Result<f64> {
        scaled_exp_logpdf(t, self.rate, self.scale)
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn variance(&self) -> f64 {
        1.0 / (self.rate * self.rate * self.scale)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive, got {v}"))
    }
}

/// `β ln(βλ) - lnΓ(β) + (β-1) ln t - βλt`.
pub fn scaled_exp_logpdf(t: f64, rate: f64, beta: f64) -> Result<f64> {
    positive("t", t)?;
    positive("rate", rate)?;
    positive("beta", beta)?;
    Ok(beta * (beta * rate).ln() - ln_gamma(beta) + (beta - 1.0) * t.ln() - beta * rate * t)
}

/// `x - ln x - 1` for `x = λt`; convex, zero only at `x = 1`.
#[inline]
pub(crate) fn dwell_cost(x: f64) -> f64 {
    if x > 0.0 {
        x - x.ln() - 1.0
    } else {
        f64::INFINITY
    }
}

/// `1[x >= 1](x - ln x - 1)` for `x = λt`.
#[inline]
pub(crate) fn censored_cost(x: f64) -> f64 {
    if x >= 1.0 {
        x - x.ln() - 1.0
    } else {
        0.0
    }
}

/// Dwell penalty `h = λt - ln(λt) - 1`.
pub fn dwell_penalty(rate: f64, t: f64) -> Result<f64> {
    positive("rate", rate)?;
    positive("t", t)?;
    Ok(dwell_cost(rate * t))
}

/// Penalty on the censored final dwell: zero below the mean dwell time,
/// the dwell penalty above it.
pub fn censored_penalty(rate: f64, t: f64) -> Result<f64> {
    positive("rate", rate)?;
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("t must be non-negative, got {t}"));
    }
    Ok(censored_cost(rate * t))
}

/// `(lnΓ(β) - lnΓ(β, βλt)) / β = -ln Q(β, βλt) / β`, the finite-scale
/// censored term.
pub fn censored_penalty_finite_beta(rate: f64, t: f64, beta: f64) -> Result<f64> {
    positive("rate", rate)?;
    positive("t", t)?;
    positive("beta", beta)?;
    Ok(-ln_gamma_q(beta, beta * rate * t)? / beta)
}

/// `KL(p ‖ q) = Σ p_j ln(p_j / q_j)` with `0 ln(0/q) = 0`; `+inf` when
/// `p_j > 0` and `q_j = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut kl = 0.0;
    for (&pj, &qj) in p.iter().zip(q) {
        if pj > 0.0 {
            if qj <= 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += pj * (pj / qj).ln();
        }
    }
    Ok(kl.max(0.0))
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Log-density of the shaped translated Pareto distribution
/// `γ^{αβ} / B(β, αβ) · t^{β-1} / (t + γ)^{(1+α)β}`.
pub fn stp_logpdf(t: f64, beta: f64, alpha: f64, gamma: f64) -> Result<f64> {
    positive("t", t)?;
    positive("beta", beta)?;
    positive("alpha", alpha)?;
    positive("gamma", gamma)?;
    Ok(alpha * beta * gamma.ln() - ln_beta(beta, alpha * beta) + (beta - 1.0) * t.ln()
        - (1.0 + alpha) * beta * (t + gamma).ln())
}

/// Joint log-density of the waiting times following one state of the
/// gamma-gamma process with base mass `kappa0` and rate `gamma`. The value is
/// symmetric in `times`.
pub fn stp_joint_logpdf(times: &[f64], beta: f64, kappa0: f64, gamma: f64) -> Result<f64> {
    positive("beta", beta)?;
    positive("kappa0", kappa0)?;
    positive("gamma", gamma)?;
    let k = times.len() as f64;
    let mut sum_ln = 0.0;
    let mut total = 0.0;
    for &t in times {
        positive("t", t)?;
        sum_ln += t.ln();
        total += t;
    }
    Ok(ln_gamma(beta * (kappa0 + k)) - ln_gamma(beta * kappa0) - k * ln_gamma(beta)
        + beta * kappa0 * gamma.ln()
        + (beta - 1.0) * sum_ln
        - beta * (kappa0 + k) * (gamma + total).ln())
}
