use crate::asymptotics::{censored_cost, dwell_cost};
use crate::data::{Dataset, ObsSeq, ObsValue, ObsValues};
use crate::error::{invalid, Error, Result};
use crate::mjp::{EmissionModel, Hyperparams, MjpParams, Trajectory};
use crate::PROB_FLOOR;

#[inline]
pub(crate) fn neg_ln(p: f64) -> f64 {
    -p.max(PROB_FLOOR).ln()
}

/// Transition, dwell and censored terms of one path:
/// `ξ Σ -ln p + Σ h(λ t_k) + censored(λ t_last)`.
pub fn dynamics_cost(traj: &Trajectory, params: &MjpParams, hyper: &Hyperparams) -> Result<f64> {
    let m = params.num_states();
    if let Some(&s) = traj.states().iter().find(|&&s| s >= m) {
        return invalid(format!("state {s} outside 0..{m}"));
    }
    let states = traj.states();
    let mut cost = 0.0;
    for (k, &dwell) in traj.dwell_times().iter().enumerate() {
        let (from, to) = (states[k], states[k + 1]);
        cost += hyper.xi * neg_ln(params.transition[from][to]);
        cost += dwell_cost(params.rates[from] * dwell);
    }
    let last = *states.last().expect("non-empty");
    cost += censored_cost(params.rates[last] * traj.final_time());
    Ok(cost)
}

/// `ξ_λ Σ_s (μ_λ λ_s - ln λ_s - 1)`.
pub fn rate_prior_cost(rates: &[f64], hyper: &Hyperparams) -> f64 {
    rates
        .iter()
        .map(|&l| hyper.xi_lambda * (hyper.mu_lambda * l - l.ln() - 1.0))
        .sum()
}

/// Emission penalty of one observation in state `s`, before the `ζ` weight:
/// `-ln ρ_{s,x}` or `(x - μ_s)^2`.
pub fn emission_cost(emission: &EmissionModel, s: usize, value: ObsValue) -> Result<f64> {
    match (emission, value) {
        (EmissionModel::Multinomial(rows), ObsValue::Symbol(x)) => match rows[s].get(x) {
            Some(&p) => Ok(neg_ln(p)),
            None => invalid(format!("symbol {x} outside the emission alphabet")),
        },
        (EmissionModel::Gaussian(means), ObsValue::Real(x)) => Ok((x - means[s]).powi(2)),
        _ => invalid("observation kind does not match the emission model"),
    }
}

/// Row-major `n x M` table of per-observation costs. Direct observations
/// cost 0 in the observed state and `+inf` elsewhere; hidden observations
/// cost `ζ` times the emission penalty.
pub(crate) fn observation_costs(
    seq: &ObsSeq,
    num_states: usize,
    emission: Option<&EmissionModel>,
    zeta: f64,
) -> Result<Vec<f64>> {
    let n = seq.len();
    let mut out = vec![0.0; n * num_states];
    match (seq.values(), emission) {
        (ObsValues::States(v), _) => {
            for (k, &x) in v.iter().enumerate() {
                for s in 0..num_states {
                    out[k * num_states + s] = if s == x { 0.0 } else { f64::INFINITY };
                }
            }
        }
        (ObsValues::Symbols(v), Some(EmissionModel::Multinomial(rows))) => {
            for (k, &x) in v.iter().enumerate() {
                for s in 0..num_states {
                    let p = *rows[s].get(x).ok_or_else(|| {
                        Error::InvalidInput(format!("symbol {x} outside the emission alphabet"))
                    })?;
                    out[k * num_states + s] = zeta * neg_ln(p);
                }
            }
        }
        (ObsValues::Reals(v), Some(EmissionModel::Gaussian(means))) => {
            for (k, &x) in v.iter().enumerate() {
                for s in 0..num_states {
                    out[k * num_states + s] = zeta * (x - means[s]).powi(2);
                }
            }
        }
        _ => return invalid("observation kind does not match the emission model"),
    }
    Ok(out)
}

fn check_lengths(data: &Dataset, trajs: &[Trajectory]) -> Result<()> {
    if data.len() != trajs.len() {
        return Err(Error::LengthMismatch {
            left: data.len(),
            right: trajs.len(),
        });
    }
    Ok(())
}

/// Directly observed objective. Every path must pass through the observed
/// states; the first violation is reported.
pub fn objective_domjp(
    data: &Dataset,
    trajs: &[Trajectory],
    params: &MjpParams,
    hyper: &Hyperparams,
) -> Result<f64> {
    check_lengths(data, trajs)?;
    let mut total = 0.0;
    for (i, (seq, traj)) in data.sequences().iter().zip(trajs).enumerate() {
        let ObsValues::States(states) = seq.values() else {
            return invalid("directly observed objective needs state observations");
        };
        for (k, (&t, &s)) in seq.times().iter().zip(states).enumerate() {
            if traj.state_at(t)? != s {
                return Err(Error::ConstraintViolation {
                    sequence: i,
                    index: k,
                });
            }
        }
        total += dynamics_cost(traj, params, hyper)?;
    }
    Ok(total + rate_prior_cost(&params.rates, hyper))
}

/// Hidden-state objective: dynamics and rate prior plus `ζ` times the
/// emission penalties.
pub fn objective_hmjp(
    data: &Dataset,
    trajs: &[Trajectory],
    params: &MjpParams,
    emission: &EmissionModel,
    hyper: &Hyperparams,
) -> Result<f64> {
    check_lengths(data, trajs)?;
    let mut total = 0.0;
    for (seq, traj) in data.sequences().iter().zip(trajs) {
        total += dynamics_cost(traj, params, hyper)?;
        for (k, &t) in seq.times().iter().enumerate() {
            let s = traj.state_at(t)?;
            total += hyper.zeta * emission_cost(emission, s, seq.values().get(k))?;
        }
    }
    Ok(total + rate_prior_cost(&params.rates, hyper))
}
