use crate::asymptotics::{censored_cost, dwell_cost};
use crate::data::ObsSeq;
use crate::dwell::{optimize_runs, DwellSolverConfig, RunCost};
use crate::error::{invalid, Error, Result};
use crate::mjp::{EmissionModel, Hyperparams, MjpParams};
use crate::segments::SegmentedTrajectory;

use super::objective::{neg_ln, observation_costs};

/// `ξ(-ln p_{ss'})`, with `+inf` on the diagonal.
pub(crate) fn edge_costs(params: &MjpParams, hyper: &Hyperparams) -> Vec<f64> {
    let m = params.num_states();
    let mut out = vec![f64::INFINITY; m * m];
    for s in 0..m {
        for t in 0..m {
            if s != t {
                out[s * m + t] = hyper.xi * neg_ln(params.transition[s][t]);
            }
        }
    }
    out
}

/// Dwell penalty of a run, censored when it is the last one.
pub(crate) fn rate_run_cost(rates: &[f64]) -> impl Fn(usize, f64, bool) -> f64 + '_ {
    move |s, d, last| {
        if last {
            censored_cost(rates[s] * d)
        } else {
            dwell_cost(rates[s] * d)
        }
    }
}

/// Cost of a run over segments `p..=e` in state `s`.
#[inline]
fn run_cost<F: Fn(usize, f64, bool) -> f64>(run: &F, bounds: &[f64], p: usize, e: usize, s: usize) -> f64 {
    run(s, bounds[e + 1] - bounds[p], e + 2 == bounds.len())
}

/// Exact minimization over segment labels where equal neighbours merge
/// into one run. `bounds` has `n + 1` entries, `obs` is `n x M`, `edge` is
/// `M x M` (its diagonal is never used) and `run(s, d, last)` prices a run
/// of duration `d` in state `s`. Among labelings within a relative `1e-9` of the optimum the
/// lexicographically smallest is returned. `None` when every labeling is
/// infeasible.
pub(crate) fn merged_run_viterbi<F: Fn(usize, f64, bool) -> f64>(
    bounds: &[f64],
    obs: &[f64],
    m: usize,
    edge: &[f64],
    run: F,
) -> Option<(Vec<usize>, f64)> {
    let n = bounds.len() - 1;
    // g[p*m+s]: best cost of segments p.. given a run in state s starts at p.
    // next[q*m+s]: best cost of segments q.. given the previous run was s.
    let mut g = vec![f64::INFINITY; n * m];
    let mut next = vec![f64::INFINITY; (n + 1) * m];
    for p in (0..n).rev() {
        for s in 0..m {
            let mut acc = 0.0;
            let mut best = f64::INFINITY;
            for e in p..n {
                acc += obs[e * m + s];
                if acc == f64::INFINITY {
                    break;
                }
                let tail = if e + 1 == n { 0.0 } else { next[(e + 1) * m + s] };
                let v = acc + run_cost(&run, bounds, p, e, s) + tail;
                if v < best {
                    best = v;
                }
            }
            g[p * m + s] = best;
        }
        for s in 0..m {
            let mut best = f64::INFINITY;
            for t in 0..m {
                if t != s {
                    let v = edge[s * m + t] + g[p * m + t];
                    if v < best {
                        best = v;
                    }
                }
            }
            next[p * m + s] = best;
        }
    }
    let opt = g[..m].iter().copied().fold(f64::INFINITY, f64::min);
    if !opt.is_finite() {
        return None;
    }
    let limit = opt + 1e-9 * opt.abs().max(1.0);

    let mut labels = Vec::with_capacity(n);
    let mut s = (0..m).find(|&s| g[s] <= limit)?;
    labels.push(s);
    let mut p = 0;
    let mut prior = 0.0;
    let mut acc = obs[s];
    for q in 1..n {
        // Continue the current run through q.
        let mut cont = f64::INFINITY;
        let mut run_acc = acc;
        for e in q..n {
            run_acc += obs[e * m + s];
            if run_acc == f64::INFINITY {
                break;
            }
            let tail = if e + 1 == n { 0.0 } else { next[(e + 1) * m + s] };
            cont = cont.min(run_acc + run_cost(&run, bounds, p, e, s) + tail);
        }
        let cont_ok = prior + cont <= limit;
        // End the run at q - 1 and switch.
        let end = prior + acc + run_cost(&run, bounds, p, q - 1, s);
        let choice = (0..m).find(|&t| {
            if t == s {
                cont_ok
            } else {
                end + edge[s * m + t] + g[q * m + t] <= limit
            }
        })?;
        if choice == s {
            acc += obs[q * m + s];
        } else {
            prior = end + edge[s * m + choice];
            p = q;
            s = choice;
            acc = obs[q * m + s];
        }
        labels.push(s);
    }
    Some((labels, opt))
}

/// Per-sequence objective of a segmentation given its observation costs.
pub(crate) fn segmentation_cost(
    seg: &SegmentedTrajectory,
    obs: &[f64],
    params: &MjpParams,
    hyper: &Hyperparams,
) -> f64 {
    let m = params.num_states();
    let mut cost: f64 = seg
        .states()
        .iter()
        .enumerate()
        .map(|(k, &s)| obs[k * m + s])
        .sum();
    let runs = seg.runs();
    for (i, run) in runs.iter().enumerate() {
        let rate = params.rates[run.state];
        if i + 1 == runs.len() {
            cost += censored_cost(rate * run.duration());
        } else {
            cost += dwell_cost(rate * run.duration());
            cost += hyper.xi * neg_ln(params.transition[run.state][runs[i + 1].state]);
        }
    }
    cost
}

pub(crate) fn bounds_of(seg: &SegmentedTrajectory) -> Vec<f64> {
    (0..=seg.len()).map(|k| seg.boundary(k)).collect()
}

/// Optimal segment states for a fixed segmentation. Direct observations pin
/// the state of their segment; without `emission` the sequence must hold
/// state observations.
pub fn viterbi_segments(
    seq: &ObsSeq,
    seg: &SegmentedTrajectory,
    params: &MjpParams,
    emission: Option<&EmissionModel>,
    hyper: &Hyperparams,
) -> Result<Vec<usize>> {
    if seq.len() != seg.len() {
        return Err(Error::LengthMismatch {
            left: seq.len(),
            right: seg.len(),
        });
    }
    if let Some(v) = params.validate().first() {
        return invalid(format!("invalid parameters: {v}"));
    }
    let obs = observation_costs(seq, params.num_states(), emission, hyper.zeta)?;
    let edge = edge_costs(params, hyper);
    merged_run_viterbi(&bounds_of(seg), &obs, params.num_states(), &edge, rate_run_cost(&params.rates))
        .map(|(labels, _)| labels)
        .ok_or(Error::Infeasible { sequence: 0 })
}

/// Moves the active jumps of `seg` to minimize dwell plus censored
/// penalties; returns the projected-gradient norm reached.
pub(crate) fn optimize_dwell_in_place(
    seg: &mut SegmentedTrajectory,
    rates: &[f64],
    config: DwellSolverConfig,
) -> f64 {
    optimize_runs(
        seg,
        |s, last| {
            if last {
                RunCost::Censored { rate: rates[s] }
            } else {
                RunCost::Dwell { rate: rates[s] }
            }
        },
        config,
    )
}

/// Jump positions minimizing the dwell and censored penalties for the
/// fixed segment states of `seg`. Inactive jumps are left in place.
pub fn optimize_dwell_times(
    seg: &SegmentedTrajectory,
    params: &MjpParams,
    config: DwellSolverConfig,
) -> Result<SegmentedTrajectory> {
    if let Some(&s) = seg.states().iter().find(|&&s| s >= params.num_states()) {
        return invalid(format!("state {s} outside the model"));
    }
    let mut out = seg.clone();
    optimize_dwell_in_place(&mut out, &params.rates, config);
    Ok(out)
}
