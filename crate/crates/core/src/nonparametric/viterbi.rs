use crate::data::ObsSeq;
use crate::dwell::{optimize_runs, runs_projected_gradient, DwellSolverConfig, RunCost};
use crate::error::{invalid, Error, Result};
use crate::parametric::{bounds_of, merged_run_viterbi, neg_ln, observation_costs};
use crate::segments::SegmentedTrajectory;

use super::model::{time_penalty, NpModel, NpSuffStats};

/// `ξ(-ln π̄_st)`; the diagonal is never used.
pub(crate) fn edge_costs(model: &NpModel) -> Vec<f64> {
    let m = model.num_states();
    let mut edge = vec![f64::INFINITY; m * m];
    for s in 0..m {
        for t in 0..m {
            if s != t {
                edge[s * m + t] = model.hyper.xi * neg_ln(model.pi_rows[s][t]);
            }
        }
    }
    edge
}

fn check(seq: &ObsSeq, seg: &SegmentedTrajectory, model: &NpModel, background: &NpSuffStats) -> Result<()> {
    if seg.len() != seq.len() {
        return Err(Error::LengthMismatch {
            left: seg.len(),
            right: seq.len(),
        });
    }
    if background.num_states() != model.num_states() {
        return invalid("background statistics and model disagree on the number of states");
    }
    Ok(())
}

/// Best labeling of one sequence's segments with the other sequences'
/// statistics held in `background`. Equal neighbours merge into one run. A
/// completed run of duration `d` in state `s` costs
/// `-ln d + f(K_s + 1, S_s + d) - f(K_s, S_s)` with
/// `f(K, S) = K ln((γ + S)/K)` evaluated on the background; the last run is
/// free. Jumps cost `ξ(-ln π̄_st)` and observations `ζ` times their
/// emission penalty. Ties within a relative `1e-9` of the optimum go to the
/// lexicographically smallest labeling.
pub fn viterbi_imjp(
    seq: &ObsSeq,
    seg: &SegmentedTrajectory,
    model: &NpModel,
    background: &NpSuffStats,
) -> Result<Vec<usize>> {
    check(seq, seg, model, background)?;
    let m = model.num_states();
    let gamma = model.hyper.gamma;
    let obs = observation_costs(seq, m, Some(&model.emission), model.hyper.zeta)?;
    let (count, sum) = (&background.dwell_count, &background.dwell_sum);
    let run = |s: usize, d: f64, last: bool| {
        if last {
            0.0
        } else {
            -d.ln() + time_penalty(count[s] + 1.0, sum[s] + d, gamma) - time_penalty(count[s], sum[s], gamma)
        }
    };
    merged_run_viterbi(&bounds_of(seg), &obs, m, &edge_costs(model), run)
        .map(|(labels, _)| labels)
        .ok_or(Error::Infeasible { sequence: 0 })
}

/// Weights `K_m / (γ + S_m)` of the linearized time penalty.
pub(crate) fn mm_weights(count: &[f64], sum: &[f64], gamma: f64) -> Vec<f64> {
    count.iter().zip(sum).map(|(k, s)| k / (gamma + s)).collect()
}

fn weighted_cost(weights: &[f64]) -> impl Fn(usize, bool) -> RunCost + '_ {
    move |s, last| {
        if last {
            RunCost::Free
        } else {
            RunCost::LogBarrier { weight: weights[s] }
        }
    }
}

/// Minimizes `Σ_runs (-ln d + w_s d)` over the active jumps, the last run
/// being free. Returns the final projected gradient norm.
pub(crate) fn solve_weighted(seg: &mut SegmentedTrajectory, weights: &[f64], config: DwellSolverConfig) -> f64 {
    optimize_runs(seg, weighted_cost(weights), config)
}

/// Jump positions of one sequence that locally minimize the time terms
/// `Σ_m [K_m ln((γ + S_m)/K_m) - Σ ln t]` with the other sequences'
/// statistics fixed in `background`. Each round majorizes the concave
/// `ln(γ + S)` by its tangent and solves the resulting convex chain, so the
/// objective never increases; iteration stops once the projected gradient of
/// the true objective is at most `config.tol`.
pub fn optimize_np_dwell_times(
    seg: &SegmentedTrajectory,
    model: &NpModel,
    background: &NpSuffStats,
    config: DwellSolverConfig,
) -> Result<SegmentedTrajectory> {
    let m = model.num_states();
    if background.num_states() != m {
        return invalid("background statistics and model disagree on the number of states");
    }
    if let Some(&s) = seg.states().iter().find(|&&s| s >= m) {
        return invalid(format!("state {s} outside a model with {m} states"));
    }
    let gamma = model.hyper.gamma;
    let mut seg = seg.clone();
    let weights_of = |seg: &SegmentedTrajectory| {
        let mut count = background.dwell_count.clone();
        let mut sum = background.dwell_sum.clone();
        let runs = seg.runs();
        for r in &runs[..runs.len() - 1] {
            count[r.state] += 1.0;
            sum[r.state] += r.duration();
        }
        mm_weights(&count, &sum, gamma)
    };
    for _ in 0..config.max_iters {
        let w = weights_of(&seg);
        if runs_projected_gradient(&seg, weighted_cost(&w)) <= config.tol {
            break;
        }
        solve_weighted(&mut seg, &w, config);
    }
    Ok(seg)
}
