use crate::data::{ObsSeq, ObsValues};
use crate::error::{invalid, Error, Result};
use crate::mjp::{MjpParams, Trajectory};

/// Maximum-likelihood placement of the jumps on the observed state
/// sequence. The log-likelihood is linear in each jump time, so every jump
/// sits at one end of its interval: late when leaving the slower state,
/// early otherwise. A short visit straddles its observation with `ε/2` on
/// either side, so it lasts `ε = 1e-6 · T`. Time therefore piles up in the states with
/// the smallest exit rate.
pub fn mle_degenerate_trajectory(seq: &ObsSeq, params: &MjpParams) -> Result<Trajectory> {
    let ObsValues::States(values) = seq.values() else {
        return invalid("degenerate trajectory needs state observations");
    };
    let m = params.num_states();
    if let Some(v) = params.validate().first() {
        return invalid(format!("invalid parameters: {v}"));
    }
    if let Some(&s) = values.iter().find(|&&s| s >= m) {
        return invalid(format!("state {s} outside the model"));
    }
    let horizon = seq.horizon();
    let eps = 0.5e-6 * horizon;
    let times = seq.times();
    let mut states = vec![values[0]];
    let mut jumps = Vec::new();
    for k in 1..values.len() {
        let (from, to) = (values[k - 1], values[k]);
        if from == to {
            continue;
        }
        if !(params.transition[from][to] > 0.0) {
            return Err(Error::Infeasible { sequence: 0 });
        }
        let (a, b) = (times[k - 1], times[k]);
        let u = if b - a <= 2.0 * eps {
            0.5 * (a + b)
        } else if params.rates[from] < params.rates[to] {
            b - eps
        } else {
            a + eps
        };
        states.push(to);
        jumps.push(u);
    }
    let dwell: Vec<f64> = jumps
        .iter()
        .scan(0.0, |prev, &u| {
            let d = u - *prev;
            *prev = u;
            Some(d)
        })
        .collect();
    Trajectory::new(states, dwell, horizon)
}
