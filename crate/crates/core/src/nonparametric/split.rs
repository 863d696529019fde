use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::mjp::EmissionModel;
use crate::segments::SegmentedTrajectory;

use super::model::{NpModel, NpSuffStats};
use super::updates::update_pi;
use crate::parametric::update_emissions;

/// A model with one more state, built from an accepted one. It owns its
/// parameters; the model it came from is left untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub from: usize,
    pub to: usize,
    pub model: NpModel,
    /// Labels of every sequence after the split.
    pub labels: Vec<Vec<usize>>,
    pub objective: f64,
    /// `objective` minus the objective of the model it came from.
    pub delta: f64,
}

/// Labels after creating state `new` from `(from, to)`, or `None` when
/// nothing moves. For `from != to` every run of `to` entered directly from
/// `from` moves whole. For `from == to` the segments continuing a run of
/// `from` move, leaving each run's first segment behind.
pub(crate) fn split_labels(states: &[usize], from: usize, to: usize, new: usize) -> Option<Vec<usize>> {
    let mut out = states.to_vec();
    let mut moved = false;
    let mut relabel = false;
    for k in 0..states.len() {
        let prev = (k > 0).then(|| states[k - 1]);
        if from == to {
            relabel = states[k] == from && prev == Some(from);
        } else if prev != Some(states[k]) {
            relabel = states[k] == to && prev == Some(from);
        }
        if relabel {
            out[k] = new;
            moved = true;
        }
    }
    moved.then_some(out)
}

/// The model with a copy of state `to` appended, half of the unused mass
/// given to it.
pub(crate) fn extend_model(model: &NpModel, to: usize) -> NpModel {
    let m = model.num_states();
    let widen = |row: &[f64]| {
        let mut r = row[..m].to_vec();
        r.push(0.5 * row[m]);
        r.push(0.5 * row[m]);
        r
    };
    let mut pi_rows: Vec<Vec<f64>> = model.pi_rows.iter().map(|r| widen(r)).collect();
    pi_rows.push(pi_rows[to].clone());
    let emission = match &model.emission {
        EmissionModel::Multinomial(rows) => {
            let mut rows = rows.clone();
            rows.push(rows[to].clone());
            EmissionModel::Multinomial(rows)
        }
        EmissionModel::Gaussian(means) => {
            let mut means = means.clone();
            means.push(means[to]);
            EmissionModel::Gaussian(means)
        }
    };
    NpModel {
        pi0: widen(&model.pi0),
        pi_rows,
        emission,
        hyper: model.hyper,
    }
}

/// Re-estimates emissions and the transition rows for fixed statistics.
pub(crate) fn reestimate(model: &mut NpModel, stats: &NpSuffStats) {
    model.emission = update_emissions(&stats.emission, Some(&model.emission));
    let h = model.hyper;
    let (pi0, rows) = update_pi(&stats.counts, &model.pi0, h.xi, h.xi2);
    model.pi0 = pi0;
    model.pi_rows = rows;
}

/// Statistics and re-estimated model after splitting `(from, to)`.
pub(crate) fn split_stats(
    data: &Dataset,
    segs: &[SegmentedTrajectory],
    model: &NpModel,
    from: usize,
    to: usize,
) -> Result<(NpModel, NpSuffStats)> {
    let m = model.num_states();
    let mut cand = extend_model(model, to);
    let stats = data
        .sequences()
        .par_iter()
        .zip(segs.par_iter())
        .try_fold(
            || NpSuffStats::new(m + 1, &cand.emission),
            |mut acc, (seq, seg)| {
                match split_labels(seg.states(), from, to, m) {
                    Some(labels) => acc.add_labeled(seq, seg, &labels)?,
                    None => acc.add_sequence(seq, seg)?,
                }
                Ok::<_, Error>(acc)
            },
        )
        .try_reduce(
            || NpSuffStats::new(m + 1, &cand.emission),
            |mut a, b| {
                a.accumulate(&b, 1.0);
                Ok(a)
            },
        )?;
    reestimate(&mut cand, &stats);
    Ok((cand, stats))
}

/// Creates state `M` from the runs of `to` entered directly from `from`
/// (or, for `from == to`, from the segments continuing a run of `from`),
/// moving their observations along, and re-estimates emissions and
/// transition rows. `stats` must describe `segs` under `model`.
pub fn propose_split(
    data: &Dataset,
    segs: &[SegmentedTrajectory],
    model: &NpModel,
    stats: &NpSuffStats,
    from: usize,
    to: usize,
) -> Result<SplitCandidate> {
    let m = model.num_states();
    if from >= m || to >= m || stats.num_states() != m {
        return invalid(format!("split ({from}, {to}) outside a model with {m} states"));
    }
    let available = if from == to {
        stats.continuations[from]
    } else {
        stats.counts[from][to]
    };
    if !(available > 0.0) {
        return invalid(format!("no transitions from state {from} to state {to}"));
    }
    let (cand, cand_stats) = split_stats(data, segs, model, from, to)?;
    let objective = cand_stats.objective(&cand);
    let labels = segs
        .iter()
        .map(|seg| split_labels(seg.states(), from, to, m).unwrap_or_else(|| seg.states().to_vec()))
        .collect();
    Ok(SplitCandidate {
        from,
        to,
        model: cand,
        labels,
        objective,
        delta: objective - stats.objective(model),
    })
}
