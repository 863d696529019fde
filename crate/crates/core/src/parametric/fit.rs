use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, ObsKind, ObsValues};
use crate::dwell::DwellSolverConfig;
use crate::error::{invalid, Error, Result};
use crate::mjp::{EmissionModel, Hyperparams, MjpParams, Trajectory};
use crate::segments::SegmentedTrajectory;
use crate::trace::{fnv1a, Evaluation, FitTrace, Recorder};

use super::objective::{observation_costs, rate_prior_cost};
use super::updates::{update_emissions, update_transition_and_rates, EmissionStats, TransitionStats};
use super::viterbi::{
    bounds_of, edge_costs, merged_run_viterbi, optimize_dwell_in_place, rate_run_cost, segmentation_cost,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// States observed directly.
    Domjp,
    /// States observed through an emission model.
    Hmjp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub hyper: Hyperparams,
    /// Number of states; defaults to the alphabet size for discrete data and
    /// is required for Gaussian observations.
    pub num_states: Option<usize>,
    pub max_iters: usize,
    /// Stop when the relative objective change falls below this value.
    pub tol: f64,
    pub dwell: DwellSolverConfig,
    /// Amplitude of the noise added to the uniform initial emission rows.
    pub init_noise: f64,
    pub seed: u64,
    /// Record wall-clock time in the trace (zero otherwise).
    pub timed: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            hyper: Hyperparams::parametric_default(),
            num_states: None,
            max_iters: 300,
            tol: 1e-6,
            dwell: DwellSolverConfig::default(),
            init_noise: 1e-2,
            seed: 0,
            timed: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.max_iters == 0 {
            return invalid("max_iters must be at least 1");
        }
        if !(self.tol >= 0.0) || !(self.dwell.tol > 0.0) || self.dwell.max_iters == 0 {
            return invalid("tolerances must be positive");
        }
        if !(0.0..1.0).contains(&self.init_noise) {
            return invalid("init_noise must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ParametricFit {
    pub params: MjpParams,
    pub emission: Option<EmissionModel>,
    pub segmentations: Vec<SegmentedTrajectory>,
    pub trajectories: Vec<Trajectory>,
    pub objective: f64,
    pub iterations: usize,
    pub trace: FitTrace,
}

fn initial_emission(data: &Dataset, m: usize, config: &FitConfig) -> Result<EmissionModel> {
    match data.kind() {
        ObsKind::Symbols => {
            let n = data.alphabet_size();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let rows = (0..m)
                .map(|_| {
                    let mut row: Vec<f64> = (0..n)
                        .map(|_| 1.0 + config.init_noise * rng.random_range(-1.0..1.0))
                        .collect();
                    let total: f64 = row.iter().sum();
                    row.iter_mut().for_each(|p| *p /= total);
                    row
                })
                .collect();
            Ok(EmissionModel::Multinomial(rows))
        }
        ObsKind::Gaussian => {
            let mut values: Vec<f64> = data
                .sequences()
                .iter()
                .flat_map(|s| match s.values() {
                    ObsValues::Reals(v) => v.clone(),
                    _ => Vec::new(),
                })
                .collect();
            values.sort_by(f64::total_cmp);
            let len = values.len();
            Ok(EmissionModel::Gaussian(
                (0..m)
                    .map(|s| values[(((s as f64 + 0.5) / m as f64) * len as f64) as usize % len])
                    .collect(),
            ))
        }
        ObsKind::Direct => invalid("directly observed data has no emission model"),
    }
}

pub(crate) fn params_digest(params: &MjpParams, emission: Option<&EmissionModel>) -> u64 {
    let mut v: Vec<f64> = params.transition.iter().flatten().copied().collect();
    v.extend(&params.rates);
    match emission {
        Some(EmissionModel::Multinomial(rows)) => v.extend(rows.iter().flatten()),
        Some(EmissionModel::Gaussian(means)) => v.extend(means),
        None => {}
    }
    fnv1a(v)
}

/// Alternates exact state decoding, dwell-time optimization and closed-form
/// parameter updates until the relative objective change drops below
/// `config.tol` or `config.max_iters` iterations have run. The objective
/// recorded in the trace never increases.
pub fn fit(
    data: &Dataset,
    kind: ModelKind,
    config: &FitConfig,
    eval: Option<&Evaluation>,
) -> Result<ParametricFit> {
    config.validate()?;
    let hyper = config.hyper;
    match (kind, data.kind()) {
        (ModelKind::Domjp, ObsKind::Direct) | (ModelKind::Hmjp, ObsKind::Symbols | ObsKind::Gaussian) => {}
        _ => return invalid(format!("{kind:?} cannot be fit to {:?} observations", data.kind())),
    }
    let m = match (config.num_states, data.kind()) {
        (Some(m), _) => m,
        (None, ObsKind::Gaussian) => return invalid("number of states required for Gaussian observations"),
        (None, _) => data.alphabet_size(),
    };
    if m == 0 || (kind == ModelKind::Domjp && m < data.alphabet_size()) {
        return invalid(format!("{m} states cannot explain the observed alphabet"));
    }

    let mut params = MjpParams::uniform(m);
    let mut emission = match kind {
        ModelKind::Domjp => None,
        ModelKind::Hmjp => Some(initial_emission(data, m, config)?),
    };
    let mut obs = costs_for(data, m, emission.as_ref(), hyper.zeta)?;
    let edge = edge_costs(&params, &hyper);
    let mut segs: Vec<SegmentedTrajectory> = data
        .sequences()
        .par_iter()
        .zip(obs.par_iter())
        .enumerate()
        .map(|(i, (seq, table))| {
            let seg = SegmentedTrajectory::initial(seq.times(), seq.horizon(), vec![0; seq.len()])?;
            let (labels, _) = merged_run_viterbi(&bounds_of(&seg), table, m, &edge, rate_run_cost(&params.rates))
                .ok_or(Error::Infeasible { sequence: i })?;
            let mut seg = seg;
            seg.set_states(labels);
            Ok(seg)
        })
        .collect::<Result<_>>()?;

    let mut recorder = Recorder::new(data, eval, config.timed);
    let mut previous = f64::INFINITY;
    let mut objective = f64::INFINITY;
    let mut iterations = 0;
    for iter in 0..config.max_iters {
        iterations = iter + 1;
        if kind == ModelKind::Hmjp && iter > 0 {
            let edge = edge_costs(&params, &hyper);
            segs.par_iter_mut().zip(obs.par_iter()).for_each(|(seg, table)| {
                if let Some((labels, _)) = merged_run_viterbi(&bounds_of(seg), table, m, &edge, rate_run_cost(&params.rates)) {
                    let current = segmentation_cost(seg, table, &params, &hyper);
                    let mut candidate = seg.clone();
                    candidate.set_states(labels);
                    if segmentation_cost(&candidate, table, &params, &hyper) <= current {
                        *seg = candidate;
                    }
                }
            });
        }
        segs.par_iter_mut().for_each(|seg| {
            let before = seg.clone();
            let f0 = dynamics_only(seg, &params, &hyper);
            optimize_dwell_in_place(seg, &params.rates, config.dwell);
            if dynamics_only(seg, &params, &hyper) > f0 {
                *seg = before;
            }
        });

        let mut stats = TransitionStats::new(m);
        segs.iter().for_each(|s| stats.add_segmentation(s));
        let (transition, rates) = update_transition_and_rates(&stats, &hyper);
        params.transition = transition;
        params.rates = rates;
        params.initial = initial_frequencies(&segs, m);
        if let Some(em) = &emission {
            let mut es = match em {
                EmissionModel::Multinomial(rows) => EmissionStats::symbols(m, rows[0].len()),
                EmissionModel::Gaussian(_) => EmissionStats::reals(m),
            };
            for (seq, seg) in data.sequences().iter().zip(&segs) {
                for (k, &s) in seg.states().iter().enumerate() {
                    es.add(s, seq.values().get(k))?;
                }
            }
            emission = Some(update_emissions(&es, Some(em)));
            obs = costs_for(data, m, emission.as_ref(), hyper.zeta)?;
        }

        objective = total_objective(&segs, &obs, &params, &hyper);
        if !objective.is_finite() {
            return Err(Error::NonFinite(format!("objective at iteration {iterations}")));
        }
        let trajs = if eval.is_some() { trajectories(&segs)? } else { Vec::new() };
        recorder.record(
            objective,
            m,
            &trajs,
            emission.as_ref(),
            params_digest(&params, emission.as_ref()),
        )?;
        if previous.is_finite() && (previous - objective).abs() <= config.tol * previous.abs().max(1.0) {
            break;
        }
        previous = objective;
    }

    Ok(ParametricFit {
        trajectories: trajectories(&segs)?,
        params,
        emission,
        segmentations: segs,
        objective,
        iterations,
        trace: recorder.trace,
    })
}

fn costs_for(data: &Dataset, m: usize, emission: Option<&EmissionModel>, zeta: f64) -> Result<Vec<Vec<f64>>> {
    data.sequences()
        .par_iter()
        .map(|seq| observation_costs(seq, m, emission, zeta))
        .collect()
}

fn dynamics_only(seg: &SegmentedTrajectory, params: &MjpParams, hyper: &Hyperparams) -> f64 {
    let zeros = vec![0.0; seg.len() * params.num_states()];
    segmentation_cost(seg, &zeros, params, hyper)
}

pub(crate) fn total_objective(
    segs: &[SegmentedTrajectory],
    obs: &[Vec<f64>],
    params: &MjpParams,
    hyper: &Hyperparams,
) -> f64 {
    segs.iter()
        .zip(obs)
        .map(|(seg, table)| segmentation_cost(seg, table, params, hyper))
        .sum::<f64>()
        + rate_prior_cost(&params.rates, hyper)
}

/// Empirical distribution of the initial states; the objective leaves the
/// initial state unpenalized, so this is reporting only.
fn initial_frequencies(segs: &[SegmentedTrajectory], m: usize) -> Vec<f64> {
    let mut counts = vec![0.0; m];
    for seg in segs {
        counts[seg.states()[0]] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    counts.iter().map(|c| c / total).collect()
}

pub(crate) fn trajectories(segs: &[SegmentedTrajectory]) -> Result<Vec<Trajectory>> {
    segs.iter().map(SegmentedTrajectory::to_trajectory).collect()
}
