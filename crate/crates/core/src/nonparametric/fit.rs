use rayon::prelude::*;

use crate::data::{Dataset, ObsKind, ObsValues};
use crate::dwell::DwellSolverConfig;
use crate::error::{invalid, Error, Result};
use crate::mjp::{EmissionModel, Hyperparams};
use crate::segments::SegmentedTrajectory;
use crate::trace::{fnv1a, Evaluation, FitTrace, Recorder};
use crate::Trajectory;

use super::model::{NpModel, NpSuffStats};
use super::split::{reestimate, split_labels, split_stats};
use super::viterbi::{mm_weights, solve_weighted, viterbi_imjp};

#[derive(Debug, Clone, PartialEq)]
pub struct NpFitConfig {
    pub hyper: Hyperparams,
    pub max_iters: usize,
    /// Stop when no state was created and the relative objective change
    /// falls below this value.
    pub tol: f64,
    pub dwell: DwellSolverConfig,
    /// Majorize-minimize rounds of the dwell step per iteration.
    pub mm_rounds: usize,
    /// Number of best split candidates refined before choosing one.
    pub split_refine: usize,
    /// Relabel-and-update rounds spent on each refined candidate.
    pub refine_rounds: usize,
    pub timed: bool,
}

impl Default for NpFitConfig {
    fn default() -> Self {
        Self {
            hyper: Hyperparams::nonparametric_default(),
            max_iters: 50,
            tol: 1e-6,
            dwell: DwellSolverConfig::default(),
            mm_rounds: 5,
            split_refine: 2,
            refine_rounds: 3,
            timed: true,
        }
    }
}

impl NpFitConfig {
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.max_iters == 0 {
            return invalid("max_iters must be at least 1");
        }
        if !(self.tol >= 0.0) || !(self.dwell.tol > 0.0) || self.dwell.max_iters == 0 {
            return invalid("tolerances must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NpFit {
    pub model: NpModel,
    pub segmentations: Vec<SegmentedTrajectory>,
    pub trajectories: Vec<Trajectory>,
    pub objective: f64,
    pub iterations: usize,
    pub trace: FitTrace,
}

/// Current labels, parameters and their pooled statistics.
#[derive(Clone)]
struct Work<'a> {
    data: &'a Dataset,
    model: NpModel,
    segs: Vec<SegmentedTrajectory>,
    stats: NpSuffStats,
}

impl Work<'_> {
    fn refresh(&mut self) -> Result<()> {
        self.stats =
            NpSuffStats::from_segmentations(self.data, &self.segs, self.model.num_states(), &self.model.emission)?;
        Ok(())
    }

    fn objective(&self) -> f64 {
        self.stats.objective(&self.model)
    }

    /// Proposes new labels for every sequence in parallel against a frozen
    /// snapshot, then accepts them one at a time only when the exact
    /// objective drops.
    fn viterbi_pass(&mut self) -> Result<()> {
        let m = self.model.num_states();
        let (model, snapshot) = (&self.model, &self.stats);
        let proposals = self
            .data
            .sequences()
            .par_iter()
            .zip(self.segs.par_iter())
            .map(|(seq, seg)| {
                let own = NpSuffStats::of_sequence(seq, seg, m, &model.emission)?;
                let mut background = snapshot.clone();
                background.accumulate(&own, -1.0);
                let labels = viterbi_imjp(seq, seg, model, &background)?;
                Ok((labels != seg.states()).then_some((labels, own)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut current = self.objective();
        for (i, proposal) in proposals.into_iter().enumerate() {
            let Some((labels, own)) = proposal else { continue };
            let seq = &self.data.sequences()[i];
            let mut trial = self.stats.clone();
            trial.accumulate(&own, -1.0);
            let mut fresh = NpSuffStats::new(m, &self.model.emission);
            fresh.add_labeled(seq, &self.segs[i], &labels)?;
            trial.accumulate(&fresh, 1.0);
            let value = trial.objective(&self.model);
            if value < current {
                self.stats = trial;
                self.segs[i].set_states(labels);
                current = value;
            }
        }
        self.refresh()
    }

    /// Majorize-minimize on the jump positions of all sequences at once: the
    /// tangent of each concave `ln(γ + S_m)` makes the problem separate into
    /// one convex chain per sequence.
    fn dwell_pass(&mut self, config: &NpFitConfig) -> Result<()> {
        let gamma = self.model.hyper.gamma;
        for _ in 0..config.mm_rounds {
            let before = self.objective();
            let weights = mm_weights(&self.stats.dwell_count, &self.stats.dwell_sum, gamma);
            let saved = self.segs.clone();
            self.segs
                .par_iter_mut()
                .for_each(|seg| {
                    solve_weighted(seg, &weights, config.dwell);
                });
            self.refresh()?;
            let after = self.objective();
            if !(after <= before) {
                self.segs = saved;
                return self.refresh();
            }
            if before - after <= 1e-12 * before.abs().max(1.0) {
                break;
            }
        }
        Ok(())
    }

    fn update(&mut self) {
        reestimate(&mut self.model, &self.stats);
    }

    /// Drops states that label no segment; their transition mass joins the
    /// unused slot.
    fn remove_empty(&mut self) -> Result<bool> {
        let m = self.model.num_states();
        let keep: Vec<usize> = (0..m).filter(|&s| self.stats.occupancy[s] > 0.0).collect();
        if keep.len() == m {
            return Ok(false);
        }
        let mut index = vec![usize::MAX; m];
        for (new, &old) in keep.iter().enumerate() {
            index[old] = new;
        }
        let squeeze = |row: &[f64]| {
            let mut r: Vec<f64> = keep.iter().map(|&j| row[j]).collect();
            r.push(row[m] + (0..m).filter(|&j| index[j] == usize::MAX).map(|j| row[j]).sum::<f64>());
            r
        };
        self.model.pi0 = squeeze(&self.model.pi0);
        self.model.pi_rows = keep.iter().map(|&s| squeeze(&self.model.pi_rows[s])).collect();
        self.model.emission = match &self.model.emission {
            EmissionModel::Multinomial(rows) => {
                EmissionModel::Multinomial(keep.iter().map(|&s| rows[s].clone()).collect())
            }
            EmissionModel::Gaussian(means) => EmissionModel::Gaussian(keep.iter().map(|&s| means[s]).collect()),
        };
        for seg in &mut self.segs {
            let labels = seg.states().iter().map(|&s| index[s]).collect();
            seg.set_states(labels);
        }
        self.refresh()?;
        self.update();
        Ok(true)
    }

    /// Scores every split, refines the most promising ones and returns the
    /// best refined state if it lowers the objective.
    fn best_split(&self, config: &NpFitConfig) -> Result<Option<Work<'_>>> {
        let m = self.model.num_states();
        let pairs: Vec<(usize, usize)> = (0..m)
            .flat_map(|a| (0..m).map(move |b| (a, b)))
            .filter(|&(a, b)| {
                if a == b {
                    self.stats.continuations[a] > 0.0
                } else {
                    self.stats.counts[a][b] > 0.0
                }
            })
            .collect();
        let mut scored = pairs
            .par_iter()
            .map(|&(a, b)| {
                let (cand, stats) = split_stats(self.data, &self.segs, &self.model, a, b)?;
                Ok((stats.objective(&cand), a, b))
            })
            .collect::<Result<Vec<_>>>()?;
        scored.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let current = self.objective();
        let mut best: Option<(f64, Work<'_>)> = None;
        for &(_, a, b) in scored.iter().take(config.split_refine.max(1)) {
            let mut w = Work {
                data: self.data,
                model: super::split::extend_model(&self.model, b),
                segs: self.segs.clone(),
                stats: self.stats.clone(),
            };
            for seg in &mut w.segs {
                if let Some(labels) = split_labels(seg.states(), a, b, m) {
                    seg.set_states(labels);
                }
            }
            w.refresh()?;
            w.update();
            for _ in 0..config.refine_rounds {
                w.viterbi_pass()?;
                w.update();
                w.remove_empty()?;
            }
            let value = w.objective();
            if best.as_ref().is_none_or(|(v, _)| value < *v) {
                best = Some((value, w));
            }
        }
        Ok(best
            .filter(|(v, _)| *v < current - 1e-10 * current.abs().max(1.0))
            .map(|(_, w)| w))
    }
}

fn initial_emission(data: &Dataset) -> Result<EmissionModel> {
    match data.kind() {
        ObsKind::Symbols => {
            let n = data.alphabet_size();
            Ok(EmissionModel::Multinomial(vec![vec![1.0 / n as f64; n]]))
        }
        ObsKind::Gaussian => {
            let (sum, count) = data.sequences().iter().fold((0.0, 0usize), |(s, c), seq| match seq.values() {
                ObsValues::Reals(v) => (s + v.iter().sum::<f64>(), c + v.len()),
                _ => (s, c),
            });
            Ok(EmissionModel::Gaussian(vec![sum / count as f64]))
        }
        ObsKind::Direct => invalid("the infinite-state model needs hidden-state observations"),
    }
}

fn model_digest(model: &NpModel) -> u64 {
    let mut v: Vec<f64> = model.pi0.clone();
    v.extend(model.pi_rows.iter().flatten());
    match &model.emission {
        EmissionModel::Multinomial(rows) => v.extend(rows.iter().flatten()),
        EmissionModel::Gaussian(means) => v.extend(means),
    }
    fnv1a(v)
}

/// Starts from one state and alternates relabeling, dwell optimization,
/// parameter updates and state creation. At most one state is created per
/// iteration; states left without segments are removed. The objective
/// recorded in the trace never increases.
pub fn fit_imjp(data: &Dataset, config: &NpFitConfig, eval: Option<&Evaluation>) -> Result<NpFit> {
    config.validate()?;
    let emission = initial_emission(data)?;
    let segs = data
        .sequences()
        .iter()
        .map(|seq| SegmentedTrajectory::initial(seq.times(), seq.horizon(), vec![0; seq.len()]))
        .collect::<Result<Vec<_>>>()?;
    let mut work = Work {
        data,
        model: NpModel::uniform(emission, config.hyper),
        segs,
        stats: NpSuffStats::new(1, &EmissionModel::Gaussian(vec![0.0])),
    };
    work.refresh()?;
    work.update();

    let mut recorder = Recorder::new(data, eval, config.timed);
    let mut previous = f64::INFINITY;
    let mut iterations = 0;
    for iter in 0..config.max_iters {
        iterations = iter + 1;
        work.viterbi_pass()?;
        work.update();
        work.dwell_pass(config)?;
        work.update();
        let created = match work.best_split(config)? {
            Some(next) => {
                let next = Work { data, ..next };
                work = next;
                true
            }
            None => false,
        };
        work.remove_empty()?;

        let objective = work.objective();
        if !objective.is_finite() {
            return Err(Error::NonFinite(format!("objective at iteration {iterations}")));
        }
        let trajs = if eval.is_some() {
            work.segs.iter().map(SegmentedTrajectory::to_trajectory).collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        recorder.record(
            objective,
            work.model.num_states(),
            &trajs,
            Some(&work.model.emission),
            model_digest(&work.model),
        )?;
        if !created && previous.is_finite() && (previous - objective).abs() <= config.tol * previous.abs().max(1.0) {
            break;
        }
        previous = objective;
    }

    let objective = work.objective();
    Ok(NpFit {
        trajectories: work.segs.iter().map(SegmentedTrajectory::to_trajectory).collect::<Result<_>>()?,
        model: work.model,
        segmentations: work.segs,
        objective,
        iterations,
        trace: recorder.trace,
    })
}
