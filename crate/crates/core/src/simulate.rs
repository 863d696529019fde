//! Forward sampling of trajectories and synthetic datasets.
//!
//! Every dataset is a pure function of its [`SyntheticSpec`]: parameters are
//! drawn from stream 0 of a ChaCha8 generator seeded with `spec.seed`, and
//! sequence `i` uses stream `i + 1`, so output does not depend on thread
//! scheduling and the first `n` sequences of any dataset equal the dataset
//! of size `n`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::data::{Dataset, ObsSeq, ObsValues};
use crate::error::{invalid, Result};
use crate::mjp::{EmissionModel, MjpParams, Trajectory};

pub const PRNG_NAME: &str = "ChaCha8Rng";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmissionKind {
    Multinomial,
    Gaussian,
}

/// Generator settings. `horizon: None` means one time unit per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_states: usize,
    pub num_symbols: usize,
    pub num_sequences: usize,
    pub obs_per_sequence: usize,
    pub horizon: Option<f64>,
    pub emission: EmissionKind,
    /// Dirichlet concentration for jump and emission rows.
    pub concentration: f64,
    pub rate_shape: f64,
    pub rate_rate: f64,
    /// Distance between consecutive Gaussian state means.
    pub gaussian_spacing: f64,
    pub gaussian_noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// 10 directly observed states, 500 sequences of 20 observations.
    pub fn synthetic1(seed: u64) -> Self {
        Self {
            num_states: 10,
            num_symbols: 10,
            num_sequences: 500,
            obs_per_sequence: 20,
            horizon: None,
            emission: EmissionKind::Multinomial,
            concentration: 1.0,
            rate_shape: 1.0,
            rate_rate: 1.0,
            gaussian_spacing: 10.0,
            gaussian_noise: 1.0,
            seed,
        }
    }

    /// 5 hidden states emitting 5 symbols.
    pub fn synthetic2(seed: u64) -> Self {
        Self {
            num_states: 5,
            num_symbols: 5,
            ..Self::synthetic1(seed)
        }
    }

    /// 5 hidden states with Gaussian emissions.
    pub fn gaussian(seed: u64) -> Self {
        Self {
            emission: EmissionKind::Gaussian,
            ..Self::synthetic2(seed)
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(self.obs_per_sequence as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 || self.num_sequences == 0 || self.obs_per_sequence == 0 {
            return invalid("state, sequence and observation counts must be at least 1");
        }
        if self.emission == EmissionKind::Multinomial && self.num_symbols == 0 {
            return invalid("need at least one observation symbol");
        }
        let h = self.horizon();
        if !(h > 0.0 && h.is_finite()) {
            return invalid(format!("horizon must be positive, got {h}"));
        }
        for (name, v) in [
            ("concentration", self.concentration),
            ("rate_shape", self.rate_shape),
            ("rate_rate", self.rate_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.gaussian_noise >= 0.0) {
            return invalid("gaussian_noise must be non-negative");
        }
        Ok(())
    }

    /// Equally spaced observation times `i T / n`, starting at 0.
    pub fn obs_times(&self) -> Vec<f64> {
        let n = self.obs_per_sequence;
        let h = self.horizon();
        (0..n).map(|i| i as f64 * h / n as f64).collect()
    }
}

/// A generated dataset with the parameters and paths that produced it.
#[derive(Debug, Clone)]
pub struct Generated {
    pub dataset: Dataset,
    pub params: MjpParams,
    pub emission: Option<EmissionModel>,
    /// Bin thresholds separating Gaussian state means (Gaussian only).
    pub thresholds: Option<Vec<f64>>,
    pub trajectories: Vec<Trajectory>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn sequence_rng(seed: u64, index: usize) -> ChaCha8Rng {
    stream_rng(seed, index as u64 + 1)
}

fn dirichlet_row<R: Rng>(len: usize, skip: Option<usize>, alpha: f64, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("positive concentration");
    let mut row: Vec<f64> = (0..len)
        .map(|j| if Some(j) == skip { 0.0 } else { gamma.sample(rng) })
        .collect();
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        row.iter_mut().for_each(|p| *p /= total);
    } else {
        let k = len - usize::from(skip.is_some());
        row.iter_mut()
            .enumerate()
            .for_each(|(j, p)| *p = if Some(j) == skip { 0.0 } else { 1.0 / k as f64 });
    }
    row
}

/// Draws jump rows from a Dirichlet over the off-diagonal entries, rates
/// from a gamma prior and a uniform initial distribution.
pub fn sample_params<R: Rng>(spec: &SyntheticSpec, rng: &mut R) -> MjpParams {
    let m = spec.num_states;
    let transition = (0..m)
        .map(|s| {
            if m == 1 {
                vec![0.0]
            } else {
                dirichlet_row(m, Some(s), spec.concentration, rng)
            }
        })
        .collect();
    let gamma = Gamma::new(spec.rate_shape, 1.0 / spec.rate_rate).expect("positive prior");
    let rates = (0..m).map(|_| gamma.sample(rng)).collect();
    MjpParams {
        initial: vec![1.0 / m as f64; m],
        transition,
        rates,
    }
}

struct Sampler {
    initial: WeightedIndex<f64>,
    rows: Vec<Option<WeightedIndex<f64>>>,
    dwell: Vec<Exp<f64>>,
}

impl Sampler {
    fn new(params: &MjpParams) -> Result<Self> {
        if let Some(v) = params.validate().first() {
            return invalid(format!("invalid parameters: {v}"));
        }
        let initial = WeightedIndex::new(&params.initial)
            .map_err(|e| crate::Error::InvalidInput(format!("initial distribution: {e}")))?;
        let rows = params
            .transition
            .iter()
            .map(|row| WeightedIndex::new(row).ok())
            .collect();
        let dwell = params
            .rates
            .iter()
            .map(|&r| Exp::new(r).expect("positive rate"))
            .collect();
        Ok(Self {
            initial,
            rows,
            dwell,
        })
    }

    fn sample<R: Rng>(&self, horizon: f64, rng: &mut R) -> Result<Trajectory> {
        let mut states = vec![self.initial.sample(rng)];
        let mut dwell_times = Vec::new();
        let mut elapsed = 0.0;
        loop {
            let s = *states.last().expect("non-empty");
            let Some(row) = &self.rows[s] else { break };
            let t = self.dwell[s].sample(rng);
            if !(t > 0.0) {
                continue;
            }
            if elapsed + t >= horizon {
                break;
            }
            elapsed += t;
            dwell_times.push(t);
            states.push(row.sample(rng));
        }
        Trajectory::new(states, dwell_times, horizon)
    }
}

/// Samples a path over `[0, horizon]`: start from the initial distribution,
/// draw exponential dwells and jump along the rows of `P` until the horizon
/// is reached; the last state is censored at the horizon.
pub fn sample_trajectory<R: Rng>(params: &MjpParams, horizon: f64, rng: &mut R) -> Result<Trajectory> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return invalid(format!("horizon must be positive, got {horizon}"));
    }
    Sampler::new(params)?.sample(horizon, rng)
}

fn state_at_times(traj: &Trajectory, times: &[f64]) -> Vec<usize> {
    let jumps = traj.jump_times();
    let mut k = 0;
    times
        .iter()
        .map(|&t| {
            while k < jumps.len() && jumps[k] <= t {
                k += 1;
            }
            traj.states()[k]
        })
        .collect()
}

/// Observes paths of fixed `params` either directly or through `emission`.
pub fn sample_dataset(
    params: &MjpParams,
    emission: Option<&EmissionModel>,
    spec: &SyntheticSpec,
) -> Result<Generated> {
    spec.validate()?;
    let sampler = Sampler::new(params)?;
    let horizon = spec.horizon();
    let times = spec.obs_times();
    let symbol_rows = match emission {
        Some(EmissionModel::Multinomial(rows)) => {
            if rows.len() != params.num_states() {
                return invalid("emission rows do not match the number of states");
            }
            Some(
                rows.iter()
                    .map(|r| WeightedIndex::new(r).map_err(|e| crate::Error::InvalidInput(e.to_string())))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
        _ => None,
    };
    let means = match emission {
        Some(EmissionModel::Gaussian(means)) => {
            if means.len() != params.num_states() {
                return invalid("emission means do not match the number of states");
            }
            Some(means.as_slice())
        }
        _ => None,
    };
    let noise = spec.gaussian_noise;
    let seqs: Vec<(Trajectory, ObsSeq)> = (0..spec.num_sequences)
        .into_par_iter()
        .map(|i| {
            let mut rng = sequence_rng(spec.seed, i);
            let traj = sampler.sample(horizon, &mut rng)?;
            let states = state_at_times(&traj, &times);
            let values = if let Some(rows) = &symbol_rows {
                ObsValues::Symbols(states.iter().map(|&s| rows[s].sample(&mut rng)).collect())
            } else if let Some(means) = means {
                ObsValues::Reals(
                    states
                        .iter()
                        .map(|&s| {
                            let z: f64 = rng.sample(StandardNormal);
                            means[s] + noise * z
                        })
                        .collect(),
                )
            } else {
                ObsValues::States(states)
            };
            let seq = ObsSeq::new(times.clone(), values, horizon)?;
            Ok((traj, seq))
        })
        .collect::<Result<_>>()?;
    let (trajectories, sequences): (Vec<_>, Vec<_>) = seqs.into_iter().unzip();
    let thresholds = means.map(|m| {
        let mut sorted = m.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    });
    Ok(Generated {
        dataset: Dataset::new(sequences)?,
        params: params.clone(),
        emission: emission.cloned(),
        thresholds,
        trajectories,
    })
}

/// Directly observed dataset with parameters drawn from the priors.
pub fn generate_synthetic1(spec: &SyntheticSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, 0);
    let params = sample_params(spec, &mut rng);
    sample_dataset(&params, None, spec)
}

/// Hidden-state dataset; emission rows are Dirichlet draws, or state means
/// `spacing · s` for Gaussian emissions.
pub fn generate_synthetic2(spec: &SyntheticSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, 0);
    let params = sample_params(spec, &mut rng);
    let emission = match spec.emission {
        EmissionKind::Multinomial => EmissionModel::Multinomial(
            (0..spec.num_states)
                .map(|_| dirichlet_row(spec.num_symbols, None, spec.concentration, &mut rng))
                .collect(),
        ),
        EmissionKind::Gaussian => EmissionModel::Gaussian(
            (0..spec.num_states)
                .map(|s| spec.gaussian_spacing * s as f64)
                .collect(),
        ),
    };
    sample_dataset(&params, Some(&emission), spec)
}

/// One parameter draw observed at several dataset sizes; each dataset is a
/// prefix of the next.
pub fn generate_scaling_suite(spec: &SyntheticSpec, sizes: &[usize]) -> Result<Vec<Generated>> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[1] <= w[0]) || sizes[0] == 0 {
        return invalid("sizes must be positive and strictly increasing");
    }
    let largest = SyntheticSpec {
        num_sequences: *sizes.last().expect("non-empty"),
        ..spec.clone()
    };
    let full = generate_synthetic2(&largest)?;
    sizes
        .iter()
        .map(|&n| {
            Ok(Generated {
                dataset: full.dataset.prefix(n)?,
                params: full.params.clone(),
                emission: full.emission.clone(),
                thresholds: full.thresholds.clone(),
                trajectories: full.trajectories[..n].to_vec(),
            })
        })
        .collect()
}
