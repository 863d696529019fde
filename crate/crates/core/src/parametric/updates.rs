use crate::data::ObsValue;
use crate::error::{invalid, Result};
use crate::mjp::{EmissionModel, Hyperparams, Trajectory};
use crate::segments::SegmentedTrajectory;

/// Pooled path statistics: jump counts, completed dwells per state and the
/// censored final dwell of every sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionStats {
    pub counts: Vec<Vec<f64>>,
    pub dwell_count: Vec<f64>,
    pub dwell_sum: Vec<f64>,
    pub censored: Vec<Vec<f64>>,
}

impl TransitionStats {
    pub fn new(num_states: usize) -> Self {
        Self {
            counts: vec![vec![0.0; num_states]; num_states],
            dwell_count: vec![0.0; num_states],
            dwell_sum: vec![0.0; num_states],
            censored: vec![Vec::new(); num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.dwell_count.len()
    }

    pub fn add_trajectory(&mut self, traj: &Trajectory) {
        let states = traj.states();
        for (k, &t) in traj.dwell_times().iter().enumerate() {
            self.counts[states[k]][states[k + 1]] += 1.0;
            self.dwell_count[states[k]] += 1.0;
            self.dwell_sum[states[k]] += t;
        }
        self.censored[*states.last().expect("non-empty")].push(traj.final_time());
    }

    pub(crate) fn add_segmentation(&mut self, seg: &SegmentedTrajectory) {
        let runs = seg.runs();
        for (i, run) in runs.iter().enumerate() {
            if i + 1 == runs.len() {
                self.censored[run.state].push(run.duration());
            } else {
                self.counts[run.state][runs[i + 1].state] += 1.0;
                self.dwell_count[run.state] += 1.0;
                self.dwell_sum[run.state] += run.duration();
            }
        }
    }

    pub fn from_trajectories(trajs: &[Trajectory], num_states: usize) -> Self {
        let mut stats = Self::new(num_states);
        trajs.iter().for_each(|t| stats.add_trajectory(t));
        stats
    }
}

/// Row frequencies of the jump counts; rows without jumps become uniform
/// over the other states.
pub fn update_transition(counts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = counts.len();
    counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: f64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, c)| c).sum();
            (0..m)
                .map(|j| {
                    if j == i {
                        0.0
                    } else if total > 0.0 {
                        row[j] / total
                    } else if m > 1 {
                        1.0 / (m - 1) as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Exact minimizer in `λ_m` of the prior, completed-dwell and censored
/// terms. With no censored term active this is
/// `(ξ_λ + n_m) / (ξ_λ μ_λ + Σ t)`; a censored dwell `c` joins the sums
/// exactly when `λ c >= 1` at the optimum.
pub fn update_rates(stats: &TransitionStats, hyper: &Hyperparams) -> Vec<f64> {
    (0..stats.num_states())
        .map(|m| {
            let mut cens = stats.censored[m].clone();
            cens.sort_by(|a, b| b.total_cmp(a));
            let base_num = hyper.xi_lambda + stats.dwell_count[m];
            let base_den = hyper.xi_lambda * hyper.mu_lambda + stats.dwell_sum[m];
            let mut added = 0.0;
            let mut candidates = Vec::with_capacity(cens.len() + 1);
            for j in 0..=cens.len() {
                if j > 0 {
                    added += cens[j - 1];
                }
                let rate = (base_num + j as f64) / (base_den + added);
                candidates.push(rate);
                let active_ok = j == 0 || rate * cens[j - 1] >= 1.0;
                let inactive_ok = j == cens.len() || rate * cens[j] < 1.0;
                if active_ok && inactive_ok {
                    return rate;
                }
            }
            // Rounding left no self-consistent set; take the best candidate.
            let value = |rate: f64| rate_block_value(rate, m, stats, hyper);
            candidates
                .into_iter()
                .min_by(|a, b| value(*a).total_cmp(&value(*b)))
                .expect("at least one candidate")
        })
        .collect()
}

/// Objective terms that depend on `λ_m`.
pub(crate) fn rate_block_value(rate: f64, m: usize, stats: &TransitionStats, hyper: &Hyperparams) -> f64 {
    let mut v = hyper.xi_lambda * (hyper.mu_lambda * rate - rate.ln() - 1.0);
    v += rate * stats.dwell_sum[m] - stats.dwell_count[m] * rate.ln();
    for &c in &stats.censored[m] {
        v += crate::asymptotics::censored_cost(rate * c);
    }
    v
}

pub fn update_transition_and_rates(
    stats: &TransitionStats,
    hyper: &Hyperparams,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    (update_transition(&stats.counts), update_rates(stats, hyper))
}

/// Observations pooled by assigned state.
#[derive(Debug, Clone, PartialEq)]
pub enum EmissionStats {
    Symbols(Vec<Vec<f64>>),
    Reals {
        sum: Vec<f64>,
        sumsq: Vec<f64>,
        count: Vec<f64>,
    },
}

impl EmissionStats {
    pub fn symbols(num_states: usize, num_symbols: usize) -> Self {
        EmissionStats::Symbols(vec![vec![0.0; num_symbols]; num_states])
    }

    pub fn reals(num_states: usize) -> Self {
        EmissionStats::Reals {
            sum: vec![0.0; num_states],
            sumsq: vec![0.0; num_states],
            count: vec![0.0; num_states],
        }
    }

    pub fn add(&mut self, state: usize, value: ObsValue) -> Result<()> {
        match (self, value) {
            (EmissionStats::Symbols(counts), ObsValue::Symbol(x)) => match counts[state].get_mut(x) {
                Some(c) => *c += 1.0,
                None => return invalid(format!("symbol {x} outside the emission alphabet")),
            },
            (EmissionStats::Reals { sum, sumsq, count }, ObsValue::Real(x)) => {
                sum[state] += x;
                sumsq[state] += x * x;
                count[state] += 1.0;
            }
            _ => return invalid("observation kind does not match the emission statistics"),
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        match self {
            EmissionStats::Symbols(c) => c.len(),
            EmissionStats::Reals { count, .. } => count.len(),
        }
    }

    /// Adds `sign` times `other`, state by state.
    pub(crate) fn accumulate(&mut self, other: &EmissionStats, sign: f64) {
        match (self, other) {
            (EmissionStats::Symbols(a), EmissionStats::Symbols(b)) => {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x += sign * y;
                    }
                }
            }
            (
                EmissionStats::Reals { sum, sumsq, count },
                EmissionStats::Reals {
                    sum: s2,
                    sumsq: q2,
                    count: c2,
                },
            ) => {
                for s in 0..sum.len().min(s2.len()) {
                    sum[s] += sign * s2[s];
                    sumsq[s] += sign * q2[s];
                    count[s] += sign * c2[s];
                }
            }
            _ => unreachable!("emission statistics of different kinds"),
        }
    }

    /// Unweighted emission penalty of the pooled observations under
    /// `emission`.
    pub fn cost(&self, emission: &EmissionModel) -> f64 {
        match (self, emission) {
            (EmissionStats::Symbols(counts), EmissionModel::Multinomial(rows)) => counts
                .iter()
                .zip(rows)
                .map(|(c, r)| {
                    c.iter()
                        .zip(r)
                        .filter(|(&n, _)| n > 0.0)
                        .map(|(&n, &p)| n * super::objective::neg_ln(p))
                        .sum::<f64>()
                })
                .sum(),
            (EmissionStats::Reals { sum, sumsq, count }, EmissionModel::Gaussian(means)) => (0..sum.len())
                .map(|s| (sumsq[s] - 2.0 * means[s] * sum[s] + count[s] * means[s] * means[s]).max(0.0))
                .sum(),
            _ => f64::INFINITY,
        }
    }
}

/// Empirical symbol frequencies per state (uniform rows for unused states),
/// or per-state means (unused states keep their `previous` mean, or 0).
pub fn update_emissions(stats: &EmissionStats, previous: Option<&EmissionModel>) -> EmissionModel {
    match stats {
        EmissionStats::Symbols(counts) => EmissionModel::Multinomial(
            counts
                .iter()
                .map(|row| {
                    let total: f64 = row.iter().sum();
                    if total > 0.0 {
                        row.iter().map(|c| c / total).collect()
                    } else {
                        vec![1.0 / row.len() as f64; row.len()]
                    }
                })
                .collect(),
        ),
        EmissionStats::Reals { sum, count, .. } => {
            let prev = match previous {
                Some(EmissionModel::Gaussian(m)) if m.len() == sum.len() => Some(m),
                _ => None,
            };
            EmissionModel::Gaussian(
                (0..sum.len())
                    .map(|s| {
                        if count[s] > 0.0 {
                            sum[s] / count[s]
                        } else {
                            prev.map_or(0.0, |m| m[s])
                        }
                    })
                    .collect(),
            )
        }
    }
}
