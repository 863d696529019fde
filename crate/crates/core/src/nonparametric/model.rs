use rayon::prelude::*;

use crate::asymptotics::kl_divergence;
use crate::data::{Dataset, ObsSeq};
use crate::error::{invalid, Error, Result};
use crate::mjp::{EmissionModel, Hyperparams, Violation};
use crate::parametric::EmissionStats;
use crate::segments::SegmentedTrajectory;

use crate::parametric::neg_ln;

const SIMPLEX_TOL: f64 = 1e-9;

/// Infinite-state model truncated to the `M` states in use. `pi0` and every
/// row of `pi_rows` have `M + 1` entries; the last one is the mass left for
/// states not yet created.
#[derive(Debug, Clone, PartialEq)]
pub struct NpModel {
    pub pi0: Vec<f64>,
    pub pi_rows: Vec<Vec<f64>>,
    pub emission: EmissionModel,
    pub hyper: Hyperparams,
}

impl NpModel {
    /// Uniform shared and per-state rows over `M + 1` slots.
    pub fn uniform(emission: EmissionModel, hyper: Hyperparams) -> Self {
        let m = emission.num_states();
        let row = vec![1.0 / (m + 1) as f64; m + 1];
        Self {
            pi0: row.clone(),
            pi_rows: vec![row; m],
            emission,
            hyper,
        }
    }

    pub fn num_states(&self) -> usize {
        self.pi_rows.len()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let m = self.pi_rows.len();
        let mut out = Vec::new();
        if m == 0 {
            out.push(Violation::ShapeMismatch("no states".into()));
            return out;
        }
        if self.pi0.len() != m + 1 || self.emission.num_states() != m {
            out.push(Violation::ShapeMismatch(format!(
                "{m} rows, {} shared entries, {} emission states",
                self.pi0.len(),
                self.emission.num_states()
            )));
            return out;
        }
        // Row 0 of the report is the shared distribution; state rows follow.
        for (i, row) in std::iter::once(&self.pi0).chain(&self.pi_rows).enumerate() {
            if row.len() != m + 1 {
                out.push(Violation::ShapeMismatch(format!("row {} has {} entries", i + 1, row.len())));
                continue;
            }
            if let Some(j) = row.iter().position(|&p| p < 0.0 || p.is_nan()) {
                out.push(Violation::NegativeEntry { row: i, col: j });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                out.push(Violation::RowNotNormalized { row: i, sum });
            }
        }
        out.extend(self.emission.validate());
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// `K ln((γ + S) / K)`, zero for a state that never jumps.
pub fn time_penalty(count: f64, sum: f64, gamma: f64) -> f64 {
    if count > 0.0 {
        count * ((gamma + sum) / count).ln()
    } else {
        0.0
    }
}

/// Pooled statistics of a labeled segmentation. Equal neighbouring
/// segments merge into one run, so a jump always changes the state; every
/// run but the last of a sequence is a completed dwell.
#[derive(Debug, Clone, PartialEq)]
pub struct NpSuffStats {
    /// `n_mj`: jumps from `m` to `j` (zero diagonal).
    pub counts: Vec<Vec<f64>>,
    /// `K_m`: completed dwells in `m`.
    pub dwell_count: Vec<f64>,
    /// Sum of the completed dwells in `m`.
    pub dwell_sum: Vec<f64>,
    /// Sum of their logarithms.
    pub log_dwell_sum: Vec<f64>,
    /// Segments labeled `m`.
    pub occupancy: Vec<f64>,
    /// Segments labeled `m` that continue a run of `m`.
    pub continuations: Vec<f64>,
    pub emission: EmissionStats,
}

impl NpSuffStats {
    pub fn new(num_states: usize, emission: &EmissionModel) -> Self {
        Self {
            counts: vec![vec![0.0; num_states]; num_states],
            dwell_count: vec![0.0; num_states],
            dwell_sum: vec![0.0; num_states],
            log_dwell_sum: vec![0.0; num_states],
            occupancy: vec![0.0; num_states],
            continuations: vec![0.0; num_states],
            emission: match emission {
                EmissionModel::Multinomial(rows) => {
                    EmissionStats::symbols(num_states, rows.first().map_or(0, Vec::len))
                }
                EmissionModel::Gaussian(_) => EmissionStats::reals(num_states),
            },
        }
    }

    pub fn num_states(&self) -> usize {
        self.occupancy.len()
    }

    pub fn add_sequence(&mut self, seq: &ObsSeq, seg: &SegmentedTrajectory) -> Result<()> {
        self.add_labeled(seq, seg, seg.states())
    }

    /// Adds the sequence with `states` in place of the segmentation's labels.
    pub(crate) fn add_labeled(&mut self, seq: &ObsSeq, seg: &SegmentedTrajectory, states: &[usize]) -> Result<()> {
        let m = self.num_states();
        if seg.len() != seq.len() || states.len() != seq.len() {
            return Err(Error::LengthMismatch {
                left: seg.len(),
                right: seq.len(),
            });
        }
        if let Some(&s) = states.iter().find(|&&s| s >= m) {
            return invalid(format!("state {s} outside a model with {m} states"));
        }
        let mut start = 0;
        for (k, &s) in states.iter().enumerate() {
            self.occupancy[s] += 1.0;
            self.emission.add(s, seq.values().get(k))?;
            if k == 0 {
                continue;
            }
            let prev = states[k - 1];
            if prev == s {
                self.continuations[s] += 1.0;
            } else {
                let d = seg.boundary(k) - seg.boundary(start);
                self.counts[prev][s] += 1.0;
                self.dwell_count[prev] += 1.0;
                self.dwell_sum[prev] += d;
                self.log_dwell_sum[prev] += d.ln();
                start = k;
            }
        }
        Ok(())
    }

    pub fn from_segmentations(
        data: &Dataset,
        segs: &[SegmentedTrajectory],
        num_states: usize,
        emission: &EmissionModel,
    ) -> Result<Self> {
        if data.len() != segs.len() {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: segs.len(),
            });
        }
        data.sequences()
            .par_iter()
            .zip(segs.par_iter())
            .try_fold(
                || Self::new(num_states, emission),
                |mut acc, (seq, seg)| {
                    acc.add_sequence(seq, seg)?;
                    Ok(acc)
                },
            )
            .try_reduce(
                || Self::new(num_states, emission),
                |mut a, b| {
                    a.accumulate(&b, 1.0);
                    Ok(a)
                },
            )
    }

    /// Statistics of a single sequence.
    pub(crate) fn of_sequence(
        seq: &ObsSeq,
        seg: &SegmentedTrajectory,
        num_states: usize,
        emission: &EmissionModel,
    ) -> Result<Self> {
        let mut s = Self::new(num_states, emission);
        s.add_sequence(seq, seg)?;
        Ok(s)
    }

    /// Adds `sign` times `other`.
    pub(crate) fn accumulate(&mut self, other: &Self, sign: f64) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += sign * y;
            }
        }
        for (a, b) in [
            (&mut self.dwell_count, &other.dwell_count),
            (&mut self.dwell_sum, &other.dwell_sum),
            (&mut self.log_dwell_sum, &other.log_dwell_sum),
            (&mut self.occupancy, &other.occupancy),
            (&mut self.continuations, &other.continuations),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += sign * y;
            }
        }
        self.emission.accumulate(&other.emission, sign);
    }

    /// Dwell-time terms: `Σ_m [K_m ln((γ + S_m)/K_m) - Σ ln t]`.
    pub fn time_cost(&self, gamma: f64) -> f64 {
        (0..self.num_states())
            .map(|m| time_penalty(self.dwell_count[m], self.dwell_sum[m], gamma) - self.log_dwell_sum[m])
            .sum()
    }

    /// Full objective of the labeled segmentation these statistics came from.
    pub fn objective(&self, model: &NpModel) -> f64 {
        let h = &model.hyper;
        let m = self.num_states();
        let mut total = h.zeta * self.emission.cost(&model.emission) + h.xi1 * m as f64;
        for (s, row) in model.pi_rows.iter().enumerate() {
            for (j, &n) in self.counts[s].iter().enumerate() {
                if n > 0.0 {
                    total += h.xi * n * neg_ln(row[j]);
                }
            }
            total += h.xi2 * kl_divergence(&model.pi0, row).unwrap_or(f64::INFINITY);
        }
        total + self.time_cost(h.gamma)
    }
}
