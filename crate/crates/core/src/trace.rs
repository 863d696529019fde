//! Per-iteration records of a fit.

use std::time::Instant;

use crate::data::Dataset;
use crate::error::Result;
use crate::eval::{reconstruction_error, Decoder, HeldoutSeq};
use crate::mjp::{EmissionModel, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub num_states: usize,
    /// `NaN` when not evaluated.
    pub train_error: f64,
    pub heldout_error: f64,
    pub cum_seconds: f64,
    /// FNV-1a digest of the parameters after the iteration.
    pub params_digest: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitTrace {
    pub rows: Vec<TraceRow>,
}

impl FitTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective).collect()
    }

    /// True when no step increases the objective by more than `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].objective <= w[0].objective + slack)
    }
}

/// Held-out data scored after every iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub heldout: Vec<HeldoutSeq>,
    /// Bin thresholds for Gaussian observations.
    pub thresholds: Option<Vec<f64>>,
}

pub fn fnv1a<I: IntoIterator<Item = f64>>(values: I) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

pub(crate) struct Recorder<'a> {
    start: Instant,
    timed: bool,
    eval: Option<&'a Evaluation>,
    train: &'a Dataset,
    pub trace: FitTrace,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(train: &'a Dataset, eval: Option<&'a Evaluation>, timed: bool) -> Self {
        Self {
            start: Instant::now(),
            timed,
            eval,
            train,
            trace: FitTrace::default(),
        }
    }

    pub(crate) fn record(
        &mut self,
        objective: f64,
        num_states: usize,
        trajectories: &[Trajectory],
        emission: Option<&EmissionModel>,
        params_digest: u64,
    ) -> Result<()> {
        let (mut train_error, mut heldout_error) = (f64::NAN, f64::NAN);
        if let Some(eval) = self.eval {
            let decoder = Decoder::new(emission, eval.thresholds.as_deref())?;
            let train: Vec<HeldoutSeq> = self.train.sequences().iter().map(HeldoutSeq::from_seq).collect();
            train_error = reconstruction_error(trajectories, &train, &decoder)?.error_percent;
            if eval.heldout.iter().any(|h| !h.is_empty()) {
                heldout_error = reconstruction_error(trajectories, &eval.heldout, &decoder)?.error_percent;
            }
        }
        let cum_seconds = if self.timed {
            self.start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        self.trace.rows.push(TraceRow {
            iteration: self.trace.rows.len() + 1,
            objective,
            num_states,
            train_error,
            heldout_error,
            cum_seconds,
            params_digest,
        });
        Ok(())
    }
}
