//! Observation sequences and datasets.

use crate::error::{invalid, Error, Result};

/// What an observation sequence records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObsKind {
    /// The state itself is observed.
    Direct,
    /// A discrete symbol emitted by the hidden state.
    Symbols,
    /// A real value emitted by the hidden state.
    Gaussian,
}

/// A single observed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObsValue {
    State(usize),
    Symbol(usize),
    Real(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObsValues {
    States(Vec<usize>),
    Symbols(Vec<usize>),
    Reals(Vec<f64>),
}

impl ObsValues {
    pub fn len(&self) -> usize {
        match self {
            ObsValues::States(v) | ObsValues::Symbols(v) => v.len(),
            ObsValues::Reals(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ObsKind {
        match self {
            ObsValues::States(_) => ObsKind::Direct,
            ObsValues::Symbols(_) => ObsKind::Symbols,
            ObsValues::Reals(_) => ObsKind::Gaussian,
        }
    }

    pub fn get(&self, i: usize) -> ObsValue {
        match self {
            ObsValues::States(v) => ObsValue::State(v[i]),
            ObsValues::Symbols(v) => ObsValue::Symbol(v[i]),
            ObsValues::Reals(v) => ObsValue::Real(v[i]),
        }
    }

    fn select(&self, keep: &[usize]) -> ObsValues {
        match self {
            ObsValues::States(v) => ObsValues::States(keep.iter().map(|&i| v[i]).collect()),
            ObsValues::Symbols(v) => ObsValues::Symbols(keep.iter().map(|&i| v[i]).collect()),
            ObsValues::Reals(v) => ObsValues::Reals(keep.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Timed observations of one realization over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsSeq {
    times: Vec<f64>,
    values: ObsValues,
    horizon: f64,
}

impl ObsSeq {
    /// Times must be strictly increasing inside `[0, horizon]`; directly
    /// observed sequences must start at time 0.
    pub fn new(times: Vec<f64>, values: ObsValues, horizon: f64) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: times.len(),
                right: values.len(),
            });
        }
        if times.is_empty() {
            return invalid("sequence has no observations");
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        if times.iter().any(|&t| !(0.0..=horizon).contains(&t)) {
            return invalid("observation time outside [0, horizon]");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("observation times must be strictly increasing");
        }
        if values.kind() == ObsKind::Direct && times[0] != 0.0 {
            return invalid("directly observed sequences must start at time 0");
        }
        if let ObsValues::Reals(v) = &values {
            if v.iter().any(|x| !x.is_finite()) {
                return invalid("non-finite observation value");
            }
        }
        Ok(Self {
            times,
            values,
            horizon,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &ObsValues {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn kind(&self) -> ObsKind {
        self.values.kind()
    }

    /// The sub-sequence keeping only the indices in `keep` (sorted).
    pub fn select(&self, keep: &[usize]) -> Result<ObsSeq> {
        ObsSeq::new(
            keep.iter().map(|&i| self.times[i]).collect(),
            self.values.select(keep),
            self.horizon,
        )
    }
}

/// A collection of sequences of a single kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    kind: ObsKind,
    sequences: Vec<ObsSeq>,
}

impl Dataset {
    pub fn new(sequences: Vec<ObsSeq>) -> Result<Self> {
        let kind = sequences.first().ok_or(Error::EmptyDataset)?.kind();
        if sequences.iter().any(|s| s.kind() != kind) {
            return invalid("dataset mixes observation kinds");
        }
        Ok(Self { kind, sequences })
    }

    pub fn kind(&self) -> ObsKind {
        self.kind
    }

    pub fn sequences(&self) -> &[ObsSeq] {
        &self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn num_points(&self) -> usize {
        self.sequences.iter().map(ObsSeq::len).sum()
    }

    /// One more than the largest state or symbol id (0 for real values).
    pub fn alphabet_size(&self) -> usize {
        self.sequences
            .iter()
            .filter_map(|s| match s.values() {
                ObsValues::States(v) | ObsValues::Symbols(v) => v.iter().max().map(|m| m + 1),
                ObsValues::Reals(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// The first `n` sequences.
    pub fn prefix(&self, n: usize) -> Result<Dataset> {
        Dataset::new(self.sequences[..n.min(self.len())].to_vec())
    }
}
