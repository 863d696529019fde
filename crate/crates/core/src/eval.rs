//! Hold-out splits, reconstruction error and the majority baseline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, ObsSeq, ObsValue, ObsValues};
use crate::error::{invalid, Error, Result};
use crate::mjp::{EmissionModel, Trajectory};

/// Keeps split streams apart from simulation streams under the same seed.
const SPLIT_SALT: u64 = 0x5851_f42d_4c95_7f2d;

/// Held-out observation indices for every sequence of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutSplit {
    pub fraction: f64,
    pub seed: u64,
    pub heldout: Vec<Vec<usize>>,
}

/// Held-out observations of one sequence (possibly none).
#[derive(Debug, Clone, PartialEq)]
pub struct HeldoutSeq {
    pub times: Vec<f64>,
    pub values: ObsValues,
}

impl HeldoutSeq {
    pub fn from_seq(seq: &ObsSeq) -> Self {
        Self {
            times: seq.times().to_vec(),
            values: seq.values().clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Draws `round(fraction · n)` held-out indices per sequence uniformly from
/// the interior observations; the first and last observation always stay
/// in the training set.
pub fn split(dataset: &Dataset, fraction: f64, seed: u64) -> Result<HoldoutSplit> {
    if !(0.0..1.0).contains(&fraction) {
        return invalid(format!("hold-out fraction must lie in [0, 1), got {fraction}"));
    }
    let heldout = dataset
        .sequences()
        .iter()
        .enumerate()
        .map(|(i, seq)| {
            let n = seq.len();
            let count = (fraction * n as f64).round() as usize;
            if count == 0 {
                return Ok(Vec::new());
            }
            if n < 3 || count > n - 2 {
                return invalid(format!(
                    "sequence {i} has {n} observations, too few to hold out {count}"
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SPLIT_SALT);
            rng.set_stream(i as u64);
            let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, n - 2, count)
                .into_iter()
                .map(|j| j + 1)
                .collect();
            idx.sort_unstable();
            Ok(idx)
        })
        .collect::<Result<_>>()?;
    Ok(HoldoutSplit {
        fraction,
        seed,
        heldout,
    })
}

impl HoldoutSplit {
    /// Training view (held-out points removed, horizon kept) and the
    /// held-out observations.
    pub fn apply(&self, dataset: &Dataset) -> Result<(Dataset, Vec<HeldoutSeq>)> {
        if self.heldout.len() != dataset.len() {
            return Err(Error::LengthMismatch {
                left: self.heldout.len(),
                right: dataset.len(),
            });
        }
        let mut train = Vec::with_capacity(dataset.len());
        let mut held = Vec::with_capacity(dataset.len());
        for (seq, out) in dataset.sequences().iter().zip(&self.heldout) {
            let mut is_out = vec![false; seq.len()];
            for &j in out {
                if j >= seq.len() {
                    return invalid(format!("held-out index {j} beyond sequence length"));
                }
                is_out[j] = true;
            }
            let keep: Vec<usize> = (0..seq.len()).filter(|&j| !is_out[j]).collect();
            train.push(seq.select(&keep)?);
            held.push(HeldoutSeq {
                times: out.iter().map(|&j| seq.times()[j]).collect(),
                values: match seq.values() {
                    ObsValues::States(v) => ObsValues::States(out.iter().map(|&j| v[j]).collect()),
                    ObsValues::Symbols(v) => ObsValues::Symbols(out.iter().map(|&j| v[j]).collect()),
                    ObsValues::Reals(v) => ObsValues::Reals(out.iter().map(|&j| v[j]).collect()),
                },
            });
        }
        Ok((Dataset::new(train)?, held))
    }
}

/// Half-open binning: bin `i` holds `[thresholds[i-1], thresholds[i])`, so
/// values below the first threshold fall in bin 0.
pub fn bin_values(values: &[f64], thresholds: &[f64]) -> Result<Vec<usize>> {
    if thresholds.windows(2).any(|w| w[1] <= w[0]) || thresholds.iter().any(|t| t.is_nan()) {
        return invalid("thresholds must be strictly increasing");
    }
    Ok(values
        .iter()
        .map(|&x| thresholds.partition_point(|&t| t <= x))
        .collect())
}

/// Maps inferred states and observed values onto the categories compared
/// by the error metric.
#[derive(Debug, Clone, PartialEq)]
pub enum Decoder {
    /// The state is the category.
    Direct,
    /// A state predicts its most probable symbol (ties to the smaller id).
    Multinomial(Vec<usize>),
    /// A state predicts the bin of its mean; observations are binned.
    Gaussian {
        state_bins: Vec<usize>,
        thresholds: Vec<f64>,
    },
}

impl Decoder {
    pub fn new(emission: Option<&EmissionModel>, thresholds: Option<&[f64]>) -> Result<Self> {
        match emission {
            None => Ok(Decoder::Direct),
            Some(EmissionModel::Multinomial(rows)) => Ok(Decoder::Multinomial(
                rows.iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .fold((0, f64::NEG_INFINITY), |best, (j, &p)| {
                                if p > best.1 {
                                    (j, p)
                                } else {
                                    best
                                }
                            })
                            .0
                    })
                    .collect(),
            )),
            Some(EmissionModel::Gaussian(means)) => {
                let thresholds = thresholds
                    .ok_or_else(|| Error::InvalidInput("Gaussian decoding needs bin thresholds".into()))?
                    .to_vec();
                Ok(Decoder::Gaussian {
                    state_bins: bin_values(means, &thresholds)?,
                    thresholds,
                })
            }
        }
    }

    pub fn predict(&self, state: usize) -> usize {
        match self {
            Decoder::Direct => state,
            Decoder::Multinomial(best) => best[state],
            Decoder::Gaussian { state_bins, .. } => state_bins[state],
        }
    }

    pub fn observed(&self, value: ObsValue) -> Result<usize> {
        match (self, value) {
            (Decoder::Direct, ObsValue::State(s)) => Ok(s),
            (Decoder::Multinomial(_), ObsValue::Symbol(x)) => Ok(x),
            (Decoder::Gaussian { thresholds, .. }, ObsValue::Real(x)) => {
                Ok(thresholds.partition_point(|&t| t <= x))
            }
            _ => invalid("observation kind does not match the decoder"),
        }
    }
}

/// Reconstruction error in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Mean of the per-sequence error over sequences with held-out points.
    pub error_percent: f64,
    /// Mismatches over all held-out points.
    pub pooled_percent: f64,
    /// `None` for sequences without held-out points.
    pub per_sequence: Vec<Option<f64>>,
    pub mismatches: usize,
    pub count: usize,
}

fn report<I>(per_seq: I) -> Result<ErrorReport>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut per_sequence = Vec::new();
    let (mut mismatches, mut count, mut sum, mut seqs) = (0, 0, 0.0, 0);
    for (wrong, total) in per_seq {
        if total == 0 {
            per_sequence.push(None);
            continue;
        }
        let e = 100.0 * wrong as f64 / total as f64;
        per_sequence.push(Some(e));
        mismatches += wrong;
        count += total;
        sum += e;
        seqs += 1;
    }
    if count == 0 {
        return invalid("no held-out observations to score");
    }
    Ok(ErrorReport {
        error_percent: sum / seqs as f64,
        pooled_percent: 100.0 * mismatches as f64 / count as f64,
        per_sequence,
        mismatches,
        count,
    })
}

/// Percentage of held-out observations whose category differs from the
/// prediction at the same time on the inferred path.
pub fn reconstruction_error(
    trajectories: &[Trajectory],
    heldout: &[HeldoutSeq],
    decoder: &Decoder,
) -> Result<ErrorReport> {
    if trajectories.len() != heldout.len() {
        return Err(Error::LengthMismatch {
            left: trajectories.len(),
            right: heldout.len(),
        });
    }
    let counts = trajectories
        .iter()
        .zip(heldout)
        .map(|(traj, held)| {
            let mut wrong = 0;
            for (k, &t) in held.times.iter().enumerate() {
                let predicted = decoder.predict(traj.state_at(t)?);
                if predicted != decoder.observed(held.values.get(k))? {
                    wrong += 1;
                }
            }
            Ok((wrong, held.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    report(counts)
}

/// Most frequent training category, ties to the smallest id.
pub fn majority_category(train: &Dataset, decoder: &Decoder) -> Result<usize> {
    let mut counts: Vec<usize> = Vec::new();
    for seq in train.sequences() {
        for k in 0..seq.len() {
            let c = decoder.observed(seq.values().get(k))?;
            if c >= counts.len() {
                counts.resize(c + 1, 0);
            }
            counts[c] += 1;
        }
    }
    let best = counts.iter().copied().max().ok_or(Error::EmptyDataset)?;
    Ok(counts.iter().position(|&c| c == best).expect("max exists"))
}

/// Error of predicting the majority training category everywhere.
pub fn baseline_error(train: &Dataset, heldout: &[HeldoutSeq], decoder: &Decoder) -> Result<ErrorReport> {
    let majority = majority_category(train, decoder)?;
    let counts = heldout
        .iter()
        .map(|held| {
            let mut wrong = 0;
            for k in 0..held.len() {
                if decoder.observed(held.values.get(k))? != majority {
                    wrong += 1;
                }
            }
            Ok((wrong, held.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    report(counts)
}
