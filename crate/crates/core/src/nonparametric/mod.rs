//! The infinite-state objective: hierarchical transition rows, a penalty on
//! the number of states and a per-state time penalty in place of rates.

mod fit;
mod model;
mod split;
mod updates;
mod viterbi;

pub use fit::{fit_imjp, NpFit, NpFitConfig};
pub use model::{time_penalty, NpModel, NpSuffStats};
pub use split::{propose_split, SplitCandidate};
pub use updates::{update_pi0, update_pi_rows};
pub use viterbi::{optimize_np_dwell_times, viterbi_imjp};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::segments::SegmentedTrajectory;

/// Objective of labeled segmentations under `model`. Equal neighbouring
/// segments form one run, and every run but the last of a sequence ends in
/// a jump.
pub fn objective_imjp(data: &Dataset, segs: &[SegmentedTrajectory], model: &NpModel) -> Result<f64> {
    if let Some(v) = model.validate().first() {
        return invalid(format!("invalid model: {v}"));
    }
    Ok(NpSuffStats::from_segmentations(data, segs, model.num_states(), &model.emission)?.objective(model))
}
