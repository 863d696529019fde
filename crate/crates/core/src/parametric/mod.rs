//! Finite-state objectives for directly observed and hidden-state processes
//! and the alternating solver that minimizes them.

mod fit;
mod mle;
mod objective;
mod updates;
mod viterbi;

pub use fit::{fit, FitConfig, ModelKind, ParametricFit};
pub use mle::mle_degenerate_trajectory;
pub use objective::{
    dynamics_cost, emission_cost, objective_domjp, objective_hmjp, rate_prior_cost,
};
pub use updates::{
    update_emissions, update_rates, update_transition, update_transition_and_rates, EmissionStats,
    TransitionStats,
};
pub use viterbi::{optimize_dwell_times, viterbi_segments};

pub(crate) use objective::{neg_ln, observation_costs};
pub(crate) use viterbi::{bounds_of, merged_run_viterbi};
