//! MAP inference for Markov jump processes by small-variance asymptotics.
//!
//! The crate provides the domain types ([`Trajectory`], [`MjpParams`],
//! [`Dataset`]), the limiting objectives and their solvers for directly
//! observed and hidden-state processes ([`parametric`]) and for the
//! infinite-state model ([`nonparametric`]), a seeded simulator
//! ([`simulate`]) and hold-out evaluation ([`eval`]).
//!
//! State ids are zero-based.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod data;
pub mod dwell;
pub mod error;
pub mod eval;
pub mod mjp;
pub mod nonparametric;
pub mod parametric;
pub mod segments;
pub mod simulate;
pub mod special;
pub mod trace;

pub use data::{Dataset, ObsKind, ObsSeq, ObsValue, ObsValues};
pub use dwell::DwellSolverConfig;
pub use error::{Error, Result};
pub use mjp::{EmissionModel, Hyperparams, MjpParams, Trajectory, Violation};
pub use segments::{Run, SegmentedTrajectory};
pub use trace::{Evaluation, FitTrace, TraceRow};

/// Floor applied to probabilities before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;
