//! Markov jump process domain types.
//!
//! State ids are zero-based throughout the library; file formats and the CLI
//! translate to one-based ids at the boundary.

use std::fmt;

use crate::error::{invalid, Error, Result};

const SIMPLEX_TOL: f64 = 1e-9;

/// A piecewise-constant path over `[0, horizon]`.
///
/// `states[k]` is occupied for `dwell_times[k]` (for `k < K`); the final state
/// `states[K]` is occupied from the last jump until the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<usize>,
    dwell_times: Vec<f64>,
    horizon: f64,
}

impl Trajectory {
    pub fn new(states: Vec<usize>, dwell_times: Vec<f64>, horizon: f64) -> Result<Self> {
        if states.is_empty() {
            return invalid("trajectory needs at least one state");
        }
        if dwell_times.len() + 1 != states.len() {
            return Err(Error::LengthMismatch {
                left: states.len(),
                right: dwell_times.len() + 1,
            });
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        if let Some(k) = dwell_times.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
            return invalid(format!("dwell time {k} is not positive"));
        }
        let total: f64 = dwell_times.iter().sum();
        if total > horizon * (1.0 + 1e-12) {
            return invalid(format!("dwell times sum to {total}, beyond horizon {horizon}"));
        }
        if let Some(k) = states.windows(2).position(|w| w[0] == w[1]) {
            return invalid(format!("self-transition between states {k} and {}", k + 1));
        }
        Ok(Self {
            states,
            dwell_times,
            horizon,
        })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn dwell_times(&self) -> &[f64] {
        &self.dwell_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn num_jumps(&self) -> usize {
        self.dwell_times.len()
    }

    /// Time spent in the final (censored) state: `T - sum(dwell_times)`.
    pub fn final_time(&self) -> f64 {
        (self.horizon - self.dwell_times.iter().sum::<f64>()).max(0.0)
    }

    /// Absolute jump times `u_1 < ... < u_K`.
    pub fn jump_times(&self) -> Vec<f64> {
        self.dwell_times
            .iter()
            .scan(0.0, |acc, &t| {
                *acc += t;
                Some(*acc)
            })
            .collect()
    }

    /// State occupied at time `t`. Paths are right-continuous: a jump at `u`
    /// assigns `u` to the new state.
    pub fn state_at(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let mut elapsed = 0.0;
        for (k, &dwell) in self.dwell_times.iter().enumerate() {
            elapsed += dwell;
            if t < elapsed {
                return Ok(self.states[k]);
            }
        }
        Ok(*self.states.last().expect("non-empty"))
    }

    /// Total time spent in each of `num_states` states.
    pub fn occupancy(&self, num_states: usize) -> Vec<f64> {
        let mut occ = vec![0.0; num_states];
        for (k, &dwell) in self.dwell_times.iter().enumerate() {
            occ[self.states[k]] += dwell;
        }
        occ[*self.states.last().expect("non-empty")] += self.final_time();
        occ
    }

    /// Log-probability of the path under the MJP (log-space product of
    /// initial, dwell-density, jump and survival factors). Zero factors map
    /// to `-inf`.
    pub fn log_prob(&self, params: &MjpParams) -> Result<f64> {
        let m = params.num_states();
        if let Some(&s) = self.states.iter().find(|&&s| s >= m) {
            return invalid(format!("state {s} outside 0..{m}"));
        }
        let mut lp = ln0(params.initial[self.states[0]]);
        for (k, &dwell) in self.dwell_times.iter().enumerate() {
            let (from, to) = (self.states[k], self.states[k + 1]);
            let rate = params.rates[from];
            lp += ln0(rate) - rate * dwell + ln0(params.transition[from][to]);
        }
        let last = *self.states.last().expect("non-empty");
        lp -= params.rates[last] * self.final_time();
        Ok(lp)
    }
}

fn ln0(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Finite-state MJP parameters: initial distribution, jump matrix with zero
/// diagonal, and exit rates.
#[derive(Debug, Clone, PartialEq)]
pub struct MjpParams {
    pub initial: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub rates: Vec<f64>,
}

/// One violated invariant of [`MjpParams`] or [`EmissionModel`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ShapeMismatch(String),
    InitialNotNormalized { sum: f64 },
    NegativeEntry { row: usize, col: usize },
    RowNotNormalized { row: usize, sum: f64 },
    NonzeroDiagonal { row: usize },
    NonpositiveRate { state: usize },
}

impl fmt::Display for Violation {
    // Messages use one-based indices to match the file formats.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Violation::InitialNotNormalized { sum } => {
                write!(f, "initial distribution sums to {sum}")
            }
            Violation::NegativeEntry { row, col } => {
                write!(f, "negative entry at ({}, {})", row + 1, col + 1)
            }
            Violation::RowNotNormalized { row, sum } => {
                write!(f, "row {} sums to {sum}", row + 1)
            }
            Violation::NonzeroDiagonal { row } => write!(f, "nonzero diagonal at row {}", row + 1),
            Violation::NonpositiveRate { state } => {
                write!(f, "nonpositive rate at state {}", state + 1)
            }
        }
    }
}

impl MjpParams {
    /// Uniform initial distribution, uniform off-diagonal jumps, unit rates.
    pub fn uniform(num_states: usize) -> Self {
        let off = if num_states > 1 {
            1.0 / (num_states - 1) as f64
        } else {
            0.0
        };
        let transition = (0..num_states)
            .map(|i| {
                (0..num_states)
                    .map(|j| if i == j { 0.0 } else { off })
                    .collect()
            })
            .collect();
        Self {
            initial: vec![1.0 / num_states as f64; num_states],
            transition,
            rates: vec![1.0; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.rates.len()
    }

    /// Every violated invariant, in a fixed order. Empty means valid.
    ///
    /// A single-state process has no outgoing jumps, so its one-entry jump
    /// row is allowed to be all zero.
    pub fn validate(&self) -> Vec<Violation> {
        let m = self.rates.len();
        let mut out = Vec::new();
        if m == 0 {
            out.push(Violation::ShapeMismatch("no states".into()));
            return out;
        }
        if self.initial.len() != m || self.transition.len() != m {
            out.push(Violation::ShapeMismatch(format!(
                "{} rates, {} initial entries, {} jump rows",
                m,
                self.initial.len(),
                self.transition.len()
            )));
            return out;
        }
        let init_sum: f64 = self.initial.iter().sum();
        if (init_sum - 1.0).abs() > SIMPLEX_TOL {
            out.push(Violation::InitialNotNormalized { sum: init_sum });
        }
        if let Some(i) = self.initial.iter().position(|&p| p < 0.0 || p.is_nan()) {
            out.push(Violation::NegativeEntry { row: 0, col: i });
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.len() != m {
                out.push(Violation::ShapeMismatch(format!(
                    "jump row {} has {} entries",
                    i + 1,
                    row.len()
                )));
                continue;
            }
            for (j, &p) in row.iter().enumerate() {
                if p < 0.0 || p.is_nan() {
                    out.push(Violation::NegativeEntry { row: i, col: j });
                }
            }
            if row[i] != 0.0 {
                out.push(Violation::NonzeroDiagonal { row: i });
            }
            let sum: f64 = row.iter().sum();
            if m > 1 && (sum - 1.0).abs() > SIMPLEX_TOL {
                out.push(Violation::RowNotNormalized { row: i, sum });
            }
        }
        for (s, &rate) in self.rates.iter().enumerate() {
            if !(rate > 0.0 && rate.is_finite()) {
                out.push(Violation::NonpositiveRate { state: s });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// Observation model for hidden-state processes.
#[derive(Debug, Clone, PartialEq)]
pub enum EmissionModel {
    /// Row-stochastic `M x N` matrix of symbol probabilities.
    Multinomial(Vec<Vec<f64>>),
    /// One mean per state; observations are scored by squared error.
    Gaussian(Vec<f64>),
}

impl EmissionModel {
    pub fn num_states(&self) -> usize {
        match self {
            EmissionModel::Multinomial(rows) => rows.len(),
            EmissionModel::Gaussian(means) => means.len(),
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if let EmissionModel::Multinomial(rows) = self {
            let width = rows.first().map_or(0, Vec::len);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != width || width == 0 {
                    out.push(Violation::ShapeMismatch(format!(
                        "emission row {} has {} entries",
                        i + 1,
                        row.len()
                    )));
                    continue;
                }
                for (j, &p) in row.iter().enumerate() {
                    if p < 0.0 || p.is_nan() {
                        out.push(Violation::NegativeEntry { row: i, col: j });
                    }
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > SIMPLEX_TOL {
                    out.push(Violation::RowNotNormalized { row: i, sum });
                }
            }
        }
        out
    }
}

/// Penalty weights of the small-variance objectives.
///
/// `xi` weighs transition terms, `xi_lambda`/`mu_lambda` form the rate prior
/// (a priori `xi_lambda` dwells of length `mu_lambda` per state), `zeta`
/// weighs emissions, `xi1` is the per-state cost, `xi2` the hierarchy
/// coupling and `gamma` the nonparametric time offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub xi: f64,
    pub xi_lambda: f64,
    pub mu_lambda: f64,
    pub zeta: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub gamma: f64,
}

impl Hyperparams {
    /// Settings used for the parametric synthetic experiments.
    pub fn parametric_default() -> Self {
        Self {
            xi: 1.0,
            xi_lambda: 1.0,
            mu_lambda: 0.5,
            zeta: 1.0,
            xi1: 5.0,
            xi2: 0.005,
            gamma: 5.0,
        }
    }

    /// Settings used for the nonparametric experiments.
    pub fn nonparametric_default() -> Self {
        Self {
            xi: 0.005,
            xi_lambda: 1.0,
            mu_lambda: 0.5,
            zeta: 0.005,
            xi1: 5.0,
            xi2: 0.005,
            gamma: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("xi", self.xi),
            ("xi_lambda", self.xi_lambda),
            ("mu_lambda", self.mu_lambda),
            ("zeta", self.zeta),
            ("xi1", self.xi1),
            ("xi2", self.xi2),
            ("gamma", self.gamma),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("hyperparameter {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self::parametric_default()
    }
}
