//! Trajectories discretized with one candidate jump between every pair of
//! consecutive observations.

use crate::error::{invalid, Result};
use crate::mjp::Trajectory;

/// Minimum distance between a jump point and an observation, as a fraction
/// of the horizon.
pub const BOUNDARY_GAP: f64 = 1e-9;

/// Segment `k` covers `[b_k, b_{k+1})` with `b_0 = 0`, `b_k = jumps[k-1]`
/// and `b_n = horizon`; it contains observation `k`. Neighbouring segments
/// may share a state, in which case the jump between them is inactive.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedTrajectory {
    horizon: f64,
    obs_times: Vec<f64>,
    jumps: Vec<f64>,
    states: Vec<usize>,
}

/// A maximal block of consecutive segments sharing a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub state: usize,
    pub first: usize,
    pub last: usize,
    pub start: f64,
    pub end: f64,
}

impl Run {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

impl SegmentedTrajectory {
    /// Jumps at the midpoints between observations.
    pub fn initial(obs_times: &[f64], horizon: f64, states: Vec<usize>) -> Result<Self> {
        let jumps = obs_times.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self::new(horizon, obs_times.to_vec(), jumps, states)
    }

    pub fn new(horizon: f64, obs_times: Vec<f64>, jumps: Vec<f64>, states: Vec<usize>) -> Result<Self> {
        let n = obs_times.len();
        if n == 0 || states.len() != n || jumps.len() + 1 != n {
            return invalid(format!(
                "segmentation needs n observations, n states and n-1 jumps (got {n}, {}, {})",
                states.len(),
                jumps.len()
            ));
        }
        for (k, &u) in jumps.iter().enumerate() {
            if !(u > obs_times[k] && u < obs_times[k + 1]) {
                return invalid(format!("jump {k} at {u} outside its observation interval"));
            }
        }
        Ok(Self {
            horizon,
            obs_times,
            jumps,
            states,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn obs_times(&self) -> &[f64] {
        &self.obs_times
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn set_states(&mut self, states: Vec<usize>) {
        assert_eq!(states.len(), self.states.len());
        self.states = states;
    }

    pub(crate) fn jumps_mut(&mut self) -> &mut [f64] {
        &mut self.jumps
    }

    /// Start of segment `k` (`k = n` gives the horizon).
    pub fn boundary(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else if k > self.jumps.len() {
            self.horizon
        } else {
            self.jumps[k - 1]
        }
    }

    pub fn segment_durations(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.boundary(k + 1) - self.boundary(k))
            .collect()
    }

    /// Allowed range `[lo, hi]` for jump `k`, kept away from both
    /// observations.
    pub fn jump_bounds(&self, k: usize) -> (f64, f64) {
        let delta = BOUNDARY_GAP * self.horizon;
        let (a, b) = (self.obs_times[k], self.obs_times[k + 1]);
        let (lo, hi) = (a + delta, b - delta);
        if lo <= hi {
            (lo, hi)
        } else {
            let mid = 0.5 * (a + b);
            (mid, mid)
        }
    }

    pub fn runs(&self) -> Vec<Run> {
        let mut runs = Vec::new();
        let mut first = 0;
        for k in 1..=self.len() {
            if k == self.len() || self.states[k] != self.states[first] {
                runs.push(Run {
                    state: self.states[first],
                    first,
                    last: k - 1,
                    start: self.boundary(first),
                    end: self.boundary(k),
                });
                first = k;
            }
        }
        runs
    }

    /// The path with inactive jumps removed.
    pub fn to_trajectory(&self) -> Result<Trajectory> {
        let runs = self.runs();
        let states = runs.iter().map(|r| r.state).collect();
        let dwell = runs[..runs.len() - 1].iter().map(Run::duration).collect();
        Trajectory::new(states, dwell, self.horizon)
    }
}
