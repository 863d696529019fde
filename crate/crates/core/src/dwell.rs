//! Convex optimization of jump positions along one sequence.
//!
//! The variables are the active jump points `u_1 < ... < u_R`, each confined
//! to a box inside its inter-observation interval. Run `r` lasts
//! `u_{r+1} - u_r` (with `u_0 = 0`, `u_{R+1} = T`) and pays a convex cost of
//! its duration, so the objective is a chain of convex terms. Each iteration
//! runs one coordinate-descent sweep with exact line minimization followed by
//! a projected Newton step on the tridiagonal Hessian.

use crate::asymptotics::{censored_cost, dwell_cost};
use crate::segments::SegmentedTrajectory;

/// Convex cost of one run as a function of its duration `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RunCost {
    /// `λd - ln(λd) - 1`.
    Dwell { rate: f64 },
    /// `1[λd >= 1](λd - ln(λd) - 1)`.
    Censored { rate: f64 },
    /// `-ln d + w d`.
    LogBarrier { weight: f64 },
    Free,
}

impl RunCost {
    #[inline]
    pub(crate) fn value(self, d: f64) -> f64 {
        match self {
            RunCost::Dwell { rate } => dwell_cost(rate * d),
            RunCost::Censored { rate } => censored_cost(rate * d),
            RunCost::LogBarrier { weight } => {
                if d > 0.0 {
                    -d.ln() + weight * d
                } else {
                    f64::INFINITY
                }
            }
            RunCost::Free => 0.0,
        }
    }

    #[inline]
    fn slope(self, d: f64) -> f64 {
        match self {
            RunCost::Dwell { rate } => rate - 1.0 / d,
            RunCost::Censored { rate } => {
                if rate * d >= 1.0 {
                    rate - 1.0 / d
                } else {
                    0.0
                }
            }
            RunCost::LogBarrier { weight } => weight - 1.0 / d,
            RunCost::Free => 0.0,
        }
    }

    #[inline]
    fn curvature(self, d: f64) -> f64 {
        match self {
            RunCost::Dwell { .. } | RunCost::LogBarrier { .. } => 1.0 / (d * d),
            RunCost::Censored { rate } => {
                if rate * d >= 1.0 {
                    1.0 / (d * d)
                } else {
                    0.0
                }
            }
            RunCost::Free => 0.0,
        }
    }
}

/// Solver settings: stop when the projected-gradient ∞-norm drops to `tol`
/// or after `max_iters` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellSolverConfig {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for DwellSolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 100,
        }
    }
}

/// A chain problem: `costs.len() == u.len() + 1` runs over `[0, horizon]`.
pub(crate) struct Chain<'a> {
    pub costs: &'a [RunCost],
    pub lo: &'a [f64],
    pub hi: &'a [f64],
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ChainOutcome {
    pub iterations: usize,
    pub projected_gradient: f64,
}

impl Chain<'_> {
    #[inline]
    fn left(&self, u: &[f64], r: usize) -> f64 {
        if r == 0 {
            0.0
        } else {
            u[r - 1]
        }
    }

    #[inline]
    fn right(&self, u: &[f64], r: usize) -> f64 {
        if r + 1 == u.len() {
            self.horizon
        } else {
            u[r + 1]
        }
    }

    pub(crate) fn objective(&self, u: &[f64]) -> f64 {
        let mut prev = 0.0;
        let mut total = 0.0;
        for (r, cost) in self.costs.iter().enumerate() {
            let next = if r < u.len() { u[r] } else { self.horizon };
            total += cost.value(next - prev);
            prev = next;
        }
        total
    }

    #[inline]
    fn partial(&self, u: &[f64], r: usize, x: f64) -> f64 {
        self.costs[r].slope(x - self.left(u, r)) - self.costs[r + 1].slope(self.right(u, r) - x)
    }

    pub(crate) fn gradient(&self, u: &[f64]) -> Vec<f64> {
        (0..u.len()).map(|r| self.partial(u, r, u[r])).collect()
    }

    pub(crate) fn projected_gradient_norm(&self, u: &[f64], g: &[f64]) -> f64 {
        let mut norm: f64 = 0.0;
        for r in 0..u.len() {
            let pg = if u[r] <= self.lo[r] && g[r] > 0.0 || u[r] >= self.hi[r] && g[r] < 0.0 {
                0.0
            } else {
                g[r].abs()
            };
            norm = norm.max(pg);
        }
        norm
    }

    /// Exact minimization over coordinate `r` by safeguarded Newton on the
    /// monotone partial derivative.
    fn line_minimize(&self, u: &mut [f64], r: usize) {
        let (mut a, mut b) = (self.lo[r], self.hi[r]);
        if self.partial(u, r, a) >= 0.0 {
            u[r] = a;
            return;
        }
        if self.partial(u, r, b) <= 0.0 {
            u[r] = b;
            return;
        }
        let (left, right) = (self.left(u, r), self.right(u, r));
        let mut x = u[r].clamp(a, b);
        for _ in 0..200 {
            let g = self.partial(u, r, x);
            if g == 0.0 {
                break;
            }
            if g > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let h = self.costs[r].curvature(x - left) + self.costs[r + 1].curvature(right - x);
            let newton = if h > 0.0 { x - g / h } else { f64::NAN };
            x = if newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if b - a <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
                break;
            }
        }
        u[r] = x.clamp(self.lo[r], self.hi[r]);
    }

    /// One projected Newton step with backtracking; returns whether it was
    /// taken.
    fn newton_step(&self, u: &mut [f64], g: &[f64], f0: f64) -> bool {
        let n = u.len();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n];
        let mut free = vec![false; n];
        let mut prev = 0.0;
        let mut curv = Vec::with_capacity(n + 1);
        for (r, next) in u.iter().copied().chain([self.horizon]).enumerate() {
            curv.push(self.costs[r].curvature(next - prev));
            prev = next;
        }
        for r in 0..n {
            diag[r] = curv[r] + curv[r + 1];
            let at_lo = u[r] <= self.lo[r] && g[r] > 0.0;
            let at_hi = u[r] >= self.hi[r] && g[r] < 0.0;
            free[r] = !(at_lo || at_hi) && diag[r] > 1e-300;
        }
        for r in 0..n.saturating_sub(1) {
            off[r] = if free[r] && free[r + 1] { -curv[r + 1] } else { 0.0 };
        }
        let rhs: Vec<f64> = (0..n).map(|r| if free[r] { -g[r] } else { 0.0 }).collect();
        let d: Vec<f64> = (0..n).map(|r| if free[r] { diag[r] } else { 1.0 }).collect();
        let Some(step) = thomas(&d, &off, &rhs) else {
            return false;
        };
        let slope: f64 = step.iter().zip(g).map(|(s, gr)| s * gr).sum();
        if !(slope < 0.0) {
            return false;
        }
        let mut trial = vec![0.0; n];
        let mut alpha = 1.0;
        for _ in 0..40 {
            for r in 0..n {
                trial[r] = (u[r] + alpha * step[r]).clamp(self.lo[r], self.hi[r]);
            }
            let f1 = self.objective(&trial);
            if f1 < f0 {
                u.copy_from_slice(&trial);
                return true;
            }
            alpha *= 0.5;
        }
        false
    }

    /// Minimizes the chain objective in place, starting from a feasible `u`.
    pub(crate) fn solve(&self, u: &mut [f64], config: DwellSolverConfig) -> ChainOutcome {
        for ((x, &lo), &hi) in u.iter_mut().zip(self.lo.iter()).zip(self.hi.iter()) {
            *x = x.clamp(lo, hi);
        }
        if u.is_empty() {
            return ChainOutcome {
                iterations: 0,
                projected_gradient: 0.0,
            };
        }
        let mut iterations = 0;
        let mut g = self.gradient(u);
        let mut pg = self.projected_gradient_norm(u, &g);
        while pg > config.tol && iterations < config.max_iters {
            iterations += 1;
            let before = u.to_vec();
            let f_before = self.objective(u);
            for r in 0..u.len() {
                self.line_minimize(u, r);
            }
            let mut f = self.objective(u);
            if f > f_before {
                u.copy_from_slice(&before);
                f = f_before;
            }
            g = self.gradient(u);
            self.newton_step(u, &g, f);
            g = self.gradient(u);
            pg = self.projected_gradient_norm(u, &g);
        }
        ChainOutcome {
            iterations,
            projected_gradient: pg,
        }
    }
}

/// Chain over the runs of `seg`: run `i` pays `cost(state, is_last)` and
/// the active jumps move inside their boundary-gap boxes.
fn run_chain_parts<F: Fn(usize, bool) -> RunCost>(
    seg: &SegmentedTrajectory,
    cost: F,
) -> (Vec<RunCost>, Vec<usize>, Vec<f64>, Vec<f64>) {
    let runs = seg.runs();
    let costs = runs
        .iter()
        .enumerate()
        .map(|(i, r)| cost(r.state, i + 1 == runs.len()))
        .collect();
    let idx: Vec<usize> = runs[1..].iter().map(|r| r.first - 1).collect();
    let (lo, hi) = idx.iter().map(|&k| seg.jump_bounds(k)).unzip();
    (costs, idx, lo, hi)
}

/// Minimizes the run costs over the active jumps of `seg` in place;
/// inactive jumps stay put. Returns the projected-gradient norm reached.
pub(crate) fn optimize_runs<F: Fn(usize, bool) -> RunCost>(
    seg: &mut SegmentedTrajectory,
    cost: F,
    config: DwellSolverConfig,
) -> f64 {
    let (costs, idx, lo, hi) = run_chain_parts(seg, cost);
    if idx.is_empty() {
        return 0.0;
    }
    let mut u: Vec<f64> = idx.iter().map(|&k| seg.jumps()[k]).collect();
    let chain = Chain {
        costs: &costs,
        lo: &lo,
        hi: &hi,
        horizon: seg.horizon(),
    };
    let out = chain.solve(&mut u, config);
    let jumps = seg.jumps_mut();
    for (&k, &x) in idx.iter().zip(&u) {
        jumps[k] = x;
    }
    out.projected_gradient
}

/// Projected-gradient norm of the run costs at the current jumps.
pub(crate) fn runs_projected_gradient<F: Fn(usize, bool) -> RunCost>(seg: &SegmentedTrajectory, cost: F) -> f64 {
    let (costs, idx, lo, hi) = run_chain_parts(seg, cost);
    if idx.is_empty() {
        return 0.0;
    }
    let u: Vec<f64> = idx.iter().map(|&k| seg.jumps()[k]).collect();
    let chain = Chain {
        costs: &costs,
        lo: &lo,
        hi: &hi,
        horizon: seg.horizon(),
    };
    chain.projected_gradient_norm(&u, &chain.gradient(&u))
}

/// Solves a symmetric tridiagonal system with diagonal `d`, off-diagonal
/// `off[i]` between rows `i` and `i+1`.
fn thomas(d: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = d.len();
    let mut c = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut denom = d[0];
    if denom.abs() < 1e-300 {
        return None;
    }
    c[0] = if n > 1 { off[0] / denom } else { 0.0 };
    y[0] = rhs[0] / denom;
    for i in 1..n {
        denom = d[i] - off[i - 1] * c[i - 1];
        if !(denom.abs() > 1e-300) {
            return None;
        }
        c[i] = if i + 1 < n { off[i] / denom } else { 0.0 };
        y[i] = (rhs[i] - off[i - 1] * y[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        y[i] -= c[i] * y[i + 1];
    }
    if y.iter().all(|v| v.is_finite()) {
        Some(y)
    } else {
        None
    }
}
