//! Reference computations written independently of the library code paths:
//! quadrature, exhaustive enumeration and derivative-free minimization.
#![allow(dead_code)]

use jumpmeans::nonparametric::{NpModel, NpSuffStats};
use jumpmeans::{EmissionModel, Hyperparams, MjpParams, ObsSeq, ObsValue, SegmentedTrajectory};
use rand::Rng;

pub fn h(x: f64) -> f64 {
    x - x.ln() - 1.0
}

pub fn censored(x: f64) -> f64 {
    if x >= 1.0 {
        h(x)
    } else {
        0.0
    }
}

pub fn nl(p: f64) -> f64 {
    -p.max(1e-12).ln()
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol.max(4e-16 * (left + right).abs()) {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `∫_0^∞ f` through `t = x / (1 - x)`, summed over pieces of `[0, 1)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    let g = |x: f64| {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let t = x / (1.0 - x);
        f(t) / ((1.0 - x) * (1.0 - x))
    };
    let edges = [0.0, 1e-6, 1e-4, 1e-2, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.9999, 1.0 - 1e-9];
    edges.windows(2).map(|w| simpson(g, w[0], w[1], tol / 16.0)).sum()
}

/// Golden-section minimizer of a unimodal function on `[a, b]`.
pub fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Minimizes a convex function over the probability simplex by moving mass
/// between pairs of coordinates, each move found by golden section.
pub fn simplex_argmin<F: Fn(&[f64]) -> f64>(f: F, dim: usize) -> Vec<f64> {
    let mut p = vec![1.0 / dim as f64; dim];
    for _ in 0..2000 {
        let before = p.clone();
        for i in 0..dim {
            for j in i + 1..dim {
                let total = p[i] + p[j];
                let g = |x: f64| {
                    let mut q = p.clone();
                    q[i] = x;
                    q[j] = total - x;
                    f(&q)
                };
                let x = golden(g, 0.0, total, 1e-15);
                p[i] = x;
                p[j] = total - x;
            }
        }
        let change = p.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change < 1e-14 {
            break;
        }
    }
    p
}

/// Enumerates all labelings in lexicographic order and returns the first
/// one within a relative `1e-9` of the minimum, with the minimum.
pub fn lex_best<F: Fn(&[usize]) -> f64>(n: usize, m: usize, cost: F) -> Option<(Vec<usize>, f64)> {
    let mut all = Vec::new();
    let mut labels = vec![0; n];
    loop {
        all.push((labels.clone(), cost(&labels)));
        let mut k = n;
        loop {
            if k == 0 {
                let opt = all.iter().map(|(_, c)| *c).fold(f64::INFINITY, f64::min);
                if !opt.is_finite() {
                    return None;
                }
                let limit = opt + 1e-9 * opt.abs().max(1.0);
                return all.into_iter().find(|(_, c)| *c <= limit).map(|(l, _)| (l, opt));
            }
            k -= 1;
            labels[k] += 1;
            if labels[k] < m {
                break;
            }
            labels[k] = 0;
        }
        if labels.iter().all(|&s| s == 0) {
            unreachable!();
        }
    }
}

/// `(state, duration)` of each maximal run of equal labels.
pub fn runs_of(bounds: &[f64], labels: &[usize]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (k, &s) in labels.iter().enumerate() {
        let d = bounds[k + 1] - bounds[k];
        match out.last_mut() {
            Some((t, acc)) if *t == s => *acc += d,
            _ => out.push((s, d)),
        }
    }
    out
}

pub fn bounds_of(seg: &SegmentedTrajectory) -> Vec<f64> {
    let mut b = vec![0.0];
    b.extend_from_slice(seg.jumps());
    b.push(seg.horizon());
    b
}

/// Emission penalty of one observation, `+inf` for a violated direct one.
pub fn obs_cost(value: ObsValue, s: usize, emission: Option<&EmissionModel>, zeta: f64) -> f64 {
    match (value, emission) {
        (ObsValue::State(x), _) => {
            if x == s {
                0.0
            } else {
                f64::INFINITY
            }
        }
        (ObsValue::Symbol(x), Some(EmissionModel::Multinomial(rows))) => zeta * nl(rows[s][x]),
        (ObsValue::Real(x), Some(EmissionModel::Gaussian(means))) => zeta * (x - means[s]).powi(2),
        _ => panic!("mismatched observation"),
    }
}

/// Per-sequence parametric objective of a labeling, term by term.
pub fn parametric_cost(
    seq: &ObsSeq,
    bounds: &[f64],
    labels: &[usize],
    params: &MjpParams,
    emission: Option<&EmissionModel>,
    hyper: &Hyperparams,
) -> f64 {
    let mut total = 0.0;
    for (k, &s) in labels.iter().enumerate() {
        total += obs_cost(seq.values().get(k), s, emission, hyper.zeta);
    }
    let runs = runs_of(bounds, labels);
    for (i, &(s, d)) in runs.iter().enumerate() {
        let x = params.rates[s] * d;
        if i + 1 == runs.len() {
            total += censored(x);
        } else {
            total += h(x) + hyper.xi * nl(params.transition[s][runs[i + 1].0]);
        }
    }
    total
}

fn f_time(k: f64, s: f64, gamma: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * ((gamma + s) / k).ln()
    }
}

/// Relabeling cost of one sequence against frozen background statistics.
pub fn np_cost(seq: &ObsSeq, bounds: &[f64], labels: &[usize], model: &NpModel, background: &NpSuffStats) -> f64 {
    let hyp = &model.hyper;
    let mut total = 0.0;
    for (k, &s) in labels.iter().enumerate() {
        total += obs_cost(seq.values().get(k), s, Some(&model.emission), hyp.zeta);
    }
    let runs = runs_of(bounds, labels);
    for i in 0..runs.len() - 1 {
        let (s, d) = runs[i];
        let (k0, s0) = (background.dwell_count[s], background.dwell_sum[s]);
        total += -d.ln() + f_time(k0 + 1.0, s0 + d, hyp.gamma) - f_time(k0, s0, hyp.gamma);
        total += hyp.xi * nl(model.pi_rows[s][runs[i + 1].0]);
    }
    total
}

/// Full nonparametric objective from labeled segmentations, term by term.
pub fn np_objective(seqs: &[ObsSeq], segs: &[SegmentedTrajectory], model: &NpModel) -> f64 {
    let hyp = &model.hyper;
    let m = model.pi_rows.len();
    let mut waits: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut total = hyp.xi1 * m as f64;
    for (seq, seg) in seqs.iter().zip(segs) {
        for (k, &s) in seg.states().iter().enumerate() {
            total += obs_cost(seq.values().get(k), s, Some(&model.emission), hyp.zeta);
        }
        let runs = runs_of(&bounds_of(seg), seg.states());
        for i in 0..runs.len() - 1 {
            total += hyp.xi * nl(model.pi_rows[runs[i].0][runs[i + 1].0]);
            waits[runs[i].0].push(runs[i].1);
        }
    }
    for (s, w) in waits.iter().enumerate() {
        let mut kl = 0.0;
        for (p, q) in model.pi0.iter().zip(&model.pi_rows[s]) {
            if *p > 0.0 {
                kl += p * (p / q).ln();
            }
        }
        total += hyp.xi2 * kl;
        if !w.is_empty() {
            let k = w.len() as f64;
            let sum: f64 = w.iter().sum();
            total += -w.iter().map(|t| t.ln()).sum::<f64>() + k * ((hyp.gamma + sum) / k).ln();
        }
    }
    total
}

pub fn random_simplex<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..dim).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Sorted observation times in `[0, horizon)` starting at 0 with gaps of
/// at least 1% of the horizon.
pub fn random_times<R: Rng>(rng: &mut R, n: usize, horizon: f64) -> Vec<f64> {
    let mut gaps: Vec<f64> = (0..n).map(|_| 0.01 + rng.random::<f64>()).collect();
    let total: f64 = gaps.iter().sum::<f64>() * 1.05;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(n);
    for g in gaps.iter_mut() {
        out.push(t);
        t += *g / total * horizon;
    }
    out
}

/// A segmentation with random jump positions inside their intervals.
pub fn random_segmentation<R: Rng>(rng: &mut R, times: &[f64], horizon: f64, m: usize) -> SegmentedTrajectory {
    let jumps = times
        .windows(2)
        .map(|w| w[0] + (w[1] - w[0]) * (0.05 + 0.9 * rng.random::<f64>()))
        .collect();
    let states = (0..times.len()).map(|_| rng.random_range(0..m)).collect();
    SegmentedTrajectory::new(horizon, times.to_vec(), jumps, states).unwrap()
}

pub fn random_params<R: Rng>(rng: &mut R, m: usize) -> MjpParams {
    let transition = (0..m)
        .map(|i| {
            if m == 1 {
                return vec![0.0];
            }
            let w = random_simplex(rng, m - 1);
            let mut row = Vec::with_capacity(m);
            let mut it = w.into_iter();
            for j in 0..m {
                row.push(if j == i { 0.0 } else { it.next().unwrap() });
            }
            row
        })
        .collect();
    MjpParams {
        initial: vec![1.0 / m as f64; m],
        transition,
        rates: (0..m).map(|_| 0.1 + 3.0 * rng.random::<f64>()).collect(),
    }
}
