use crate::PROB_FLOOR;

/// `π̄_mj = (ξ n_mj + ξ₂ π̄₀j) / (ξ Σ_j n_mj + ξ₂)`, the exact minimizer of
/// `ξ Σ_j n_mj (-ln π̄_mj) + ξ₂ KL(π̄₀ ‖ π̄_m)`. `counts` is `M x M`; the
/// unused slot receives no jumps.
pub fn update_pi_rows(counts: &[Vec<f64>], pi0: &[f64], xi: f64, xi2: f64) -> Vec<Vec<f64>> {
    counts
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            let den = xi * total + xi2;
            pi0.iter()
                .enumerate()
                .map(|(j, &p0)| (xi * row.get(j).copied().unwrap_or(0.0) + xi2 * p0) / den)
                .collect()
        })
        .collect()
}

/// Normalized geometric mean of the rows, entries floored first; the exact
/// minimizer of `Σ_m KL(π̄₀ ‖ π̄_m)`.
pub fn update_pi0(rows: &[Vec<f64>]) -> Vec<f64> {
    let width = rows.first().map_or(0, Vec::len);
    let m = rows.len() as f64;
    let logs: Vec<f64> = (0..width)
        .map(|j| rows.iter().map(|r| r[j].max(PROB_FLOOR).ln()).sum::<f64>() / m)
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Block coordinate descent on the rows and the shared distribution.
pub(crate) fn update_pi(counts: &[Vec<f64>], pi0: &[f64], xi: f64, xi2: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut pi0 = pi0.to_vec();
    let mut rows = update_pi_rows(counts, &pi0, xi, xi2);
    for _ in 0..50 {
        let next = update_pi0(&rows);
        let change = next.iter().zip(&pi0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi0 = next;
        rows = update_pi_rows(counts, &pi0, xi, xi2);
        if change <= 1e-12 {
            break;
        }
    }
    (pi0, rows)
}
