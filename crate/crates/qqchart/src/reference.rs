//! Reference implementations used to cross-check the incremental
//! engines.
//!
//! Each function here recomputes a statistic from first principles on
//! every call, trading speed for independence: different traversal
//! order, different intermediate quantities, no shared state with the
//! production code. Tests compare the two within tight tolerances.

use crate::local::CusumParams;
use crate::nonparametric::NpParams;

/// One-sided CUSUM by direct maximization: the statistic after the last
/// observation equals the best scoring suffix of the data (or zero),
/// with no folding recursion involved.
pub fn cusum_direct(observations: &[f64], params: &CusumParams) -> f64 {
    let mu = params.mu();
    let score = |x: f64| mu * (x - mu / 2.0);
    let mut best = 0.0f64;
    for start in 0..observations.len() {
        let suffix: f64 = observations[start..].iter().map(|&x| score(x)).sum();
        best = best.max(suffix);
    }
    best
}

/// Self-starting nonparametric statistic recomputed from scratch at
/// every tick.
///
/// Differences from the incremental engine: the history lives in a
/// plain vector re-sorted per tick, regions come from a linear interval
/// walk, the reset-dependent counts are rebuilt each tick by scanning
/// the recorded past, and the scoring works on materialized one-hot and
/// cumulative vectors with per-region probabilities summed explicitly.
/// Returns the four CUSUM values after each observation.
pub fn np_direct_trajectory(
    reference: &[f64],
    observations: &[f64],
    params: &NpParams,
) -> Vec<[f64; 4]> {
    let d = params.d();
    let mut history: Vec<f64> = reference.to_vec();
    // shat_log[t] holds the four values after t observations; the
    // leading zero row stands for the cold start.
    let mut shat_log: Vec<[f64; 4]> = vec![[0.0; 4]];
    // Region (0-based) of observation t per layout.
    let mut region_log: Vec<[usize; 2]> = Vec::new();

    for (step, &x) in observations.iter().enumerate() {
        let mut sorted = history.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let q2: Vec<f64> = (1..2 * d)
            .map(|k| {
                let rank = ((n * k) as f64 / (2 * d) as f64).ceil() as usize;
                sorted[rank - 1]
            })
            .collect();
        let q1: Vec<f64> = (1..d).map(|j| q2[2 * j - 1]).collect();

        // Interval walk: first threshold at or above x closes the
        // region that contains it.
        let mut r1 = d;
        for (j, &q) in q1.iter().enumerate() {
            if x <= q {
                r1 = j + 1;
                break;
            }
        }
        let mut s = 2 * d;
        for (k, &q) in q2.iter().enumerate() {
            if x <= q {
                s = k + 1;
                break;
            }
        }
        let r2 = if s <= d { d - s + 1 } else { s - d };

        let mut next = [0.0; 4];
        for combo in 0..4 {
            let layout = combo / 2;
            let profile = combo % 2;
            // Rebuild the reset-dependent counts: find the last tick at
            // which this CUSUM sat at zero and accumulate one-hot
            // regions since then.
            let mut reset_at = 0;
            for t in (0..=step).rev() {
                if shat_log[t][combo] == 0.0 {
                    reset_at = t;
                    break;
                }
            }
            let count = (step - reset_at) as f64;
            let mut cells = vec![0.0f64; d];
            for t in reset_at..step {
                cells[region_log[t][layout]] += 1.0;
            }

            let total: f64 = params.alpha(profile).iter().sum::<f64>() + count;
            let p_hat: Vec<f64> = (0..d)
                .map(|l| (params.alpha(profile)[l] + cells[l]) / total)
                .collect();

            let region = [r1, r2][layout];
            let one_hot: Vec<f64> = (1..=d).map(|r| if r == region { 1.0 } else { 0.0 }).collect();

            let mut inc = 0.0;
            let mut z = 0.0;
            let mut p_cum = 0.0;
            for j in 1..d {
                z += one_hot[j - 1];
                p_cum += p_hat[j - 1];
                let jd = j as f64 / d as f64;
                let w = (d * d) as f64 / (j * (d - j)) as f64;
                inc += w
                    * (z * (p_cum / jd).ln() + (1.0 - z) * ((1.0 - p_cum) / (1.0 - jd)).ln());
            }
            next[combo] = (shat_log[step][combo] + inc / d as f64).max(0.0);
        }

        shat_log.push(next);
        region_log.push([r1 - 1, r2 - 1]);
        history.push(x);
    }

    shat_log.remove(0);
    shat_log
}
