//! Self-starting nonparametric local statistic.
//!
//! The statistic scores each new observation by the region of the
//! empirical distribution of the stream's own past it falls into, so it
//! needs no distributional assumptions and no parameter estimates. Two
//! region layouts run side by side (left-to-right and center-outward,
//! the latter sensitive to scale changes), each under two prior weight
//! profiles, giving four log-likelihood-ratio CUSUMs; the reported value
//! is their maximum. Because only ranks of the observations enter, the
//! in-control run-length distribution is the same for every continuous
//! distribution once the reference history holds at least `2d - 1`
//! points.

use crate::error::{Error, Result};
use crate::order_stats::RunningSample;

/// Parameters of the self-starting statistic: `d` regions per layout, a
/// reference sample of `n` points, and one prior weight vector per
/// profile.
#[derive(Debug, Clone, PartialEq)]
pub struct NpParams {
    d: usize,
    n: usize,
    /// Prior region weights, one vector of length `d` per profile.
    alpha: [Vec<f64>; 2],
    /// Cumulative prior weights, cached for the update loop.
    cum_alpha: [Vec<f64>; 2],
    sum_alpha: [f64; 2],
}

impl NpParams {
    /// Linear default priors: profile 0 weights regions increasingly
    /// (tilted toward upper/outer regions), profile 1 decreasingly.
    /// Both sum to one.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        let norm = (d * (d + 1)) as f64;
        let up: Vec<f64> = (1..=d).map(|j| 2.0 * j as f64 / norm).collect();
        let down: Vec<f64> = (1..=d).map(|j| 2.0 * (d + 1 - j) as f64 / norm).collect();
        Self::with_priors(d, n, up, down)
    }

    /// Custom prior profiles; each must have length `d` and strictly
    /// positive entries so every cumulative probability stays inside
    /// (0, 1).
    pub fn with_priors(d: usize, n: usize, alpha0: Vec<f64>, alpha1: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "region count d must be at least 2, got {d}"
            )));
        }
        if n < 2 * d - 1 {
            return Err(Error::InvalidParameter(format!(
                "reference size n = {n} is below 2d - 1 = {}; the statistic would not be \
                 distribution-free",
                2 * d - 1
            )));
        }
        for (which, a) in [(0, &alpha0), (1, &alpha1)] {
            if a.len() != d {
                return Err(Error::LengthMismatch { expected: d, got: a.len() });
            }
            if a.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "prior profile {which} must be strictly positive"
                )));
            }
        }
        let alpha = [alpha0, alpha1];
        let cum_alpha = [cumsum(&alpha[0]), cumsum(&alpha[1])];
        let sum_alpha = [cum_alpha[0][d - 1], cum_alpha[1][d - 1]];
        Ok(NpParams { d, n, alpha, cum_alpha, sum_alpha })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self, profile: usize) -> &[f64] {
        &self.alpha[profile]
    }
}

fn cumsum(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    for &x in v {
        acc += x;
        out.push(acc);
    }
    out
}

/// Region thresholds from the accumulated history.
///
/// Returns `(q1, q2)` where `q2` holds the `2d - 1` thresholds of the
/// center-outward layout (the `ceil(N * k / 2d)`-th order statistics for
/// `k = 1..2d-1`) and `q1` the `d - 1` left-to-right thresholds, which
/// are the even-indexed entries of `q2`.
pub fn np_thresholds(history: &RunningSample, d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = history.len();
    if d < 2 {
        return Err(Error::InvalidParameter(format!("need d >= 2, got {d}")));
    }
    if n < 2 * d - 1 {
        return Err(Error::InvalidParameter(format!(
            "history of {n} points cannot support {} thresholds",
            2 * d - 1
        )));
    }
    let q2: Vec<f64> = (1..2 * d)
        .map(|k| {
            // 1-based rank ceil(n * k / 2d), computed in integers.
            let rank = (n * k).div_ceil(2 * d);
            history.select(rank - 1)
        })
        .collect();
    let q1: Vec<f64> = (1..d).map(|j| q2[2 * j - 1]).collect();
    Ok((q1, q2))
}

/// Region of `x` in each layout, 1-based.
///
/// In the left-to-right layout regions are the intervals between
/// consecutive `q1` thresholds (closed on the right). In the
/// center-outward layout the `2d` intervals of `q2` are folded so that
/// region 1 is the innermost pair and region `d` the two extreme tails.
pub fn region_indices(x: f64, q1: &[f64], q2: &[f64]) -> (usize, usize) {
    let r1 = 1 + q1.iter().filter(|&&q| q < x).count();
    let d = q1.len() + 1;
    let s = 1 + q2.iter().filter(|&&q| q < x).count();
    let r2 = if s <= d { d - s + 1 } else { s - d };
    (r1, r2)
}

/// State of the self-starting statistic for one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct NpState {
    history: RunningSample,
    /// Four CUSUM values, indexed by `2 * layout + profile`.
    shat: [f64; 4],
    /// Observations counted since each CUSUM last reset.
    n_count: [u64; 4],
    /// Per-region counts since each CUSUM last reset, `d` cells each.
    n_cell: [Vec<u64>; 4],
    /// 0-based region of the previous observation per layout; absent
    /// until the first update.
    y_prev: [Option<u32>; 2],
}

impl NpState {
    /// Fresh state over an in-control reference sample of exactly
    /// `params.n()` points.
    pub fn from_reference(reference: &[f64], params: &NpParams) -> Result<Self> {
        if reference.len() != params.n {
            return Err(Error::LengthMismatch { expected: params.n, got: reference.len() });
        }
        Ok(NpState {
            history: RunningSample::from_values(reference),
            shat: [0.0; 4],
            n_count: [0; 4],
            n_cell: std::array::from_fn(|_| vec![0; params.d]),
            y_prev: [None, None],
        })
    }

    /// Rebuilds a state from raw parts; used when pool snapshots are
    /// paired with a fresh reference sample.
    pub(crate) fn from_parts(
        reference: &[f64],
        params: &NpParams,
        shat: [f64; 4],
        n_count: [u64; 4],
        n_cell: [Vec<u64>; 4],
        y_prev: [Option<u32>; 2],
    ) -> Result<Self> {
        let mut state = NpState::from_reference(reference, params)?;
        for cells in &n_cell {
            if cells.len() != params.d {
                return Err(Error::LengthMismatch { expected: params.d, got: cells.len() });
            }
        }
        state.shat = shat;
        state.n_count = n_count;
        state.n_cell = n_cell;
        state.y_prev = y_prev;
        Ok(state)
    }

    /// Number of points currently in the history (reference plus past
    /// observations).
    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn shat(&self) -> [f64; 4] {
        self.shat
    }

    pub(crate) fn counts(&self) -> (&[u64; 4], &[Vec<u64>; 4], &[Option<u32>; 2]) {
        (&self.n_count, &self.n_cell, &self.y_prev)
    }

    /// Advances the statistic by one observation.
    ///
    /// Order matters: the region counts absorb the previous observation
    /// under each CUSUM's reset schedule, the thresholds come from the
    /// history excluding `x`, the four CUSUMs are scored, and only then
    /// does `x` join the history.
    pub fn update(&mut self, x: f64, params: &NpParams) {
        let d = params.d;
        for combo in 0..4 {
            if self.shat[combo] > 0.0 {
                let layout = combo / 2;
                let region = self.y_prev[layout]
                    .expect("positive statistic implies a recorded previous region")
                    as usize;
                self.n_count[combo] += 1;
                self.n_cell[combo][region] += 1;
            } else {
                self.n_count[combo] = 0;
                self.n_cell[combo].fill(0);
            }
        }

        let regions = {
            let hist_len = self.history.len();
            // Inlined threshold walk over q2; only the comparisons with
            // x are needed, not the threshold values themselves.
            let mut below_q2 = 0usize;
            let mut below_q1 = 0usize;
            for k in 1..2 * d {
                let rank = (hist_len * k).div_ceil(2 * d);
                if self.history.select(rank - 1) < x {
                    below_q2 += 1;
                    if k % 2 == 0 {
                        below_q1 += 1;
                    }
                }
            }
            let r1 = 1 + below_q1;
            let s = 1 + below_q2;
            let r2 = if s <= d { d - s + 1 } else { s - d };
            [r1, r2]
        };

        for combo in 0..4 {
            let layout = combo / 2;
            let profile = combo % 2;
            let region = regions[layout];
            let denom = params.sum_alpha[profile] + self.n_count[combo] as f64;
            let mut cum_n = 0u64;
            let mut inc = 0.0;
            for j in 1..d {
                cum_n += self.n_cell[combo][j - 1];
                let num = params.cum_alpha[profile][j - 1] + cum_n as f64;
                let jd = j as f64 / d as f64;
                let w = (d * d) as f64 / (j * (d - j)) as f64;
                // Cumulative indicator of the one-hot region vector.
                inc += if region <= j {
                    w * (num / denom / jd).ln()
                } else {
                    w * ((denom - num) / denom / (1.0 - jd)).ln()
                };
            }
            self.shat[combo] = (self.shat[combo] + inc / d as f64).max(0.0);
        }

        self.history.insert(x);
        self.y_prev = [Some(regions[0] as u32 - 1), Some(regions[1] as u32 - 1)];
    }

    /// Current statistic: the largest of the four CUSUMs.
    pub fn value(&self) -> f64 {
        self.shat.iter().copied().fold(0.0, f64::max)
    }
}
