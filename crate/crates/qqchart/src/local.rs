//! Per-stream local monitoring statistics.
//!
//! Each stream carries one of three statistics: a one-sided CUSUM for a
//! known shift, a two-sided CUSUM that estimates the shift adaptively,
//! or a nonparametric self-starting statistic (see
//! [`crate::nonparametric`]). All three share the dispatch pair
//! [`LocalFamily`] (parameters) and [`LocalState`] (per-stream state).

use crate::error::{Error, Result};
use crate::nonparametric::{NpParams, NpState};
use rand::Rng;

// --- one-sided CUSUM for a known standardized shift ---

/// Parameters of the one-sided CUSUM tuned to a known shift `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumParams {
    mu: f64,
}

impl CusumParams {
    /// `mu` is the anticipated post-change mean; zero is rejected
    /// because the recursion degenerates to a constant.
    pub fn new(mu: f64) -> Result<Self> {
        if mu == 0.0 || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cusum target shift must be finite and nonzero, got {mu}"
            )));
        }
        Ok(CusumParams { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// Running value of the one-sided CUSUM; stays nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CusumState {
    pub s_plus: f64,
}

impl CusumState {
    pub fn update(&mut self, x: f64, params: &CusumParams) {
        let mu = params.mu;
        self.s_plus = (self.s_plus + mu * (x - mu / 2.0)).max(0.0);
    }

    pub fn value(&self) -> f64 {
        self.s_plus
    }
}

// --- two-sided CUSUM with adaptively estimated shift ---

/// Parameters of the adaptive two-sided CUSUM.
///
/// The shift estimate is a smoothed sample mean shrunk toward a prior:
/// `(s0 + sum) / (t0 + count)`, floored at `rho` in absolute value so
/// the recursion never tracks a vanishing shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveParams {
    rho: f64,
    s0: f64,
    t0: f64,
}

impl AdaptiveParams {
    /// `t0` must be strictly positive: the running count in the
    /// estimator resets to zero together with the statistic, so a zero
    /// prior weight would divide by zero right after every reset.
    pub fn new(rho: f64, s0: f64, t0: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "minimum tracked shift rho must be > 0, got {rho}"
            )));
        }
        if !(s0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "prior shift weight s0 must be >= 0, got {s0}"
            )));
        }
        if !(t0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "prior count t0 must be > 0, got {t0}"
            )));
        }
        Ok(AdaptiveParams { rho, s0, t0 })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        AdaptiveParams { rho: 0.25, s0: 1.0, t0: 4.0 }
    }
}

/// State of the adaptive two-sided CUSUM. Index 0 tracks upward shifts,
/// index 1 downward.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdaptiveCusumState {
    /// One-sided statistic values; each stays nonnegative.
    pub c: [f64; 2],
    /// Running sums of observations since the matching side last reset.
    pub s: [f64; 2],
    /// Running observation counts since the matching side last reset.
    pub t: [f64; 2],
    /// Previous observation, consumed by the next update's running
    /// sums. Zero at a cold start, which contributes nothing because
    /// the counts are zero too.
    pub x_prev: f64,
}

impl AdaptiveCusumState {
    /// Current shift estimates `(up, down)` given the running sums.
    pub fn mu_hats(&self, p: &AdaptiveParams) -> (f64, f64) {
        let up = ((p.s0 + self.s[0]) / (p.t0 + self.t[0])).max(p.rho);
        let down = ((-p.s0 + self.s[1]) / (p.t0 + self.t[1])).min(-p.rho);
        (up, down)
    }

    /// Advances the two sides by one observation.
    ///
    /// The running sums absorb the previous observation first (they
    /// reset whenever their side's statistic sits at zero), then the
    /// refreshed shift estimates score the new observation.
    pub fn update(&mut self, x: f64, p: &AdaptiveParams) {
        for side in 0..2 {
            if self.c[side] == 0.0 {
                self.s[side] = 0.0;
                self.t[side] = 0.0;
            } else {
                self.s[side] += self.x_prev;
                self.t[side] += 1.0;
            }
        }
        let (mu_up, mu_down) = self.mu_hats(p);
        self.c[0] = (self.c[0] + mu_up * x - mu_up * mu_up / 2.0).max(0.0);
        self.c[1] = (self.c[1] + mu_down * x - mu_down * mu_down / 2.0).max(0.0);
        self.x_prev = x;
    }

    /// Two-sided statistic: the larger of the two sides.
    pub fn value(&self) -> f64 {
        self.c[0].max(self.c[1])
    }
}

// --- dispatch over the three families ---

/// Which local statistic a scheme runs on every stream, with its
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalFamily {
    Cusum(CusumParams),
    Adaptive(AdaptiveParams),
    Nonparametric(NpParams),
}

impl LocalFamily {
    /// Stable name used in reports and pool files.
    pub fn kind_name(&self) -> &'static str {
        match self {
            LocalFamily::Cusum(_) => "cusum",
            LocalFamily::Adaptive(_) => "adaptive",
            LocalFamily::Nonparametric(_) => "nonparametric",
        }
    }

    /// Reference sample size a cold start consumes before monitoring;
    /// zero for the parametric families.
    pub fn reference_len(&self) -> usize {
        match self {
            LocalFamily::Nonparametric(p) => p.n(),
            _ => 0,
        }
    }

    /// Fresh state for a stream with no history. `ic_draw` supplies
    /// in-control observations for the reference sample of the
    /// self-starting family and is not consulted otherwise.
    pub fn cold_state<R, F>(&self, rng: &mut R, mut ic_draw: F) -> LocalState
    where
        R: Rng + ?Sized,
        F: FnMut(&mut R) -> f64,
    {
        match self {
            LocalFamily::Cusum(_) => LocalState::Cusum(CusumState::default()),
            LocalFamily::Adaptive(_) => LocalState::Adaptive(AdaptiveCusumState::default()),
            LocalFamily::Nonparametric(p) => {
                let reference: Vec<f64> = (0..p.n()).map(|_| ic_draw(rng)).collect();
                LocalState::Nonparametric(
                    NpState::from_reference(&reference, p)
                        .expect("params guarantee a sufficient reference"),
                )
            }
        }
    }

    /// Advances `state` by one observation.
    ///
    /// # Panics
    /// Panics if `state` belongs to a different family.
    pub fn step(&self, state: &mut LocalState, x: f64) {
        match (self, state) {
            (LocalFamily::Cusum(p), LocalState::Cusum(s)) => s.update(x, p),
            (LocalFamily::Adaptive(p), LocalState::Adaptive(s)) => s.update(x, p),
            (LocalFamily::Nonparametric(p), LocalState::Nonparametric(s)) => s.update(x, p),
            _ => panic!("local state does not match family"),
        }
    }

    /// Current statistic value of `state`.
    pub fn value(&self, state: &LocalState) -> f64 {
        match state {
            LocalState::Cusum(s) => s.value(),
            LocalState::Adaptive(s) => s.value(),
            LocalState::Nonparametric(s) => s.value(),
        }
    }
}

/// Per-stream state for whichever family a scheme runs.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalState {
    Cusum(CusumState),
    Adaptive(AdaptiveCusumState),
    Nonparametric(NpState),
}
