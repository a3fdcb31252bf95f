//! Data-stream models: in-control distributions, per-stream change
//! settings, and panel scenarios for the simulation harness.

use crate::error::{Error, Result};
use crate::rng::{substream, Lane};
use rand::Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal, StudentT};

/// In-control marginal distribution of a single stream.
///
/// With `standardized` set, draws are shifted and scaled to mean 0 and
/// standard deviation 1, so heavy-tailed and skewed streams stay on the
/// same scale as normal ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    /// Standard normal.
    Normal,
    /// Student t with `df` degrees of freedom; needs `df > 2` so the
    /// variance exists.
    StudentT { df: f64, standardized: bool },
    /// Log-normal with the given parameters on the log scale.
    LogNormal { log_mean: f64, log_sd: f64, standardized: bool },
}

impl DistributionSpec {
    /// Mean and standard deviation of the raw (unstandardized) draw.
    pub fn standardization_constants(&self) -> Result<(f64, f64)> {
        match *self {
            DistributionSpec::Normal => Ok((0.0, 1.0)),
            DistributionSpec::StudentT { df, .. } => {
                if !(df > 2.0) {
                    return Err(Error::InvalidParameter(format!(
                        "student t needs df > 2 for a finite variance, got {df}"
                    )));
                }
                Ok((0.0, (df / (df - 2.0)).sqrt()))
            }
            DistributionSpec::LogNormal { log_mean, log_sd, .. } => {
                if !(log_sd > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "log-normal needs log_sd > 0, got {log_sd}"
                    )));
                }
                let mean = (log_mean + log_sd * log_sd / 2.0).exp();
                let sd = ((log_sd * log_sd).exp() - 1.0).sqrt() * mean;
                Ok((mean, sd))
            }
        }
    }

    /// Prepared sampler for repeated draws.
    pub fn sampler(&self) -> Result<IcSampler> {
        let dist = match *self {
            DistributionSpec::Normal => IcDist::Normal,
            DistributionSpec::StudentT { df, .. } => {
                // Constants are validated first so the distribution
                // constructor cannot be reached with df <= 2.
                self.standardization_constants()?;
                IcDist::StudentT(StudentT::new(df).map_err(|e| {
                    Error::InvalidParameter(format!("student t df {df}: {e}"))
                })?)
            }
            DistributionSpec::LogNormal { log_mean, log_sd, .. } => {
                self.standardization_constants()?;
                IcDist::LogNormal(LogNormal::new(log_mean, log_sd).map_err(|e| {
                    Error::InvalidParameter(format!("log-normal ({log_mean}, {log_sd}): {e}"))
                })?)
            }
        };
        let standardized = match *self {
            DistributionSpec::Normal => false,
            DistributionSpec::StudentT { standardized, .. } => standardized,
            DistributionSpec::LogNormal { standardized, .. } => standardized,
        };
        let (mean, sd) = if standardized {
            self.standardization_constants()?
        } else {
            (0.0, 1.0)
        };
        Ok(IcSampler { dist, mean, sd })
    }
}

#[derive(Debug, Clone, Copy)]
enum IcDist {
    Normal,
    StudentT(StudentT<f64>),
    LogNormal(LogNormal<f64>),
}

/// Ready-to-draw in-control sampler; applies the standardization baked
/// in at construction.
#[derive(Debug, Clone, Copy)]
pub struct IcSampler {
    dist: IcDist,
    mean: f64,
    sd: f64,
}

impl IcSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let raw = match self.dist {
            IcDist::Normal => rng.sample::<f64, _>(StandardNormal),
            IcDist::StudentT(d) => d.sample(rng),
            IcDist::LogNormal(d) => d.sample(rng),
        };
        (raw - self.mean) / self.sd
    }
}

/// One stream of the monitored panel: an in-control distribution plus an
/// optional location/scale change after `change_point`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSpec {
    pub ic: DistributionSpec,
    /// Additive shift applied after the change point.
    pub shift: f64,
    /// Multiplicative scale applied after the change point; must be > 0.
    pub scale: f64,
    /// Last in-control tick; observations at `t > change_point` are
    /// out of control. 0 means the change is active from the first tick.
    pub change_point: u64,
}

impl StreamSpec {
    /// Always-in-control stream.
    pub fn in_control(ic: DistributionSpec) -> Self {
        StreamSpec { ic, shift: 0.0, scale: 1.0, change_point: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        self.ic.standardization_constants()?;
        if !(self.scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "stream scale must be > 0, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn runner(&self) -> Result<StreamRunner> {
        self.validate()?;
        Ok(StreamRunner {
            sampler: self.ic.sampler()?,
            shift: self.shift,
            scale: self.scale,
            change_point: self.change_point,
        })
    }
}

/// Prepared per-stream sampler for a monitoring run.
#[derive(Debug, Clone, Copy)]
pub struct StreamRunner {
    sampler: IcSampler,
    shift: f64,
    scale: f64,
    change_point: u64,
}

impl StreamRunner {
    /// Observation at tick `t` (1-based). The change applies only for
    /// `t > change_point`; the same underlying draw is consumed either
    /// way, so in-control and changed variants of one stream stay on a
    /// shared sample path.
    pub fn observe<R: Rng + ?Sized>(&self, t: u64, rng: &mut R) -> f64 {
        let z = self.sampler.sample(rng);
        if t > self.change_point {
            self.scale * z + self.shift
        } else {
            z
        }
    }

    /// In-control draw, used for reference samples that precede
    /// monitoring.
    pub fn sample_ic<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler.sample(rng)
    }
}

/// How the shifted streams of a scenario are perturbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OcKind {
    /// Every affected stream gains `delta`.
    MeanShift { delta: f64 },
    /// Every affected stream gains `delta` with a sign drawn uniformly
    /// per stream.
    RandomSignShift { delta: f64 },
    /// First half (rounded up) of the affected streams gains `delta`;
    /// the rest are scaled by `gamma`.
    MixedLocationScale { delta: f64, gamma: f64 },
}

/// In-control composition of the panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcMixture {
    /// Every stream is standard normal.
    AllNormal,
    /// A seeded random split: half the streams normal, a fifth Student
    /// t(2.5), the rest log-normal(1, 0.5), the latter two standardized.
    Mixed,
}

/// Panel-level scenario: `m` streams of which the last `m1` change at
/// `change_point`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub m: usize,
    pub m1: usize,
    pub change_point: u64,
    pub oc: OcKind,
    pub ic_mixture: IcMixture,
    /// Seeds the wiring draws (mixture placement, shift signs), not the
    /// observations.
    pub seed: u64,
}

/// Expands a scenario into per-stream settings.
///
/// Stream order is deterministic in the scenario seed: the mixture
/// assignment permutes indices with one substream and random shift signs
/// come from another, so observation seeding stays untouched.
pub fn build_scenario(cfg: &ScenarioConfig) -> Result<Vec<StreamSpec>> {
    if cfg.m == 0 {
        return Err(Error::InvalidParameter("scenario needs m >= 1 streams".into()));
    }
    if cfg.m1 > cfg.m {
        return Err(Error::InvalidParameter(format!(
            "scenario has m1 = {} changed streams but only m = {} streams",
            cfg.m1, cfg.m
        )));
    }
    match cfg.oc {
        OcKind::MeanShift { delta } | OcKind::RandomSignShift { delta } => {
            if delta == 0.0 && cfg.m1 > 0 {
                return Err(Error::InvalidParameter(
                    "shift scenarios need a nonzero delta".into(),
                ));
            }
        }
        OcKind::MixedLocationScale { gamma, .. } => {
            if !(gamma > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "scale factor must be > 0, got {gamma}"
                )));
            }
        }
    }

    let ic_of = |idx: usize| -> DistributionSpec {
        match cfg.ic_mixture {
            IcMixture::AllNormal => DistributionSpec::Normal,
            IcMixture::Mixed => {
                // idx here is the position in a seeded permutation;
                // contiguous blocks of the permuted order get each
                // member, sized m/2, m/5, remainder.
                let half = cfg.m / 2;
                let fifth = cfg.m / 5;
                if idx < half {
                    DistributionSpec::Normal
                } else if idx < half + fifth {
                    DistributionSpec::StudentT { df: 2.5, standardized: true }
                } else {
                    DistributionSpec::LogNormal {
                        log_mean: 1.0,
                        log_sd: 0.5,
                        standardized: true,
                    }
                }
            }
        }
    };

    // Placement of mixture members over stream indices.
    let mut slot_of = vec![0usize; cfg.m];
    match cfg.ic_mixture {
        IcMixture::AllNormal => {}
        IcMixture::Mixed => {
            let mut perm: Vec<usize> = (0..cfg.m).collect();
            let mut rng = substream(cfg.seed, Lane::Scenario, [0, 0, 0]);
            // Fisher-Yates from the scenario lane.
            for i in (1..cfg.m).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            for (slot, &stream_idx) in perm.iter().enumerate() {
                slot_of[stream_idx] = slot;
            }
        }
    }

    let first_oc = cfg.m - cfg.m1;
    let mut sign_rng = substream(cfg.seed, Lane::Scenario, [0, 0, 1]);
    let mut specs = Vec::with_capacity(cfg.m);
    for i in 0..cfg.m {
        let ic = ic_of(slot_of[i]);
        let mut spec = StreamSpec::in_control(ic);
        if i >= first_oc {
            spec.change_point = cfg.change_point;
            match cfg.oc {
                OcKind::MeanShift { delta } => spec.shift = delta,
                OcKind::RandomSignShift { delta } => {
                    spec.shift = if sign_rng.random_bool(0.5) { delta } else { -delta };
                }
                OcKind::MixedLocationScale { delta, gamma } => {
                    // First ceil(m1/2) changed streams shift, the rest
                    // rescale.
                    let oc_rank = i - first_oc;
                    if oc_rank < cfg.m1.div_ceil(2) {
                        spec.shift = delta;
                    } else {
                        spec.scale = gamma;
                    }
                }
            }
        }
        spec.validate()?;
        specs.push(spec);
    }
    Ok(specs)
}
