//! Steady-state pools of local-statistic states.
//!
//! Monitoring schemes initialize every stream from the long-run
//! distribution of its local statistic rather than from zero, which
//! removes the start-up transient from run-length behavior. A pool
//! holds `size` independent state snapshots, each taken after `burn_in`
//! in-control ticks, plus the sorted statistic values those snapshots
//! produce. The sorted values double as the reference distribution for
//! the global statistics: expected quantiles for the quantile-gap
//! statistic and an empirical CDF for the logistic one.
//!
//! Pools are expensive to build, so they serialize to a compact binary
//! file with a magic header, a version, the generating parameters, and
//! a trailing checksum.

use crate::error::{Error, Result};
use crate::local::{AdaptiveCusumState, CusumState, LocalFamily, LocalState};
use crate::nonparametric::NpState;
use crate::order_stats::interpolated_quantile;
use crate::rng::{substream, Lane};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::io::{Read, Write};
use std::path::Path;

/// How a pool is generated.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolConfig {
    pub family: LocalFamily,
    /// Number of independent snapshots.
    pub size: usize,
    /// In-control ticks before each snapshot is taken.
    pub burn_in: usize,
    pub seed: u64,
}

/// One stored state, stripped to the fields that survive a restart.
/// The self-starting family drops its observation history: a drawn
/// snapshot is paired with a fresh reference sample instead.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Cusum {
        s_plus: f64,
    },
    Adaptive {
        s: [f64; 2],
        t: [f64; 2],
        c: [f64; 2],
        x_prev: f64,
    },
    Nonparametric {
        shat: [f64; 4],
        n_count: [u64; 4],
        /// Per-region counts of all four CUSUMs, flattened row-major.
        n_cell: Vec<u64>,
        /// 0-based previous region per layout; -1 encodes none.
        y_prev: [i64; 2],
    },
}

impl Snapshot {
    pub fn from_state(state: &LocalState) -> Snapshot {
        match state {
            LocalState::Cusum(s) => Snapshot::Cusum { s_plus: s.s_plus },
            LocalState::Adaptive(s) => Snapshot::Adaptive {
                s: s.s,
                t: s.t,
                c: s.c,
                x_prev: s.x_prev,
            },
            LocalState::Nonparametric(s) => {
                let (n_count, n_cell, y_prev) = s.counts();
                Snapshot::Nonparametric {
                    shat: s.shat(),
                    n_count: *n_count,
                    n_cell: n_cell.iter().flat_map(|v| v.iter().copied()).collect(),
                    y_prev: [
                        y_prev[0].map_or(-1, |r| r as i64),
                        y_prev[1].map_or(-1, |r| r as i64),
                    ],
                }
            }
        }
    }

    /// Statistic value this snapshot reports.
    pub fn statistic(&self) -> f64 {
        match self {
            Snapshot::Cusum { s_plus } => *s_plus,
            Snapshot::Adaptive { c, .. } => c[0].max(c[1]),
            Snapshot::Nonparametric { shat, .. } => shat.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Reconstructs a runnable state. `reference` supplies the fresh
    /// history for the self-starting family (exactly `n` values) and is
    /// ignored by the parametric families.
    pub fn to_state(&self, family: &LocalFamily, reference: &[f64]) -> Result<LocalState> {
        match (self, family) {
            (Snapshot::Cusum { s_plus }, LocalFamily::Cusum(_)) => {
                Ok(LocalState::Cusum(CusumState { s_plus: *s_plus }))
            }
            (Snapshot::Adaptive { s, t, c, x_prev }, LocalFamily::Adaptive(_)) => {
                Ok(LocalState::Adaptive(AdaptiveCusumState {
                    c: *c,
                    s: *s,
                    t: *t,
                    x_prev: *x_prev,
                }))
            }
            (
                Snapshot::Nonparametric { shat, n_count, n_cell, y_prev },
                LocalFamily::Nonparametric(params),
            ) => {
                let d = params.d();
                if n_cell.len() != 4 * d {
                    return Err(Error::LengthMismatch { expected: 4 * d, got: n_cell.len() });
                }
                let cells: [Vec<u64>; 4] =
                    std::array::from_fn(|i| n_cell[i * d..(i + 1) * d].to_vec());
                let y = [
                    if y_prev[0] < 0 { None } else { Some(y_prev[0] as u32) },
                    if y_prev[1] < 0 { None } else { Some(y_prev[1] as u32) },
                ];
                Ok(LocalState::Nonparametric(NpState::from_parts(
                    reference, params, *shat, *n_count, cells, y,
                )?))
            }
            _ => Err(Error::PoolKindMismatch {
                expected: family.kind_name().to_string(),
                found: self.kind_name().to_string(),
            }),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Snapshot::Cusum { .. } => "cusum",
            Snapshot::Adaptive { .. } => "adaptive",
            Snapshot::Nonparametric { .. } => "nonparametric",
        }
    }
}

/// Steady-state pool: snapshots plus the sorted statistic values they
/// report.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStatePool {
    config: PoolConfig,
    snapshots: Vec<Snapshot>,
    sorted_values: Vec<f64>,
}

impl SteadyStatePool {
    /// Simulates the pool. Sequence `k` burns in on its own substream,
    /// so the result is independent of thread count and worker
    /// scheduling.
    pub fn generate(config: PoolConfig) -> Result<Self> {
        if config.size == 0 {
            return Err(Error::InvalidParameter("pool size must be positive".into()));
        }
        let snapshots: Vec<Snapshot> = (0..config.size)
            .into_par_iter()
            .map(|k| {
                let mut rng = substream(config.seed, Lane::PoolGen, [k as u64, 0, 0]);
                let mut state = config
                    .family
                    .cold_state(&mut rng, |r| r.sample::<f64, _>(StandardNormal));
                for _ in 0..config.burn_in {
                    let x: f64 = rng.sample(StandardNormal);
                    config.family.step(&mut state, x);
                }
                Snapshot::from_state(&state)
            })
            .collect();
        Ok(Self::from_snapshots(config, snapshots))
    }

    /// Wraps externally produced snapshots, sorting their values.
    pub fn from_snapshots(config: PoolConfig, snapshots: Vec<Snapshot>) -> Self {
        let mut sorted_values: Vec<f64> = snapshots.iter().map(Snapshot::statistic).collect();
        sorted_values.sort_unstable_by(f64::total_cmp);
        SteadyStatePool { config, snapshots, sorted_values }
    }

    pub fn family(&self) -> &LocalFamily {
        &self.config.family
    }

    pub fn config(&self) -> &PoolConfig {
        &self.config
    }

    pub fn size(&self) -> usize {
        self.snapshots.len()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    pub fn draw_snapshot_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.snapshots.len())
    }

    /// Draws a snapshot uniformly and turns it into a runnable state.
    /// See [`Snapshot::to_state`] for the role of `reference`.
    pub fn draw_initial_state<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        reference: &[f64],
    ) -> Result<LocalState> {
        let idx = self.draw_snapshot_index(rng);
        self.snapshots[idx].to_state(&self.config.family, reference)
    }

    /// Mid-rank empirical CDF of the pool values at `v`, clamped away
    /// from 0 and 1 so downstream logit transforms stay finite: ties
    /// count half, and the result lies in [1/(2K), 1 - 1/(2K)].
    pub fn empirical_cdf(&self, v: f64) -> f64 {
        let k = self.sorted_values.len() as f64;
        let below = self.sorted_values.partition_point(|&s| s < v);
        let not_above = self.sorted_values.partition_point(|&s| s <= v);
        let u = (below as f64 + (not_above - below) as f64 / 2.0) / k;
        u.clamp(1.0 / (2.0 * k), 1.0 - 1.0 / (2.0 * k))
    }

    /// Expected in-control quantiles of the local statistic at the
    /// standard plotting positions for a panel of `m` streams.
    pub fn expected_quantiles(&self, m: usize) -> Result<QuantileTable> {
        let positions = quantile_positions(m)?;
        let expected = positions
            .iter()
            .map(|&p| interpolated_quantile(&self.sorted_values, p))
            .collect();
        Ok(QuantileTable { positions, expected })
    }
}

/// Plotting positions `(i - 3/4) / (m - 1/2)` for `i = 1..m`; strictly
/// inside (0, 1) for every `m >= 1`.
pub fn quantile_positions(m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidParameter("panel needs at least one stream".into()));
    }
    Ok((1..=m)
        .map(|i| (i as f64 - 0.75) / (m as f64 - 0.5))
        .collect())
}

/// Expected order statistics of a panel's local values under control,
/// one per plotting position.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    positions: Vec<f64>,
    expected: Vec<f64>,
}

impl QuantileTable {
    /// Table whose expected quantiles come from the standard logistic
    /// distribution; the logistic-scale global statistic is the
    /// quantile-gap statistic against this table.
    pub fn logistic(m: usize) -> Result<QuantileTable> {
        let positions = quantile_positions(m)?;
        let expected = positions.iter().map(|&p| (p / (1.0 - p)).ln()).collect();
        Ok(QuantileTable { positions, expected })
    }

    /// Table from explicit positions and expected quantiles.
    ///
    /// # Panics
    /// Panics if the slices differ in length.
    pub fn with_expected(positions: Vec<f64>, expected: Vec<f64>) -> QuantileTable {
        assert_eq!(positions.len(), expected.len(), "positions and expected must align");
        QuantileTable { positions, expected }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn expected(&self) -> &[f64] {
        &self.expected
    }
}

// --- binary pool file format ---
//
// magic "SSPOOL" | version u32 | payload | fnv1a64(payload)
//
// payload: kind u32 | family params | size u64 | burn_in u64 | seed u64
//          | snapshots | sorted values (size x f64)
// All integers and floats little-endian.

const MAGIC: &[u8; 6] = b"SSPOOL";
const VERSION: u32 = 1;

const KIND_CUSUM: u32 = 1;
const KIND_ADAPTIVE: u32 = 2;
const KIND_NONPARAMETRIC: u32 = 3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

struct PayloadWriter {
    buf: Vec<u8>,
}

impl PayloadWriter {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct PayloadReader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> PayloadReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::PoolTruncated { path: self.path.to_path_buf() });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl SteadyStatePool {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = PayloadWriter { buf: Vec::new() };
        match &self.config.family {
            LocalFamily::Cusum(p) => {
                w.u32(KIND_CUSUM);
                w.f64(p.mu());
            }
            LocalFamily::Adaptive(p) => {
                w.u32(KIND_ADAPTIVE);
                w.f64(p.rho());
                w.f64(p.s0());
                w.f64(p.t0());
            }
            LocalFamily::Nonparametric(p) => {
                w.u32(KIND_NONPARAMETRIC);
                w.u32(p.d() as u32);
                w.u32(p.n() as u32);
                for profile in 0..2 {
                    for &a in p.alpha(profile) {
                        w.f64(a);
                    }
                }
            }
        }
        w.u64(self.snapshots.len() as u64);
        w.u64(self.config.burn_in as u64);
        w.u64(self.config.seed);
        for snap in &self.snapshots {
            match snap {
                Snapshot::Cusum { s_plus } => w.f64(*s_plus),
                Snapshot::Adaptive { s, t, c, x_prev } => {
                    for v in s.iter().chain(t).chain(c) {
                        w.f64(*v);
                    }
                    w.f64(*x_prev);
                }
                Snapshot::Nonparametric { shat, n_count, n_cell, y_prev } => {
                    for v in shat {
                        w.f64(*v);
                    }
                    for v in n_count {
                        w.u64(*v);
                    }
                    for v in n_cell {
                        w.u64(*v);
                    }
                    for v in y_prev {
                        w.i64(*v);
                    }
                }
            }
        }
        for &v in &self.sorted_values {
            w.f64(v);
        }

        let io_err = |source| Error::PoolIo { path: path.to_path_buf(), source };
        let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        file.write_all(MAGIC).map_err(io_err)?;
        file.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
        file.write_all(&w.buf).map_err(io_err)?;
        file.write_all(&fnv1a64(&w.buf).to_le_bytes()).map_err(io_err)?;
        file.flush().map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let io_err = |source| Error::PoolIo { path: path.to_path_buf(), source };
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .map_err(io_err)?
            .read_to_end(&mut bytes)
            .map_err(io_err)?;

        if bytes.len() < MAGIC.len() + 4 + 8 {
            return Err(Error::PoolTruncated { path: path.to_path_buf() });
        }
        if &bytes[..6] != MAGIC {
            return Err(Error::PoolBadMagic { path: path.to_path_buf() });
        }
        let version = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
        if version != VERSION {
            return Err(Error::PoolUnsupportedVersion { path: path.to_path_buf(), found: version });
        }
        let payload = &bytes[10..bytes.len() - 8];
        let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
        if fnv1a64(payload) != stored {
            return Err(Error::PoolChecksum { path: path.to_path_buf() });
        }

        let format_err = |message: String| Error::PoolFormat { path: path.to_path_buf(), message };
        let mut r = PayloadReader { buf: payload, pos: 0, path };
        let kind = r.u32()?;
        let family = match kind {
            KIND_CUSUM => LocalFamily::Cusum(
                crate::local::CusumParams::new(r.f64()?)
                    .map_err(|e| format_err(e.to_string()))?,
            ),
            KIND_ADAPTIVE => {
                let (rho, s0, t0) = (r.f64()?, r.f64()?, r.f64()?);
                LocalFamily::Adaptive(
                    crate::local::AdaptiveParams::new(rho, s0, t0)
                        .map_err(|e| format_err(e.to_string()))?,
                )
            }
            KIND_NONPARAMETRIC => {
                let d = r.u32()? as usize;
                let n = r.u32()? as usize;
                if d == 0 || d > 1 << 16 {
                    return Err(format_err(format!("implausible region count {d}")));
                }
                let mut profiles = Vec::new();
                for _ in 0..2 {
                    let mut a = Vec::with_capacity(d);
                    for _ in 0..d {
                        a.push(r.f64()?);
                    }
                    profiles.push(a);
                }
                let a1 = profiles.pop().unwrap();
                let a0 = profiles.pop().unwrap();
                LocalFamily::Nonparametric(
                    crate::nonparametric::NpParams::with_priors(d, n, a0, a1)
                        .map_err(|e| format_err(e.to_string()))?,
                )
            }
            other => return Err(format_err(format!("unknown kind tag {other}"))),
        };

        let size = r.u64()? as usize;
        let burn_in = r.u64()? as usize;
        let seed = r.u64()?;
        if size == 0 {
            return Err(format_err("pool size is zero".into()));
        }

        let mut snapshots = Vec::with_capacity(size);
        for _ in 0..size {
            let snap = match &family {
                LocalFamily::Cusum(_) => Snapshot::Cusum { s_plus: r.f64()? },
                LocalFamily::Adaptive(_) => {
                    let mut v = [0.0; 7];
                    for slot in &mut v {
                        *slot = r.f64()?;
                    }
                    Snapshot::Adaptive {
                        s: [v[0], v[1]],
                        t: [v[2], v[3]],
                        c: [v[4], v[5]],
                        x_prev: v[6],
                    }
                }
                LocalFamily::Nonparametric(p) => {
                    let mut shat = [0.0; 4];
                    for slot in &mut shat {
                        *slot = r.f64()?;
                    }
                    let mut n_count = [0u64; 4];
                    for slot in &mut n_count {
                        *slot = r.u64()?;
                    }
                    let mut n_cell = Vec::with_capacity(4 * p.d());
                    for _ in 0..4 * p.d() {
                        n_cell.push(r.u64()?);
                    }
                    let y_prev = [r.i64()?, r.i64()?];
                    Snapshot::Nonparametric { shat, n_count, n_cell, y_prev }
                }
            };
            snapshots.push(snap);
        }
        let mut sorted_values = Vec::with_capacity(size);
        for _ in 0..size {
            sorted_values.push(r.f64()?);
        }
        if r.pos != payload.len() {
            return Err(format_err("trailing bytes after payload".into()));
        }
        if sorted_values.windows(2).any(|w| w[0] > w[1]) {
            return Err(format_err("stored values are not sorted".into()));
        }

        Ok(SteadyStatePool {
            config: PoolConfig { family, size, burn_in, seed },
            snapshots,
            sorted_values,
        })
    }

    /// Loads a pool and checks it was generated for `family`.
    pub fn load_for_family(path: &Path, family: &LocalFamily) -> Result<Self> {
        let pool = Self::load(path)?;
        if pool.config.family != *family {
            return Err(Error::PoolKindMismatch {
                expected: describe_family(family),
                found: describe_family(&pool.config.family),
            });
        }
        Ok(pool)
    }
}

fn describe_family(family: &LocalFamily) -> String {
    match family {
        LocalFamily::Cusum(p) => format!("cusum(mu={})", p.mu()),
        LocalFamily::Adaptive(p) => {
            format!("adaptive(rho={}, s0={}, t0={})", p.rho(), p.s0(), p.t0())
        }
        LocalFamily::Nonparametric(p) => format!("nonparametric(d={}, n={})", p.d(), p.n()),
    }
}
