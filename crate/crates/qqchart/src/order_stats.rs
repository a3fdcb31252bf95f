//! Order-statistic containers and quantile helpers.

/// Sorted multiset with near-logarithmic insertion and O(log) selection
/// by rank. Values live in bounded chunks; a prefix-count table maps a
/// rank to its chunk. Designed for the growing history of a
/// self-starting statistic, where every tick inserts one value and reads
/// a handful of order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningSample {
    chunks: Vec<Vec<f64>>,
    /// starts[i] = number of values held by chunks[..i]; one entry per
    /// chunk plus a trailing total.
    starts: Vec<usize>,
}

/// Chunk capacity before splitting. Keeps per-insert shifting to a few
/// cache lines while the prefix table stays tiny.
const CHUNK_LIMIT: usize = 512;

impl RunningSample {
    pub fn new() -> Self {
        RunningSample { chunks: Vec::new(), starts: vec![0] }
    }

    pub fn from_values(values: &[f64]) -> Self {
        let mut s = RunningSample::new();
        for &v in values {
            s.insert(v);
        }
        s
    }

    pub fn len(&self) -> usize {
        *self.starts.last().expect("starts is never empty")
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inserts `x`, keeping duplicates.
    pub fn insert(&mut self, x: f64) {
        if self.chunks.is_empty() {
            self.chunks.push(vec![x]);
            self.starts = vec![0, 1];
            return;
        }
        // First chunk whose last element admits x; past-the-end values
        // fall into the final chunk.
        let mut c = self
            .chunks
            .partition_point(|chunk| *chunk.last().expect("chunks are non-empty") < x);
        if c == self.chunks.len() {
            c -= 1;
        }
        let pos = self.chunks[c].partition_point(|&v| v < x);
        self.chunks[c].insert(pos, x);
        for s in &mut self.starts[c + 1..] {
            *s += 1;
        }
        if self.chunks[c].len() > CHUNK_LIMIT {
            let right = self.chunks[c].split_off(CHUNK_LIMIT / 2);
            self.chunks.insert(c + 1, right);
            self.rebuild_starts();
        }
    }

    fn rebuild_starts(&mut self) {
        self.starts.clear();
        self.starts.push(0);
        let mut total = 0;
        for chunk in &self.chunks {
            total += chunk.len();
            self.starts.push(total);
        }
    }

    /// Returns the value of rank `k` (0-based, ascending).
    ///
    /// # Panics
    /// Panics if `k >= self.len()`.
    pub fn select(&self, k: usize) -> f64 {
        assert!(k < self.len(), "rank {k} out of range for {} values", self.len());
        let c = self.starts.partition_point(|&s| s <= k) - 1;
        self.chunks[c][k - self.starts[c]]
    }

    /// Number of stored values strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let c = self
            .chunks
            .partition_point(|chunk| *chunk.last().expect("chunks are non-empty") < x);
        if c == self.chunks.len() {
            return self.len();
        }
        self.starts[c] + self.chunks[c].partition_point(|&v| v < x)
    }

    /// Ascending iterator over all stored values.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.chunks.iter().flat_map(|c| c.iter().copied())
    }
}

impl Default for RunningSample {
    fn default() -> Self {
        Self::new()
    }
}

/// Linearly interpolated quantile of an ascending slice at probability
/// `p`, reading position `p * (len - 1)` between neighboring order
/// statistics. `p` is clamped to [0, 1].
///
/// # Panics
/// Panics if `sorted` is empty.
pub fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let p = p.clamp(0.0, 1.0);
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] + w * (sorted[hi] - sorted[lo])
    }
}
