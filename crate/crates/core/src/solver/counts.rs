use serde::{Deserialize, Serialize};

/// How accumulated pair counts are filtered before they bias sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountMode {
    Normal,
    UpperLimit,
    Intermediate,
}

impl CountMode {
    /// Cycle order on stagnation: Normal → UpperLimit → Intermediate → Normal.
    pub fn next(self) -> CountMode {
        match self {
            CountMode::Normal => CountMode::UpperLimit,
            CountMode::UpperLimit => CountMode::Intermediate,
            CountMode::Intermediate => CountMode::Normal,
        }
    }
}

/// Fraction of the total count Q at which Upper Limit mode caps a pair.
pub const CAP_FRACTION: f64 = 0.05;
/// Band of δ_max that Intermediate mode inspects.
pub const BAND: (f64, f64) = (0.4, 0.8);
/// Share of nonzero pairs that must sit in the band to trigger scaling.
pub const BAND_TRIGGER: f64 = 0.3;
pub const BAND_SCALE: f64 = 0.3;

/// Symmetric matrix of how often each unordered codeword pair was adjacent
/// in a retained route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCounts {
    k: usize,
    delta: Vec<u32>,
}

impl PairCounts {
    pub fn new(k: usize) -> Self {
        PairCounts {
            k,
            delta: vec![0; k * k],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.delta[u * self.k + v]
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[u32] {
        &self.delta[u * self.k..(u + 1) * self.k]
    }

    fn set(&mut self, u: usize, v: usize, c: u32) {
        self.delta[u * self.k + v] = c;
        self.delta[v * self.k + u] = c;
    }

    /// Counts each adjacent pair of `route` once.
    pub fn add_route(&mut self, route: &[usize]) {
        for w in route.windows(2) {
            let (u, v) = (w[0], w[1]);
            if u == v {
                continue;
            }
            let c = self.get(u, v).saturating_add(1);
            self.set(u, v, c);
        }
    }

    /// Q: the sum over unordered pairs.
    pub fn total(&self) -> u64 {
        self.upper().map(|(_, _, c)| c as u64).sum()
    }

    pub fn max(&self) -> u32 {
        self.delta.iter().copied().max().unwrap_or(0)
    }

    pub fn nonzero_pairs(&self) -> usize {
        self.upper().filter(|&(_, _, c)| c > 0).count()
    }

    fn upper(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.k).flat_map(move |u| (u + 1..self.k).map(move |v| (u, v, self.get(u, v))))
    }

    pub fn apply_mode(&mut self, mode: CountMode) {
        match mode {
            CountMode::Normal => {}
            CountMode::UpperLimit => self.cap(),
            CountMode::Intermediate => self.damp_band(),
        }
    }

    /// Caps every pair at `CAP_FRACTION · Q` (at least 1).
    fn cap(&mut self) {
        let q = self.total();
        if q == 0 {
            return;
        }
        let cap = ((CAP_FRACTION * q as f64).floor() as u32).max(1);
        for c in self.delta.iter_mut() {
            *c = (*c).min(cap);
        }
    }

    /// Scales the pairs in the `BAND` of δ_max by `BAND_SCALE` when enough
    /// of the nonzero pairs crowd into it. Nonzero counts stay nonzero.
    fn damp_band(&mut self) {
        let max = self.max();
        let nz = self.nonzero_pairs();
        if max == 0 {
            return;
        }
        let (lo, hi) = (BAND.0 * max as f64, BAND.1 * max as f64);
        let in_band = |c: u32| c > 0 && (c as f64) >= lo && (c as f64) <= hi;
        let banded = self.upper().filter(|&(_, _, c)| in_band(c)).count();
        if (banded as f64) < BAND_TRIGGER * nz as f64 {
            return;
        }
        for c in self.delta.iter_mut() {
            if in_band(*c) {
                *c = ((*c as f64 * BAND_SCALE).round() as u32).max(1);
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.k).all(|u| self.get(u, u) == 0 && (0..self.k).all(|v| self.get(u, v) == self.get(v, u)))
    }
}
