//! Synthetic MISO-RIS instances: Rayleigh channels, beam-steering codebooks
//! with b-bit phase quantization, and received SNR.
//!
//! Complex values are `Complex64`, i.e. `(re, im)` pairs of f64. The BS→RIS
//! matrix `G` is N×M and stored row-major (`g[n * M + m]`).

use std::collections::HashSet;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::F17;
use crate::rng;

/// Largest phase resolution we materialize lookup tables for.
pub const MAX_BITS: u32 = 16;

/// The 2^b allowable unit-modulus phases `e^{j m Δθ}`, `Δθ = 2π / 2^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSet {
    bits: u32,
    values: Vec<Complex64>,
}

impl PhaseSet {
    pub fn new(bits: u32) -> Result<Self> {
        check_bits(bits)?;
        let count = 1usize << bits;
        let values = (0..count as u32).map(|l| level_phase(l, bits)).collect();
        Ok(PhaseSet { bits, values })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        phase_step(self.bits)
    }

    /// Nearest quantization level to a continuous angle (radians).
    pub fn quantize(&self, angle: f64) -> u32 {
        quantize_angle(angle, self.bits)
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::invalid(format!(
            "phase bits must be in 1..={MAX_BITS}, got {bits}"
        )));
    }
    Ok(())
}

fn phase_step(bits: u32) -> f64 {
    2.0 * PI / (1u64 << bits) as f64
}

fn level_phase(level: u32, bits: u32) -> Complex64 {
    if level == 0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::from_polar(1.0, level as f64 * phase_step(bits))
}

fn quantize_angle(angle: f64, bits: u32) -> u32 {
    let levels = 1u64 << bits;
    let a = angle.rem_euclid(2.0 * PI);
    ((a / phase_step(bits)).round() as u64 % levels) as u32
}

/// One RIS configuration: a quantization level per PRU.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codeword {
    bits: u32,
    levels: Vec<u32>,
}

impl Codeword {
    pub fn new(levels: Vec<u32>, bits: u32) -> Result<Self> {
        check_bits(bits)?;
        if let Some(&bad) = levels.iter().find(|&&l| (l as u64) >= (1u64 << bits)) {
            return Err(Error::invalid(format!(
                "level {bad} out of range for {bits}-bit phases"
            )));
        }
        Ok(Codeword { bits, levels })
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn phases(&self) -> Vec<Complex64> {
        self.levels
            .iter()
            .map(|&l| level_phase(l, self.bits))
            .collect()
    }

    pub fn degrees(&self) -> Vec<f64> {
        let step = 360.0 / (1u64 << self.bits) as f64;
        self.levels.iter().map(|&l| l as f64 * step).collect()
    }
}

/// Shared BS→RIS channel plus one RIS→UE vector per UE.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    n: usize,
    m: usize,
    g: Vec<Complex64>,
    h_r: Vec<Vec<Complex64>>,
    power: f64,
    noise: f64,
}

impl ChannelSet {
    pub fn new(
        n: usize,
        m: usize,
        g: Vec<Complex64>,
        h_r: Vec<Vec<Complex64>>,
        power: f64,
        noise: f64,
    ) -> Result<Self> {
        if n == 0 || m == 0 || h_r.is_empty() {
            return Err(Error::invalid("channel dimensions must be positive"));
        }
        if g.len() != n * m {
            return Err(Error::invalid(format!(
                "G has {} entries, expected {n}x{m}",
                g.len()
            )));
        }
        if let Some(k) = h_r.iter().position(|h| h.len() != n) {
            return Err(Error::invalid(format!("h_r[{k}] length != N={n}")));
        }
        if !(power > 0.0 && power.is_finite()) || !(noise > 0.0 && noise.is_finite()) {
            return Err(Error::invalid("power and noise must be positive and finite"));
        }
        Ok(ChannelSet {
            n,
            m,
            g,
            h_r,
            power,
            noise,
        })
    }

    /// Number of RIS elements (PRUs).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of BS antennas.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of UEs.
    pub fn k(&self) -> usize {
        self.h_r.len()
    }

    pub fn g(&self) -> &[Complex64] {
        &self.g
    }

    pub fn g_at(&self, n: usize, m: usize) -> Complex64 {
        self.g[n * self.m + m]
    }

    pub fn h_r(&self, ue: usize) -> &[Complex64] {
        &self.h_r[ue]
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn with_power(mut self, power: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::invalid("power must be positive"));
        }
        self.power = power;
        Ok(self)
    }

    /// Replaces the RIS→UE vector of one UE.
    pub fn with_h_r(mut self, ue: usize, h: Vec<Complex64>) -> Result<Self> {
        if ue >= self.k() || h.len() != self.n {
            return Err(Error::invalid("h_r replacement has wrong shape"));
        }
        self.h_r[ue] = h;
        Ok(self)
    }

    /// Effective M-vector `Gᵀ diag(phases) h_r[ue]`.
    pub fn effective_channel(&self, phases: &[Complex64], ue: usize) -> Vec<Complex64> {
        let h = &self.h_r[ue];
        let mut out = vec![Complex64::new(0.0, 0.0); self.m];
        for (n, (&p, &hr)) in phases.iter().zip(h).enumerate() {
            let a = p * hr;
            let row = &self.g[n * self.m..(n + 1) * self.m];
            for (o, &g) in out.iter_mut().zip(row) {
                *o += g * a;
            }
        }
        out
    }

    /// `P ‖h‖² / σ²` for arbitrary continuous phases.
    pub fn snr_for_phases(&self, phases: &[Complex64], ue: usize) -> Result<f64> {
        if ue >= self.k() {
            return Err(Error::invalid(format!("UE {ue} out of range (K={})", self.k())));
        }
        if phases.len() != self.n {
            return Err(Error::invalid(format!(
                "configuration has {} phases, RIS has {}",
                phases.len(),
                self.n
            )));
        }
        let gain: f64 = self
            .effective_channel(phases, ue)
            .iter()
            .map(|c| c.norm_sqr())
            .sum();
        Ok(self.power * gain / self.noise)
    }
}

/// Deployment and link-budget settings for [`generate_channels_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Transmit power (W).
    pub power_w: f64,
    /// Noise power (W).
    pub noise_w: f64,
    /// Side length of the square UE deployment area (m). The RIS sits at a corner.
    pub area_m: f64,
    /// Distance below which no further path gain is applied (m).
    pub reference_m: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            power_w: 1.0,
            // -90 dBm
            noise_w: 1e-12,
            area_m: 50.0,
            reference_m: 1.0,
        }
    }
}

pub fn generate_channels(k: usize, n: usize, m: usize, seed: u64) -> Result<ChannelSet> {
    generate_channels_with(&ChannelConfig::default(), k, n, m, seed)
}

/// Unit-variance circularly-symmetric Gaussian entries for `G` and every
/// `h_r[k]`; each `h_r[k]` is scaled by the free-space amplitude `d_ref / d_k`
/// for a UE dropped uniformly in the deployment square.
pub fn generate_channels_with(
    cfg: &ChannelConfig,
    k: usize,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<ChannelSet> {
    if k == 0 || n == 0 || m == 0 {
        return Err(Error::invalid(format!(
            "dimensions must be >= 1 (K={k}, N={n}, M={m})"
        )));
    }
    if !(cfg.area_m > 0.0 && cfg.reference_m > 0.0) {
        return Err(Error::invalid("area and reference distance must be positive"));
    }
    let half = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
    let cn = |r: &mut rng::Rng| Complex64::new(half.sample(r), half.sample(r));

    let mut g_rng = rng::substream(seed, &[0]);
    let g = (0..n * m).map(|_| cn(&mut g_rng)).collect();

    let h_r = (0..k)
        .map(|ue| {
            let mut r = rng::substream(seed, &[1, ue as u64]);
            let x = r.random::<f64>() * cfg.area_m;
            let y = r.random::<f64>() * cfg.area_m;
            let dist = x.hypot(y).max(cfg.reference_m);
            let amp = cfg.reference_m / dist;
            (0..n).map(|_| cn(&mut r) * amp).collect()
        })
        .collect();

    ChannelSet::new(n, m, g, h_r, cfg.power_w, cfg.noise_w)
}

/// K distinct codewords sharing one phase resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    bits: u32,
    n: usize,
    codewords: Vec<Codeword>,
}

impl Codebook {
    pub fn new(codewords: Vec<Codeword>) -> Result<Self> {
        let first = codewords
            .first()
            .ok_or_else(|| Error::invalid("codebook must not be empty"))?;
        let (bits, n) = (first.bits, first.len());
        if codewords.iter().any(|c| c.bits != bits || c.len() != n) {
            return Err(Error::invalid("codewords disagree on N or b"));
        }
        let distinct: HashSet<&Codeword> = codewords.iter().collect();
        if distinct.len() != codewords.len() {
            return Err(Error::invalid("codewords must be distinct"));
        }
        Ok(Codebook { bits, n, codewords })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.codewords.len()
    }

    pub fn codewords(&self) -> &[Codeword] {
        &self.codewords
    }

    pub fn get(&self, i: usize) -> &Codeword {
        &self.codewords[i]
    }
}

/// Continuous per-PRU phases (radians) that beam-steer toward `ue`.
///
/// Alternates between maximum-ratio transmission at the BS and co-phasing of
/// the RIS elements against the resulting per-element cascade. Each half-step
/// cannot decrease `‖Gᵀ diag(φ) h_r‖`.
pub fn steering_angles(ch: &ChannelSet, ue: usize) -> Vec<f64> {
    let (n, m) = (ch.n(), ch.m());
    let h = ch.h_r(ue);
    let mut phases = vec![Complex64::new(1.0, 0.0); n];
    let mut angles = vec![0.0; n];
    let mut best = -1.0;
    for _ in 0..32 {
        let eff = ch.effective_channel(&phases, ue);
        let norm = eff.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm <= best * (1.0 + 1e-12) || norm == 0.0 {
            break;
        }
        best = norm;
        // w = conj(h_eff) / ‖h_eff‖ (MRT); co-phase a_n = h_r[n] (G w)_n.
        let w: Vec<Complex64> = eff.iter().map(|c| c.conj() / norm).collect();
        for nn in 0..n {
            let gw: Complex64 = (0..m).map(|mm| ch.g_at(nn, mm) * w[mm]).sum();
            let a = h[nn] * gw;
            angles[nn] = -a.arg();
            phases[nn] = Complex64::from_polar(1.0, angles[nn]);
        }
    }
    angles
}

/// One beam-steering codeword per UE, quantized to `bits` per PRU.
/// Duplicates are perturbed one random PRU level at a time until distinct.
pub fn build_codebook(ch: &ChannelSet, bits: u32, seed: u64) -> Result<Codebook> {
    check_bits(bits)?;
    let (k, n) = (ch.k(), ch.n());
    let total_bits = n as u64 * bits as u64;
    if total_bits < 64 && (k as u64) > (1u64 << total_bits) {
        return Err(Error::invalid(format!(
            "cannot build {k} distinct codewords from {n} PRUs at {bits} bits"
        )));
    }
    let levels = 1u32 << bits;
    let mut rng = rng::substream(seed, &[2]);
    let mut seen: HashSet<Vec<u32>> = HashSet::with_capacity(k);
    let mut codewords = Vec::with_capacity(k);
    for ue in 0..k {
        let mut lv: Vec<u32> = steering_angles(ch, ue)
            .into_iter()
            .map(|a| quantize_angle(a, bits))
            .collect();
        while seen.contains(&lv) {
            let pru = rng.random_range(0..n);
            let shift = rng.random_range(1..levels);
            lv[pru] = (lv[pru] + shift) % levels;
        }
        seen.insert(lv.clone());
        codewords.push(Codeword { bits, levels: lv });
    }
    Codebook::new(codewords)
}

/// Received SNR (linear) at `ue` when the RIS applies `codeword`, with
/// maximum-ratio precoding at the BS: `P ‖Gᵀ diag(c) h_r[ue]‖² / σ²`.
pub fn snr(ch: &ChannelSet, codeword: &Codeword, ue: usize) -> Result<f64> {
    ch.snr_for_phases(&codeword.phases(), ue)
}

/// SNR at `ue` under every codeword of the book, in codebook order.
pub fn snr_row(ch: &ChannelSet, book: &Codebook, ue: usize) -> Result<Vec<f64>> {
    if ue >= ch.k() {
        return Err(Error::invalid(format!("UE {ue} out of range (K={})", ch.k())));
    }
    if book.n() != ch.n() {
        return Err(Error::invalid("codebook N does not match channel N"));
    }
    let m = ch.m();
    // b[n][m] = G[n][m] h_r[ue][n]; the configuration only rotates row n.
    let h = ch.h_r(ue);
    let b: Vec<Complex64> = (0..ch.n() * m).map(|i| ch.g[i] * h[i / m]).collect();
    let table = PhaseSet::new(book.bits())?;
    let mut eff = vec![Complex64::new(0.0, 0.0); m];
    Ok(book
        .codewords()
        .iter()
        .map(|cw| {
            eff.iter_mut().for_each(|e| *e = Complex64::new(0.0, 0.0));
            for (nn, &l) in cw.levels().iter().enumerate() {
                let p = table.values[l as usize];
                for (e, &bb) in eff.iter_mut().zip(&b[nn * m..(nn + 1) * m]) {
                    *e += bb * p;
                }
            }
            let gain: f64 = eff.iter().map(|c| c.norm_sqr()).sum();
            ch.power * gain / ch.noise
        })
        .collect())
}

/// A generated instance: channels plus the codebook built for them.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub channels: ChannelSet,
    pub codebook: Codebook,
    pub seed: u64,
}

impl Instance {
    pub fn generate(k: usize, n: usize, m: usize, bits: u32, seed: u64) -> Result<Self> {
        let channels = generate_channels(k, n, m, seed)?;
        let codebook = build_codebook(&channels, bits, seed)?;
        Ok(Instance {
            channels,
            codebook,
            seed,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let c = &self.channels;
        let pair = |z: &Complex64| [F17(z.re), F17(z.im)];
        let file = InstanceFile {
            meta: Meta {
                k: c.k(),
                n: c.n(),
                m: c.m(),
                b: self.codebook.bits(),
                p: F17(c.power),
                sigma2: F17(c.noise),
                seed: self.seed,
            },
            g: c.g.iter().map(pair).collect(),
            h_r: c.h_r.iter().map(|h| h.iter().map(pair).collect()).collect(),
            codewords: self
                .codebook
                .codewords()
                .iter()
                .map(|cw| cw.levels.clone())
                .collect(),
        };
        serde_json::to_string(&file).map_err(|e| Error::Format {
            what: "instance",
            message: e.to_string(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Format {
            what: "instance",
            message: e.to_string(),
        })?;
        let cx = |p: &[F17; 2]| Complex64::new(p[0].0, p[1].0);
        let channels = ChannelSet::new(
            f.meta.n,
            f.meta.m,
            f.g.iter().map(cx).collect(),
            f.h_r.iter().map(|h| h.iter().map(cx).collect()).collect(),
            f.meta.p.0,
            f.meta.sigma2.0,
        )?;
        if channels.k() != f.meta.k || f.codewords.len() != f.meta.k {
            return Err(Error::invalid("instance K disagrees with its arrays"));
        }
        let codewords = f
            .codewords
            .into_iter()
            .map(|lv| Codeword::new(lv, f.meta.b))
            .collect::<Result<Vec<_>>>()?;
        let codebook = Codebook::new(codewords)?;
        if codebook.n() != channels.n() {
            return Err(Error::invalid("codeword length disagrees with N"));
        }
        Ok(Instance {
            channels,
            codebook,
            seed: f.meta.seed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Instance::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct Meta {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    b: u32,
    #[serde(rename = "P")]
    p: F17,
    sigma2: F17,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    meta: Meta,
    #[serde(rename = "G")]
    g: Vec<[F17; 2]>,
    h_r: Vec<Vec<[F17; 2]>>,
    codewords: Vec<Vec<u32>>,
}
