//! Mismatch-loss matrices, the BSC feedback error model, and the two
//! objectives: the full single-bit-error expected loss and the open-path cost
//! that the TSP solvers minimize.

use std::borrow::Cow;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::Assignment;
use crate::codebook::{self, ChannelSet, Codebook};
use crate::error::{Error, Result};
use crate::numfmt::f17;
use crate::perm::Permutation;
use crate::rng;

/// K×K nonnegative relative SNR losses, zero on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    k: usize,
    d: Vec<f64>,
    symmetrized: bool,
}

impl LossMatrix {
    pub fn new(k: usize, d: Vec<f64>, symmetrized: bool) -> Result<Self> {
        if d.len() != k * k {
            return Err(Error::invalid(format!(
                "matrix has {} entries, expected {k}x{k}",
                d.len()
            )));
        }
        for i in 0..k {
            if d[i * k + i] != 0.0 {
                return Err(Error::invalid(format!("d[{i}][{i}] must be 0")));
            }
            for j in 0..k {
                let v = d[i * k + j];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::invalid(format!("d[{i}][{j}] = {v} is not a finite loss >= 0")));
                }
                if symmetrized && v != d[j * k + i] {
                    return Err(Error::invalid(format!(
                        "matrix flagged symmetric but d[{i}][{j}] != d[{j}][{i}]"
                    )));
                }
            }
        }
        Ok(LossMatrix { k, d, symmetrized })
    }

    pub fn from_rows(rows: &[Vec<f64>], symmetrized: bool) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("matrix rows must all have length K"));
        }
        LossMatrix::new(k, rows.concat(), symmetrized)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.k..(i + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    pub fn is_symmetrized(&self) -> bool {
        self.symmetrized
    }

    /// Value of the symmetrized matrix at (i, j) without materializing it.
    #[inline]
    pub fn sym(&self, i: usize, j: usize) -> f64 {
        if self.symmetrized {
            self.get(i, j)
        } else {
            (self.get(i, j) + self.get(j, i)) / 2.0
        }
    }

    /// Borrows `self` when already symmetrized, otherwise builds the mean matrix.
    pub fn symmetrize_cow(&self) -> Cow<'_, LossMatrix> {
        if self.symmetrized {
            Cow::Borrowed(self)
        } else {
            Cow::Owned(self.symmetrize())
        }
    }

    /// Replaces each pair d(i,j), d(j,i) with their mean.
    pub fn symmetrize(&self) -> LossMatrix {
        if self.symmetrized {
            return self.clone();
        }
        let k = self.k;
        let mut d = self.d.clone();
        for i in 0..k {
            for j in i + 1..k {
                let m = (self.get(i, j) + self.get(j, i)) / 2.0;
                d[i * k + j] = m;
                d[j * k + i] = m;
            }
        }
        LossMatrix {
            k,
            d,
            symmetrized: true,
        }
    }

    pub fn total(&self) -> f64 {
        self.d.iter().sum()
    }

    /// K lines of K comma-separated values, 17 significant digits each.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.k * self.k * 24);
        for i in 0..self.k {
            let line: Vec<String> = self.row(i).iter().map(|&v| f17(v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, symmetrized: bool) -> Result<Self> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(r, line)| {
                line.split(',')
                    .map(|f| {
                        f.trim().parse::<f64>().map_err(|e| Error::Format {
                            what: "loss matrix CSV",
                            message: format!("row {r}: {e}"),
                        })
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        LossMatrix::from_rows(&rows, symmetrized)
    }

    /// Writes the CSV and its JSON sidecar (see [`sidecar_path`]).
    pub fn save(&self, path: impl AsRef<Path>, source: &str, seed: Option<u64>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))?;
        let meta = MatrixMeta {
            k: self.k,
            symmetrized: self.symmetrized,
            source: source.to_string(),
            seed,
        };
        let side = sidecar_path(path);
        let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
        std::fs::write(&side, text).map_err(|e| Error::io(&side, e))
    }

    /// Reads a CSV matrix. The sidecar, when present, supplies the
    /// symmetrized flag; otherwise the matrix is treated as raw.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Option<MatrixMeta>)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let side = sidecar_path(path);
        let meta = match std::fs::read_to_string(&side) {
            Ok(t) => Some(serde_json::from_str::<MatrixMeta>(&t).map_err(|e| Error::Format {
                what: "matrix sidecar",
                message: e.to_string(),
            })?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(Error::io(&side, e)),
        };
        let m = LossMatrix::from_csv(&text, meta.as_ref().is_some_and(|m| m.symmetrized))?;
        if let Some(meta) = &meta {
            if meta.k != m.k {
                return Err(Error::invalid("sidecar K disagrees with CSV"));
            }
        }
        Ok((m, meta))
    }
}

/// `loss.csv` → `loss.meta.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    #[serde(rename = "K")]
    pub k: usize,
    pub symmetrized: bool,
    pub source: String,
    pub seed: Option<u64>,
}

/// `|1 - SNR_j / SNR_i|`, both SNRs measured on UE `i`'s channel.
pub fn mismatch_loss(ch: &ChannelSet, book: &Codebook, i: usize, j: usize) -> Result<f64> {
    if i >= book.k() || j >= book.k() || i >= ch.k() {
        return Err(Error::invalid(format!(
            "codeword pair ({i}, {j}) out of range (K={})",
            book.k()
        )));
    }
    let intended = codebook::snr(ch, book.get(i), i)?;
    if intended == 0.0 {
        return Err(Error::DegenerateInstance { ue: i });
    }
    let applied = codebook::snr(ch, book.get(j), i)?;
    Ok((1.0 - applied / intended).abs())
}

pub fn build_loss_matrix(ch: &ChannelSet, book: &Codebook, symmetrize: bool) -> Result<LossMatrix> {
    let k = book.k();
    if ch.k() != k {
        return Err(Error::invalid(format!(
            "{} UEs but {k} codewords",
            ch.k()
        )));
    }
    let rows = (0..k)
        .into_par_iter()
        .map(|i| {
            let snrs = codebook::snr_row(ch, book, i)?;
            let own = snrs[i];
            if own == 0.0 {
                return Err(Error::DegenerateInstance { ue: i });
            }
            Ok(snrs.iter().map(|&s| (1.0 - s / own).abs()).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let raw = LossMatrix::new(k, rows.concat(), false)?;
    Ok(if symmetrize { raw.symmetrize() } else { raw })
}

/// BPSK-over-AWGN bit error probability `½ erfc(√(10^(dB/10)))`.
pub fn ber_from_snr_db(snr_db: f64) -> f64 {
    let lin = 10f64.powf(snr_db / 10.0);
    0.5 * libm::erfc(lin.sqrt())
}

/// Feedback link modeled as a binary symmetric channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BscModel {
    pub snr_db: f64,
    pub q: f64,
}

impl BscModel {
    pub fn from_snr_db(snr_db: f64) -> Self {
        BscModel {
            snr_db,
            q: ber_from_snr_db(snr_db),
        }
    }
}

/// Expected loss per feedback under single-bit errors:
/// `(1/K) Σ_i Σ_{j: Ham(label_i, label_j) = 1} q d(i, j)` on the raw matrix.
pub fn expected_loss(loss: &LossMatrix, assignment: &Assignment, q: f64) -> Result<f64> {
    let k = loss.k();
    if assignment.k() != k {
        return Err(Error::invalid(format!(
            "assignment covers {} codewords, matrix has {k}",
            assignment.k()
        )));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("bit error probability {q} outside [0, 1]")));
    }
    let labels = assignment.labels();
    let codeword_of = assignment.codeword_of_label();
    let bits = assignment.bits();
    let mut sum = 0.0;
    for i in 0..k {
        for b in 0..bits {
            let j = codeword_of[labels[i] ^ (1 << b)];
            sum += loss.get(i, j);
        }
    }
    Ok(q * sum / k as f64)
}

/// Open-path cost `Σ_k d(π(k), π(k+1))` on the symmetrized matrix.
pub fn path_cost(loss: &LossMatrix, pi: &Permutation) -> Result<f64> {
    if pi.len() != loss.k() {
        return Err(Error::invalid(format!(
            "permutation of {} elements for a {}x{} matrix",
            pi.len(),
            loss.k(),
            loss.k()
        )));
    }
    Ok(order_cost(loss, pi.as_slice()))
}

/// Path cost of an ordering the caller knows to be valid.
#[inline]
pub(crate) fn order_cost(loss: &LossMatrix, order: &[usize]) -> f64 {
    order.windows(2).map(|w| loss.sym(w[0], w[1])).sum()
}

/// Edge-weight families for synthetic benchmark matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightDist {
    /// i.i.d. U[0, 1].
    Uniform,
    /// N(0.1, 0.02²) with probability 0.9, else N(0.9, 0.02²); clipped at 0.
    Clustered,
    /// U[0, 0.2] with probability 0.9, else U[0.8, 1].
    Exploded,
}

impl WeightDist {
    pub const ALL: [WeightDist; 3] = [WeightDist::Uniform, WeightDist::Clustered, WeightDist::Exploded];

    pub fn name(self) -> &'static str {
        match self {
            WeightDist::Uniform => "uniform",
            WeightDist::Clustered => "clustered",
            WeightDist::Exploded => "exploded",
        }
    }
}

impl fmt::Display for WeightDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightDist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(WeightDist::Uniform),
            "clustered" => Ok(WeightDist::Clustered),
            "exploded" => Ok(WeightDist::Exploded),
            other => Err(Error::invalid(format!("unknown distribution '{other}'"))),
        }
    }
}

const MAJORITY: f64 = 0.9;

/// Symmetric, zero-diagonal synthetic matrix. Row `i` draws its upper
/// triangle from its own substream.
pub fn synth_matrix(dist: WeightDist, k: usize, seed: u64) -> Result<LossMatrix> {
    if k < 2 {
        return Err(Error::invalid(format!("synthetic matrices need K >= 2, got {k}")));
    }
    let low = Normal::<f64>::new(0.1, 0.02).expect("valid normal");
    let high = Normal::<f64>::new(0.9, 0.02).expect("valid normal");
    let upper: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::substream(seed, &[3, i as u64]);
            (i + 1..k)
                .map(|_| match dist {
                    WeightDist::Uniform => r.random::<f64>(),
                    WeightDist::Clustered => {
                        let mode = if r.random::<f64>() < MAJORITY { &low } else { &high };
                        mode.sample(&mut r).max(0.0)
                    }
                    WeightDist::Exploded => {
                        if r.random::<f64>() < MAJORITY {
                            r.random_range(0.0..0.2)
                        } else {
                            r.random_range(0.8..1.0)
                        }
                    }
                })
                .collect()
        })
        .collect();
    let mut d = vec![0.0; k * k];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            d[i * k + j] = v;
            d[j * k + i] = v;
        }
    }
    LossMatrix::new(k, d, true)
}
