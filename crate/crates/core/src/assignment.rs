//! Binary index labels for codewords. A solved path becomes an assignment by
//! giving the codeword at path position `k` the k-th reflected Gray code, so
//! path neighbours are always one bit flip apart.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::perm::{is_permutation, Permutation};
use crate::rng;

/// Reflected binary Gray code of position `k` on `m` bits.
pub fn gray_code(k: u64, m: u32) -> Result<u64> {
    if m >= 64 || k >= (1u64 << m) {
        return Err(Error::invalid(format!("position {k} out of range for {m}-bit Gray code")));
    }
    Ok(k ^ (k >> 1))
}

/// `label` rendered as an `m`-digit binary string.
pub fn binary_label(label: usize, m: u32) -> String {
    format!("{label:0width$b}", width = m as usize)
}

fn log2_exact(k: usize) -> Result<u32> {
    if k == 0 || !k.is_power_of_two() {
        return Err(Error::invalid(format!("K = {k} is not a power of two")));
    }
    Ok(k.trailing_zeros())
}

/// Bijection from codeword index to binary label in `0..K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AssignmentFile", into = "AssignmentFile")]
pub struct Assignment {
    label_of: Vec<usize>,
}

impl Assignment {
    pub fn new(label_of: Vec<usize>) -> Result<Self> {
        log2_exact(label_of.len())?;
        if !is_permutation(&label_of) {
            return Err(Error::invalid("labels are not a bijection onto 0..K"));
        }
        Ok(Assignment { label_of })
    }

    pub fn k(&self) -> usize {
        self.label_of.len()
    }

    /// Label width, log2 K.
    pub fn bits(&self) -> u32 {
        self.label_of.len().trailing_zeros()
    }

    pub fn label(&self, codeword: usize) -> usize {
        self.label_of[codeword]
    }

    pub fn labels(&self) -> &[usize] {
        &self.label_of
    }

    /// Inverse map: `codeword_of_label()[label] = codeword`.
    pub fn codeword_of_label(&self) -> Vec<usize> {
        let mut inv = vec![0; self.label_of.len()];
        for (c, &l) in self.label_of.iter().enumerate() {
            inv[l] = c;
        }
        inv
    }

    /// The path that `assign_from_path` maps back to this assignment: position
    /// `k` holds the codeword labelled `gray(k)`.
    pub fn gray_path(&self) -> Permutation {
        let inv = self.codeword_of_label();
        let order = (0..inv.len()).map(|k| inv[k ^ (k >> 1)]).collect();
        Permutation::from_vec_unchecked(order)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("assignment serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            what: "assignment",
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Human-readable `label → codeword` table, labels in binary.
    pub fn report(&self) -> String {
        let m = self.bits();
        let inv = self.codeword_of_label();
        let mut s = String::new();
        for (label, c) in inv.iter().enumerate() {
            s.push_str(&format!("{} -> {c}\n", binary_label(label, m)));
        }
        s
    }
}

#[derive(Serialize, Deserialize)]
struct AssignmentFile {
    #[serde(rename = "K")]
    k: usize,
    labels: Vec<usize>,
}

impl TryFrom<AssignmentFile> for Assignment {
    type Error = Error;
    fn try_from(f: AssignmentFile) -> Result<Self> {
        if f.k != f.labels.len() {
            return Err(Error::invalid("assignment K disagrees with label count"));
        }
        Assignment::new(f.labels)
    }
}

impl From<Assignment> for AssignmentFile {
    fn from(a: Assignment) -> Self {
        AssignmentFile {
            k: a.label_of.len(),
            labels: a.label_of,
        }
    }
}

/// Labels codeword `pi[k]` with `gray(k)`.
pub fn assign_from_path(pi: &Permutation) -> Result<Assignment> {
    let m = log2_exact(pi.len())?;
    let mut label_of = vec![0; pi.len()];
    for (pos, &c) in pi.as_slice().iter().enumerate() {
        label_of[c] = gray_code(pos as u64, m)? as usize;
    }
    Ok(Assignment { label_of })
}

/// Codeword `i` keeps label `i`.
pub fn natural_assignment(k: usize) -> Result<Assignment> {
    log2_exact(k)?;
    Ok(Assignment {
        label_of: (0..k).collect(),
    })
}

/// Uniformly random bijection, reproducible from `seed`.
pub fn random_assignment(k: usize, seed: u64) -> Result<Assignment> {
    log2_exact(k)?;
    let mut label_of: Vec<usize> = (0..k).collect();
    label_of.shuffle(&mut rng::from_seed(seed));
    Ok(Assignment { label_of })
}

/// Codebook whose slot `label` holds the codeword carrying that label.
pub fn remap_codebook(book: &Codebook, assignment: &Assignment) -> Result<Codebook> {
    if book.k() != assignment.k() {
        return Err(Error::invalid(format!(
            "codebook has {} codewords, assignment {}",
            book.k(),
            assignment.k()
        )));
    }
    let inv = assignment.codeword_of_label();
    Codebook::new(inv.iter().map(|&c| book.get(c).clone()).collect())
}
