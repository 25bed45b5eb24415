use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordering of the codeword indices `0..K`. `pi[k]` is the codeword
/// placed at path position `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        if !is_permutation(&order) {
            return Err(Error::invalid(format!(
                "not a permutation of 0..{}: {:?}",
                order.len(),
                order
            )));
        }
        Ok(Permutation(order))
    }

    /// Wraps an ordering that the caller guarantees is valid. Checked in debug builds.
    pub(crate) fn from_vec_unchecked(order: Vec<usize>) -> Self {
        debug_assert!(is_permutation(&order), "invalid permutation {order:?}");
        Permutation(order)
    }

    pub fn identity(k: usize) -> Self {
        Permutation((0..k).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.0.clone();
        v.reverse();
        Permutation(v)
    }

    /// `inv[pi[k]] = k`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.0.len()];
        for (pos, &c) in self.0.iter().enumerate() {
            inv[c] = pos;
        }
        inv
    }
}

impl std::ops::Index<usize> for Permutation {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.0
    }
}

pub fn is_permutation(order: &[usize]) -> bool {
    let mut seen = vec![false; order.len()];
    for &c in order {
        if c >= order.len() || seen[c] {
            return false;
        }
        seen[c] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        assert!(Permutation::new(vec![2, 0, 1]).is_ok());
        assert!(Permutation::new(vec![]).is_ok());
    }

    #[test]
    fn json_form_is_a_plain_array() {
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(serde_json::to_string(&p).unwrap(), "[2,0,1]");
        let back: Permutation = serde_json::from_str("[2,0,1]").unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Permutation>("[1,1]").is_err());
    }

    #[test]
    fn inverse_maps_codeword_to_position() {
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(p.inverse(), vec![1, 2, 0]);
    }
}
