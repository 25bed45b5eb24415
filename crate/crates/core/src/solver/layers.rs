use crate::loss::LossMatrix;

use super::{DistType, SolverParams};

/// Three concentric neighbour rings per codeword, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborLayers {
    layers: Vec<[Vec<usize>; 3]>,
}

impl NeighborLayers {
    pub fn layer(&self, i: usize, which: usize) -> &[usize] {
        &self.layers[i][which]
    }

    pub fn k(&self) -> usize {
        self.layers.len()
    }
}

/// Sorts each row of the symmetrized matrix (ties by index) and slices off
/// `l1`, `l2`, `l3` neighbours. Layers are truncated when fewer remain.
pub fn build_layers(loss: &LossMatrix, params: &SolverParams) -> NeighborLayers {
    build_layers_sized(loss, [params.l1, params.l2, params.l3])
}

pub fn build_layers_sized(loss: &LossMatrix, sizes: [usize; 3]) -> NeighborLayers {
    let k = loss.k();
    let layers = (0..k)
        .map(|i| {
            let mut others: Vec<usize> = (0..k).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| loss.sym(i, a).total_cmp(&loss.sym(i, b)).then(a.cmp(&b)));
            let mut rest = others.as_slice();
            let mut take = |n: usize| {
                let n = n.min(rest.len());
                let (head, tail) = rest.split_at(n);
                rest = tail;
                head.to_vec()
            };
            [take(sizes[0]), take(sizes[1]), take(sizes[2])]
        })
        .collect();
    NeighborLayers { layers }
}

/// Next-hop candidates from `current`. Type I takes the first layer with an
/// unvisited member, falling back to every unvisited codeword; Type II always
/// takes every unvisited codeword.
pub fn candidate_set(
    current: usize,
    visited: &[bool],
    layers: &NeighborLayers,
    dist: DistType,
) -> Vec<usize> {
    if dist == DistType::TypeI {
        for ring in &layers.layers[current] {
            let out: Vec<usize> = ring.iter().copied().filter(|&j| !visited[j]).collect();
            if !out.is_empty() {
                return out;
            }
        }
    }
    (0..visited.len()).filter(|&j| !visited[j]).collect()
}
