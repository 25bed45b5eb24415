#![allow(dead_code)]

use risia::loss::{synth_matrix, LossMatrix, WeightDist};
use risia::solver::SolverParams;

pub const DISTS: [WeightDist; 3] = [WeightDist::Uniform, WeightDist::Clustered, WeightDist::Exploded];

pub fn dist(i: usize) -> WeightDist {
    DISTS[i % DISTS.len()]
}

pub fn synth(i: usize, k: usize, seed: u64) -> LossMatrix {
    synth_matrix(dist(i), k, seed).expect("valid synthetic matrix")
}

/// Row-major K×K matrix with zero diagonal from a flat value list.
pub fn raw_matrix(k: usize, values: &[f64]) -> LossMatrix {
    let mut d = vec![0.0; k * k];
    let mut it = values.iter().cycle();
    for i in 0..k {
        for j in 0..k {
            if i != j {
                d[i * k + j] = *it.next().expect("nonempty values");
            }
        }
    }
    LossMatrix::new(k, d, false).expect("valid matrix")
}

/// Small budgets so property tests stay fast.
pub fn quick_params(k: usize, seed: u64) -> SolverParams {
    SolverParams {
        n_shot: 40,
        k_shot: 8,
        n_cate: 60,
        k_cate0: 20,
        k_min: 10,
        t_max: 3,
        ..SolverParams::for_k(k)
    }
    .with_seed(seed)
}

/// Open-path cost by direct summation over the symmetrized weights.
pub fn direct_path_cost(loss: &LossMatrix, order: &[usize]) -> f64 {
    let mut total = 0.0;
    for w in order.windows(2) {
        total += (loss.get(w[0], w[1]) + loss.get(w[1], w[0])) / 2.0;
    }
    total
}

/// Expected single-bit-error loss by a double loop over all label pairs.
pub fn brute_expected_loss(loss: &LossMatrix, label_of: &[usize], q: f64) -> f64 {
    let k = label_of.len();
    let mut sum = 0.0;
    for i in 0..k {
        for j in 0..k {
            if (label_of[i] ^ label_of[j]).count_ones() == 1 {
                sum += loss.get(i, j);
            }
        }
    }
    q * sum / k as f64
}

/// Minimum open-path cost by enumerating every ordering (K ≤ 9).
pub fn brute_optimum(loss: &LossMatrix) -> f64 {
    fn rec(loss: &LossMatrix, path: &mut Vec<usize>, used: &mut [bool], acc: f64, best: &mut f64) {
        let k = used.len();
        if acc >= *best {
            return;
        }
        if path.len() == k {
            *best = acc;
            return;
        }
        for j in 0..k {
            if !used[j] {
                let add = path.last().map_or(0.0, |&p| loss.sym(p, j));
                used[j] = true;
                path.push(j);
                rec(loss, path, used, acc + add, best);
                path.pop();
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(loss, &mut Vec::new(), &mut vec![false; loss.k()], 0.0, &mut best);
    best
}
