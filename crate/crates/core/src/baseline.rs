//! Reference orderings: natural, random, greedy nearest-neighbour, open-path
//! 2-opt and 3-opt local search, and an exact Held–Karp oracle for small K.
//!
//! Local search runs on a cycle with one extra dummy node at zero distance
//! from everything. Removing the dummy from a tour leaves an open path with
//! the same cost, so endpoint-changing moves come for free.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::loss::{order_cost, LossMatrix};
use crate::perm::Permutation;
use crate::rng;

/// Largest K accepted by [`exact_optimum`].
pub const EXACT_MAX_K: usize = 13;

const IMPROVE_EPS: f64 = 1e-12;

pub fn natural_order(k: usize) -> Permutation {
    Permutation::identity(k)
}

/// Fisher–Yates shuffle of `0..k`.
pub fn random_order(k: usize, seed: u64) -> Permutation {
    let mut v: Vec<usize> = (0..k).collect();
    v.shuffle(&mut rng::from_seed(seed));
    Permutation::from_vec_unchecked(v)
}

/// Nearest-neighbour construction from `start`; ties go to the lower index.
pub fn greedy_order(loss: &LossMatrix, start: usize) -> Result<Permutation> {
    let k = loss.k();
    if start >= k {
        return Err(Error::invalid(format!("start {start} out of range (K={k})")));
    }
    let mut visited = vec![false; k];
    let mut order = Vec::with_capacity(k);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    for _ in 1..k {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, &seen) in visited.iter().enumerate() {
            if !seen {
                let d = loss.sym(cur, j);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
        }
        visited[best] = true;
        order.push(best);
        cur = best;
    }
    Ok(Permutation::from_vec_unchecked(order))
}

/// Best nearest-neighbour path over every start.
pub fn greedy_best(loss: &LossMatrix) -> Permutation {
    (0..loss.k())
        .map(|s| {
            let p = greedy_order(loss, s).expect("start in range");
            (order_cost(loss, p.as_slice()), p)
        })
        .fold(None, |best: Option<(f64, Permutation)>, cand| match best {
            Some(b) if b.0 <= cand.0 => Some(b),
            _ => Some(cand),
        })
        .map(|(_, p)| p)
        .unwrap_or_else(|| Permutation::identity(0))
}

struct DummyCycle<'a> {
    loss: &'a LossMatrix,
    dummy: usize,
}

impl DummyCycle<'_> {
    #[inline]
    fn d(&self, a: usize, b: usize) -> f64 {
        if a == self.dummy || b == self.dummy {
            0.0
        } else {
            self.loss.sym(a, b)
        }
    }

    fn tour(&self, init: &Permutation) -> Vec<usize> {
        std::iter::once(self.dummy).chain(init.as_slice().iter().copied()).collect()
    }

    fn path(&self, tour: &[usize]) -> Permutation {
        let at = tour.iter().position(|&c| c == self.dummy).expect("dummy present");
        let order = tour[at + 1..].iter().chain(&tour[..at]).copied().collect();
        Permutation::from_vec_unchecked(order)
    }
}

fn check_init(loss: &LossMatrix, init: &Permutation) -> Result<()> {
    if init.len() != loss.k() {
        return Err(Error::invalid(format!(
            "initial path has {} codewords, matrix has {}",
            init.len(),
            loss.k()
        )));
    }
    Ok(())
}

/// First-improvement 2-opt on the open path. Stops at a local optimum or
/// after `max_passes` full scans.
pub fn two_opt(loss: &LossMatrix, init: &Permutation, max_passes: usize) -> Result<Permutation> {
    check_init(loss, init)?;
    if loss.k() < 3 {
        return Ok(init.clone());
    }
    let cyc = DummyCycle { loss, dummy: loss.k() };
    let mut t = cyc.tour(init);
    let n = t.len();
    for _ in 0..max_passes {
        let mut improved = false;
        for i in 0..n - 2 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b, c, d) = (t[i], t[i + 1], t[j], t[(j + 1) % n]);
                let delta = cyc.d(a, c) + cyc.d(b, d) - cyc.d(a, b) - cyc.d(c, d);
                if delta < -IMPROVE_EPS {
                    t[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(cyc.path(&t))
}

/// First-improvement 3-opt (segment reversals and the pure segment exchange)
/// on the open path.
pub fn three_opt(loss: &LossMatrix, init: &Permutation, max_passes: usize) -> Result<Permutation> {
    check_init(loss, init)?;
    if loss.k() < 3 {
        return Ok(init.clone());
    }
    let cyc = DummyCycle { loss, dummy: loss.k() };
    let mut t = cyc.tour(init);
    let n = t.len();
    for _ in 0..max_passes {
        let mut improved = false;
        for i in 0..n {
            for j in i + 2..n {
                let k_end = n + usize::from(i > 0);
                for k in j + 2..k_end {
                    let a = t[(i + n - 1) % n];
                    let b = t[i];
                    let c = t[j - 1];
                    let d = t[j];
                    let e = t[k - 1];
                    let f = t[k % n];
                    let d0 = cyc.d(a, b) + cyc.d(c, d) + cyc.d(e, f);
                    let d1 = cyc.d(a, c) + cyc.d(b, d) + cyc.d(e, f);
                    let d2 = cyc.d(a, b) + cyc.d(c, e) + cyc.d(d, f);
                    let d3 = cyc.d(a, d) + cyc.d(e, b) + cyc.d(c, f);
                    let d4 = cyc.d(f, b) + cyc.d(c, d) + cyc.d(e, a);
                    if d0 - d1 > IMPROVE_EPS {
                        t[i..j].reverse();
                    } else if d0 - d2 > IMPROVE_EPS {
                        t[j..k].reverse();
                    } else if d0 - d4 > IMPROVE_EPS {
                        t[i..k].reverse();
                    } else if d0 - d3 > IMPROVE_EPS {
                        t[i..k].rotate_left(j - i);
                    } else {
                        continue;
                    }
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
        // Keep the dummy at index 0 so the final clean pass scans the same
        // arrangement a rerun on the output would start from.
        let at = t.iter().position(|&c| c == cyc.dummy).expect("dummy present");
        t.rotate_left(at);
    }
    Ok(cyc.path(&t))
}

/// Minimum-cost open Hamiltonian path by Held–Karp over subsets with free
/// endpoints. Refuses K above [`EXACT_MAX_K`].
pub fn exact_optimum(loss: &LossMatrix) -> Result<(Permutation, f64)> {
    let k = loss.k();
    if k > EXACT_MAX_K {
        return Err(Error::invalid(format!(
            "exact optimum limited to K <= {EXACT_MAX_K}, got {k}"
        )));
    }
    if k <= 1 {
        return Ok((Permutation::identity(k), 0.0));
    }
    let full = (1usize << k) - 1;
    let mut cost = vec![f64::INFINITY; (full + 1) * k];
    let mut parent = vec![usize::MAX; (full + 1) * k];
    for j in 0..k {
        cost[(1 << j) * k + j] = 0.0;
    }
    for mask in 1..=full {
        for j in 0..k {
            let cur = cost[mask * k + j];
            if mask & (1 << j) == 0 || !cur.is_finite() {
                continue;
            }
            for next in 0..k {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nm = mask | (1 << next);
                let c = cur + loss.sym(j, next);
                if c < cost[nm * k + next] {
                    cost[nm * k + next] = c;
                    parent[nm * k + next] = j;
                }
            }
        }
    }
    let (mut end, mut best) = (0, f64::INFINITY);
    for j in 0..k {
        if cost[full * k + j] < best {
            best = cost[full * k + j];
            end = j;
        }
    }
    let mut order = Vec::with_capacity(k);
    let mut mask = full;
    let mut cur = end;
    loop {
        order.push(cur);
        let p = parent[mask * k + cur];
        mask &= !(1 << cur);
        if p == usize::MAX {
            break;
        }
        cur = p;
    }
    order.reverse();
    let pi = Permutation::from_vec_unchecked(order);
    let c = order_cost(loss, pi.as_slice());
    Ok((pi, c))
}
