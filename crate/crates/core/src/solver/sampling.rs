//! Stochastic route construction shared by the shotgun and fuzzy phases.

use rand::Rng as _;

use crate::loss::LossMatrix;
use crate::rng::Rng;

use super::counts::PairCounts;
use super::layers::NeighborLayers;
use super::DistType;

/// Guards the historical weight against an all-zero denominator.
pub const WEIGHT_EPS: f64 = 1e-9;

/// Everything a route sampler reads; immutable for the whole solve.
#[derive(Clone, Copy)]
pub struct RouteContext<'a> {
    pub loss: &'a LossMatrix,
    pub layers: &'a NeighborLayers,
    pub dist: DistType,
    /// Remaining-codeword count at which the tail is enumerated exhaustively.
    pub tail: usize,
}

/// Selection probabilities `∝ 1 / (1 + (d(i,m) / (μ d̄))²)` over `omega`,
/// where `d̄` is the mean loss from `current` to the candidates. Uniform when
/// every candidate loss is zero.
pub fn selection_probs(current: usize, omega: &[usize], loss: &LossMatrix, mu: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(omega.len());
    selection_probs_into(current, omega, loss, mu, &mut p);
    p
}

fn selection_probs_into(current: usize, omega: &[usize], loss: &LossMatrix, mu: f64, p: &mut Vec<f64>) {
    p.clear();
    if omega.is_empty() {
        return;
    }
    let mean = omega.iter().map(|&m| loss.sym(current, m)).sum::<f64>() / omega.len() as f64;
    if mean == 0.0 {
        p.resize(omega.len(), 1.0 / omega.len() as f64);
        return;
    }
    let scale = mu * mean;
    p.extend(omega.iter().map(|&m| {
        let r = loss.sym(current, m) / scale;
        1.0 / (1.0 + r * r)
    }));
    normalize(p);
}

fn normalize(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
}

/// Multiplies `p` by the historical weight `δ(i,m) / (Σ_Ω δ(i,·) + ε)` and
/// renormalizes. Leaves `p` alone when no candidate pair has been seen.
pub fn reweight_by_counts(current: usize, omega: &[usize], counts: &PairCounts, p: &mut [f64]) {
    let seen: u64 = omega.iter().map(|&m| counts.get(current, m) as u64).sum();
    if seen == 0 {
        return;
    }
    let denom = seen as f64 + WEIGHT_EPS;
    for (pm, &m) in p.iter_mut().zip(omega) {
        *pm *= counts.get(current, m) as f64 / denom;
    }
    normalize(p);
}

/// Appends the cheapest ordering of `rest` after `route`, trying all
/// permutations in lexicographic order of the sorted remainder.
fn append_best_tail(loss: &LossMatrix, route: &mut Vec<usize>, mut rest: Vec<usize>) {
    if rest.is_empty() {
        return;
    }
    rest.sort_unstable();
    let prev = route.last().copied();
    let cost = |order: &[usize]| -> f64 {
        let link = prev.map_or(0.0, |p| loss.sym(p, order[0]));
        link + order.windows(2).map(|w| loss.sym(w[0], w[1])).sum::<f64>()
    };
    let mut best = rest.clone();
    let mut best_cost = cost(&rest);
    while next_permutation(&mut rest) {
        let c = cost(&rest);
        if c < best_cost {
            best_cost = c;
            best.copy_from_slice(&rest);
        }
    }
    route.extend(best);
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Builds one route: uniform random start, biased sequential sampling, and an
/// exhaustive search over the last `ctx.tail` codewords. With `counts`, each
/// step's probabilities are reweighted by historical pair frequency.
pub fn sample_route(ctx: &RouteContext<'_>, mu: f64, counts: Option<&PairCounts>, rng: &mut Rng) -> Vec<usize> {
    let k = ctx.loss.k();
    let mut route = Vec::with_capacity(k);
    if k <= ctx.tail {
        append_best_tail(ctx.loss, &mut route, (0..k).collect());
        return route;
    }
    let sym = ctx.loss.symmetrize_cow();
    let loss: &LossMatrix = &sym;
    let mut visited = vec![false; k];
    // Unvisited codewords; order is arbitrary but deterministic.
    let mut open: Vec<usize> = (0..k).collect();
    let mut slot: Vec<usize> = (0..k).collect();
    let mut omega = Vec::with_capacity(k);
    let mut weight = Vec::with_capacity(k);

    let mut cur = rng.random_range(0..k);
    take(&mut open, &mut slot, &mut visited, cur);
    route.push(cur);
    while open.len() > ctx.tail {
        let row = loss.row(cur);
        omega.clear();
        if ctx.dist == DistType::TypeI {
            for ring in 0..3 {
                omega.extend(ctx.layers.layer(cur, ring).iter().copied().filter(|&j| !visited[j]));
                if !omega.is_empty() {
                    break;
                }
            }
        }
        let cands: &[usize] = if omega.is_empty() { &open } else { &omega };
        cur = cands[draw_weighted(row, cands, mu, counts.map(|c| c.row(cur)), &mut weight, rng)];
        take(&mut open, &mut slot, &mut visited, cur);
        route.push(cur);
    }
    append_best_tail(loss, &mut route, open);
    debug_assert!(crate::perm::is_permutation(&route));
    route
}

fn take(open: &mut Vec<usize>, slot: &mut [usize], visited: &mut [bool], j: usize) {
    let at = slot[j];
    let last = *open.last().expect("open set nonempty");
    open.swap_remove(at);
    if last != j {
        slot[last] = at;
    }
    visited[j] = true;
}

/// Draws an index into `cands` with the same distribution as
/// [`selection_probs`] followed by [`reweight_by_counts`], without
/// normalizing (the normalizers cancel).
fn draw_weighted(
    row: &[f64],
    cands: &[usize],
    mu: f64,
    delta: Option<&[u32]>,
    weight: &mut Vec<f64>,
    rng: &mut Rng,
) -> usize {
    weight.clear();
    let mean = cands.iter().map(|&m| row[m]).sum::<f64>() / cands.len() as f64;
    if mean == 0.0 {
        weight.resize(cands.len(), 1.0);
    } else {
        let inv = 1.0 / (mu * mean);
        weight.extend(cands.iter().map(|&m| {
            let r = row[m] * inv;
            1.0 / (1.0 + r * r)
        }));
    }
    if let Some(delta) = delta {
        if cands.iter().any(|&m| delta[m] != 0) {
            for (w, &m) in weight.iter_mut().zip(cands) {
                *w *= delta[m] as f64;
            }
        }
    }
    let total: f64 = weight.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weight.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weight.iter().rposition(|&w| w > 0.0).unwrap_or(weight.len() - 1)
}
