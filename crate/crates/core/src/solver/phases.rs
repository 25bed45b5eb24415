//! Shotgun sampling and fuzzy concatenation.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::loss::order_cost;
use crate::rng;

use super::counts::{CountMode, PairCounts};
use super::sampling::{sample_route, RouteContext};
use super::SolverParams;

/// Samples are produced in chunks of this size; only the running top-k is
/// kept between chunks.
const CHUNK: usize = 2048;

const SHOTGUN_TAG: u64 = 0x5107;
const FUZZY_TAG: u64 = 0xF022;

/// A sampled route with its cost and sample index (the tie-breaker).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRoute {
    pub cost: f64,
    pub index: usize,
    pub route: Vec<usize>,
}

fn by_cost_then_index(a: &ScoredRoute, b: &ScoredRoute) -> Ordering {
    a.cost.total_cmp(&b.cost).then(a.index.cmp(&b.index))
}

/// Draws `n` routes (substream per sample index) and returns the best `keep`
/// in ascending cost order. Identical for any thread count.
fn sample_top(
    ctx: &RouteContext<'_>,
    n: usize,
    keep: usize,
    mu: f64,
    counts: Option<&PairCounts>,
    seed: u64,
    tags: [u64; 2],
) -> Vec<ScoredRoute> {
    let mut best: Vec<ScoredRoute> = Vec::with_capacity(keep + CHUNK);
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let batch: Vec<ScoredRoute> = (start..end)
            .into_par_iter()
            .map(|index| {
                let mut r = rng::substream(seed, &[tags[0], tags[1], index as u64]);
                let route = sample_route(ctx, mu, counts, &mut r);
                assert!(crate::perm::is_permutation(&route), "sampler produced an invalid route");
                ScoredRoute {
                    cost: order_cost(ctx.loss, &route),
                    index,
                    route,
                }
            })
            .collect();
        best.extend(batch);
        best.sort_by(by_cost_then_index);
        best.truncate(keep);
        start = end;
    }
    best
}

#[derive(Debug, Clone)]
pub struct ShotgunOutcome {
    /// The `k_shot` cheapest routes, best first.
    pub routes: Vec<ScoredRoute>,
    pub counts: PairCounts,
}

pub fn shotgun_phase(ctx: &RouteContext<'_>, params: &SolverParams) -> ShotgunOutcome {
    let routes = sample_top(
        ctx,
        params.n_shot,
        params.k_shot.min(params.n_shot),
        params.mu0,
        None,
        params.seed,
        [SHOTGUN_TAG, 0],
    );
    let mut counts = PairCounts::new(ctx.loss.k());
    for r in &routes {
        counts.add_route(&r.route);
    }
    ShotgunOutcome { routes, counts }
}

/// `max(μ0 − σ t, μ_min)`.
pub fn mu_at(params: &SolverParams, t: usize) -> f64 {
    (params.mu0 - params.sigma * t as f64).max(params.mu_min)
}

/// `max(k_prev − z t, k_min)`; the keep count carries over between rounds.
pub fn next_k_cate(prev: usize, params: &SolverParams, t: usize) -> usize {
    prev.saturating_sub(params.z * t).max(params.k_min)
}

#[derive(Debug, Clone)]
pub struct FuzzyOutcome {
    pub best: Vec<usize>,
    pub best_cost: f64,
    pub cost_trace: Vec<f64>,
    pub iterations_run: usize,
    pub mode_switches: usize,
    pub final_mode: CountMode,
    pub counts: PairCounts,
}

/// Count-biased resampling rounds. Keeps the best route seen since the
/// shotgun phase; switches count mode after `stagnation_rounds` rounds
/// without improvement and stops once three consecutive modes stagnate.
pub fn fuzzy_phase(ctx: &RouteContext<'_>, params: &SolverParams, init: ShotgunOutcome) -> FuzzyOutcome {
    let ShotgunOutcome { routes, mut counts } = init;
    let first = routes.into_iter().next().expect("shotgun keeps at least one route");
    let (mut best, mut best_cost) = (first.route, first.cost);
    let mut trace = vec![best_cost];

    let mut k_cate = params.k_cate0;
    let mut mode = CountMode::Normal;
    let (mut stale, mut stale_modes, mut switches, mut iterations) = (0, 0, 0, 0);
    for t in 1..=params.t_max {
        let mu = mu_at(params, t);
        k_cate = next_k_cate(k_cate, params, t);
        let kept = sample_top(
            ctx,
            params.n_cate,
            k_cate.min(params.n_cate),
            mu,
            Some(&counts),
            params.seed,
            [FUZZY_TAG, t as u64],
        );
        for r in &kept {
            counts.add_route(&r.route);
        }
        counts.apply_mode(mode);
        iterations = t;

        match kept.into_iter().next() {
            Some(top) if top.cost < best_cost => {
                best = top.route;
                best_cost = top.cost;
                stale = 0;
                stale_modes = 0;
            }
            _ => stale += 1,
        }
        trace.push(best_cost);

        if stale >= params.stagnation_rounds {
            stale = 0;
            stale_modes += 1;
            if stale_modes >= 3 {
                break;
            }
            mode = mode.next();
            switches += 1;
        }
    }
    FuzzyOutcome {
        best,
        best_cost,
        cost_trace: trace,
        iterations_run: iterations,
        mode_switches: switches,
        final_mode: mode,
        counts,
    }
}
