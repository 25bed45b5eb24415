//! Three-phase heuristic for the open-path TSP over a loss matrix:
//! neighbour-layer provisioning, shotgun route sampling, and fuzzy
//! concatenation guided by pair frequencies.

mod counts;
mod dip;
mod layers;
mod phases;
mod sampling;

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baseline::{exact_optimum, EXACT_MAX_K};
use crate::error::{Error, Result};
use crate::loss::{order_cost, LossMatrix};
use crate::perm::Permutation;

pub use counts::{CountMode, PairCounts};
pub use dip::{classify_distribution, dip_critical_value, dip_statistic};
pub use layers::{build_layers, build_layers_sized, candidate_set, NeighborLayers};
pub use phases::{fuzzy_phase, mu_at, next_k_cate, shotgun_phase, FuzzyOutcome, ScoredRoute, ShotgunOutcome};
pub use sampling::{reweight_by_counts, sample_route, selection_probs, RouteContext, WEIGHT_EPS};

/// Shape of the edge-weight distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistType {
    /// Unimodal: candidates restricted to neighbour layers.
    TypeI,
    /// Multimodal or irregular: every unvisited codeword is a candidate.
    TypeII,
}

/// Largest exhaustive tail we allow (f! orderings per route).
pub const MAX_TAIL: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub l1: usize,
    pub l2: usize,
    pub l3: usize,
    pub f: usize,
    pub n_shot: usize,
    pub k_shot: usize,
    pub n_cate: usize,
    pub k_cate0: usize,
    pub mu0: f64,
    pub sigma: f64,
    pub mu_min: f64,
    pub z: usize,
    pub k_min: usize,
    #[serde(rename = "T")]
    pub t_max: usize,
    pub seed: u64,
    pub stagnation_rounds: usize,
}

impl SolverParams {
    /// Default schedule for a K-codeword instance.
    ///
    /// Layer sizes are `round(√K)`, `round(2√K)`, `⌊K/3⌋`, then nudged so
    /// that `l1 < l2 < l3 < K` where K allows it. `k_shot` and `k_min` are
    /// clamped to `n_shot` and `k_cate0`.
    pub fn for_k(k: usize) -> Self {
        let kf = k as f64;
        let root = kf.sqrt();
        let (l1, l2, l3) = layer_sizes(k, root.round() as usize, (2.0 * root).round() as usize, k / 3);
        let n_shot = 3 * k * k;
        let k_cate0 = 4 * k;
        SolverParams {
            l1,
            l2,
            l3,
            f: 4,
            n_shot,
            k_shot: (3 * k).min(n_shot),
            n_cate: 200 * k,
            k_cate0,
            mu0: 0.5,
            sigma: 0.01,
            mu_min: 0.15,
            z: k / 20,
            k_min: 200.min(k_cate0),
            t_max: root.ceil() as usize,
            seed: 0,
            stagnation_rounds: 3,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Applies the bound clamps (`k_shot ≤ n_shot`, `k_min ≤ k_cate0`).
    pub fn clamped(mut self) -> Self {
        self.k_shot = self.k_shot.min(self.n_shot);
        self.k_min = self.k_min.min(self.k_cate0);
        self
    }

    /// Overwrites fields from a (partial) JSON object.
    pub fn patched(&self, patch: &serde_json::Map<String, serde_json::Value>) -> Result<Self> {
        let mut v = serde_json::to_value(self).expect("params serialize");
        let obj = v.as_object_mut().expect("params are an object");
        for (key, val) in patch {
            if !obj.contains_key(key) {
                return Err(Error::invalid(format!("unknown solver parameter '{key}'")));
            }
            obj.insert(key.clone(), val.clone());
        }
        serde_json::from_value(v).map_err(|e| Error::invalid(format!("solver parameters: {e}")))
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        let fail = |m: String| Err(Error::invalid(m));
        if self.f < 2 || self.f > MAX_TAIL {
            return fail(format!("f must be in 2..={MAX_TAIL}, got {}", self.f));
        }
        if !(self.mu_min > 0.0 && self.mu_min <= self.mu0 && self.mu0 <= 1.0) {
            return fail(format!("need 0 < mu_min <= mu0 <= 1, got {} / {}", self.mu_min, self.mu0));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return fail("sigma must be >= 0".into());
        }
        if self.n_shot == 0 || self.k_shot == 0 || self.k_shot > self.n_shot {
            return fail(format!("need 1 <= k_shot <= n_shot, got {} / {}", self.k_shot, self.n_shot));
        }
        if self.k_min == 0 || self.k_min > self.k_cate0 {
            return fail(format!("need 1 <= k_min <= k_cate0, got {} / {}", self.k_min, self.k_cate0));
        }
        if self.t_max > 0 && self.n_cate == 0 {
            return fail("n_cate must be positive when T > 0".into());
        }
        if self.stagnation_rounds == 0 {
            return fail("stagnation_rounds must be positive".into());
        }
        // Layers only matter once sampling is needed.
        if k > self.f + 1 && !(1 <= self.l1 && self.l1 < self.l2 && self.l2 < self.l3 && self.l3 < k) {
            return fail(format!(
                "need 1 <= l1 < l2 < l3 < K={k}, got {} {} {}",
                self.l1, self.l2, self.l3
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            what: "solver parameters",
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SolverParams::from_json(&text)
    }
}

fn layer_sizes(k: usize, l1: usize, l2: usize, l3: usize) -> (usize, usize, usize) {
    let cap = k.saturating_sub(1);
    let l3 = l3.max(l2 + 1).min(cap);
    let l2 = l2.max(l1 + 1).min(l3.saturating_sub(1));
    let l1 = l1.max(1).min(l2.saturating_sub(1));
    (l1, l2, l3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub best_pi: Permutation,
    pub best_cost: f64,
    pub cost_trace: Vec<f64>,
    pub iterations_run: usize,
    pub mode_switches: usize,
    pub wall_time_ms: f64,
}

impl SolverReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            what: "solver report",
            message: e.to_string(),
        })
    }

    /// Same report with the wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(mut self) -> Self {
        self.wall_time_ms = 0.0;
        self
    }
}

/// Runs the full heuristic. Instances with `K <= f + 1` are solved exactly.
pub fn solve(loss: &LossMatrix, params: &SolverParams) -> Result<SolverReport> {
    let started = Instant::now();
    let k = loss.k();
    if k < 2 {
        return Err(Error::invalid(format!("solver needs K >= 2, got {k}")));
    }
    let params = params.clone().clamped();
    params.validate(k)?;
    let sym = loss.symmetrize();

    if k <= params.f + 1 && k <= EXACT_MAX_K {
        let (pi, cost) = exact_optimum(&sym)?;
        return Ok(SolverReport {
            best_pi: pi,
            best_cost: cost,
            cost_trace: vec![cost],
            iterations_run: 0,
            mode_switches: 0,
            wall_time_ms: elapsed_ms(started),
        });
    }

    let dist = classify_distribution(&sym);
    let layers = build_layers(&sym, &params);
    let ctx = RouteContext {
        loss: &sym,
        layers: &layers,
        dist,
        tail: params.f,
    };
    let shot = shotgun_phase(&ctx, &params);
    let fuzzy = fuzzy_phase(&ctx, &params, shot);
    let best_cost = order_cost(&sym, &fuzzy.best);
    Ok(SolverReport {
        best_pi: Permutation::new(fuzzy.best)?,
        best_cost,
        cost_trace: fuzzy.cost_trace,
        iterations_run: fuzzy.iterations_run,
        mode_switches: fuzzy.mode_switches,
        wall_time_ms: elapsed_ms(started),
    })
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
