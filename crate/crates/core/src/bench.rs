//! Monte Carlo campaigns: every grid point × run gets a fresh instance with a
//! seed derived from the master seed, every solver labels it, and the
//! expected single-bit-error loss is averaged per BSC SNR.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{assign_from_path, natural_assignment, random_assignment, Assignment};
use crate::baseline::{
    exact_optimum, greedy_best, greedy_order, natural_order, random_order, three_opt, two_opt, EXACT_MAX_K,
};
use crate::codebook::Instance;
use crate::error::{Error, Result};
use crate::loss::{ber_from_snr_db, build_loss_matrix, expected_loss, path_cost, synth_matrix, LossMatrix, WeightDist};
use crate::perm::Permutation;
use crate::rng::derive_seed;
use crate::solver::{solve, SolverParams};

const INSTANCE_TAG: u64 = 0xB0;
const SOLVER_TAG: u64 = 0xB1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SolverKind {
    /// The three-phase heuristic.
    Tsp,
    Natural,
    Random,
    Greedy,
    GreedyBest,
    TwoOpt,
    ThreeOpt,
    Exact,
}

impl SolverKind {
    pub const ALL: [SolverKind; 8] = [
        SolverKind::Tsp,
        SolverKind::Natural,
        SolverKind::Random,
        SolverKind::Greedy,
        SolverKind::GreedyBest,
        SolverKind::TwoOpt,
        SolverKind::ThreeOpt,
        SolverKind::Exact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Tsp => "tsp",
            SolverKind::Natural => "natural",
            SolverKind::Random => "random",
            SolverKind::Greedy => "greedy",
            SolverKind::GreedyBest => "greedy-best",
            SolverKind::TwoOpt => "two-opt",
            SolverKind::ThreeOpt => "three-opt",
            SolverKind::Exact => "exact",
        }
    }

    fn tag(self) -> u64 {
        SolverKind::ALL.iter().position(|&s| s == self).expect("listed") as u64
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.to_ascii_lowercase().as_str() {
            "tsp" | "proposed" | "three-phase" => SolverKind::Tsp,
            "natural" => SolverKind::Natural,
            "random" => SolverKind::Random,
            "greedy" => SolverKind::Greedy,
            "greedy-best" => SolverKind::GreedyBest,
            "two-opt" | "2-opt" | "2opt" => SolverKind::TwoOpt,
            "three-opt" | "3-opt" | "3opt" => SolverKind::ThreeOpt,
            "exact" | "held-karp" => SolverKind::Exact,
            other => return Err(Error::invalid(format!("unknown solver '{other}'"))),
        };
        Ok(kind)
    }
}

impl TryFrom<String> for SolverKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SolverKind> for String {
    fn from(k: SolverKind) -> String {
        k.name().to_string()
    }
}

/// Where loss matrices come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixSource {
    /// Generated MISO-RIS channels and steering codebook.
    #[default]
    Miso,
    Uniform,
    Clustered,
    Exploded,
}

impl MatrixSource {
    fn synthetic(self) -> Option<WeightDist> {
        match self {
            MatrixSource::Miso => None,
            MatrixSource::Uniform => Some(WeightDist::Uniform),
            MatrixSource::Clustered => Some(WeightDist::Clustered),
            MatrixSource::Exploded => Some(WeightDist::Exploded),
        }
    }
}

/// Outcome of one solver on one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Labelling {
    pub path: Permutation,
    pub assignment: Assignment,
    pub time_ms: f64,
}

/// The ordering `kind` produces on a symmetrized matrix. `natural` and
/// `random` give the identity and a seeded shuffle.
pub fn solver_path(kind: SolverKind, sym: &LossMatrix, params: &SolverParams, seed: u64) -> Result<Permutation> {
    let k = sym.k();
    match kind {
        SolverKind::Natural => Ok(natural_order(k)),
        SolverKind::Random => Ok(random_order(k, seed)),
        SolverKind::Tsp => Ok(solve(sym, &params.clone().with_seed(seed))?.best_pi),
        SolverKind::Greedy => greedy_order(sym, 0),
        SolverKind::GreedyBest => Ok(greedy_best(sym)),
        SolverKind::TwoOpt => two_opt(sym, &random_order(k, seed), usize::MAX),
        SolverKind::ThreeOpt => three_opt(sym, &random_order(k, seed), usize::MAX),
        SolverKind::Exact => Ok(exact_optimum(sym)?.0),
    }
}

/// Runs `kind` on `loss`. Path solvers label along their path with Gray
/// codes; `natural` and `random` assign labels directly and report the path
/// their labels induce.
pub fn run_solver(kind: SolverKind, loss: &LossMatrix, params: &SolverParams, seed: u64) -> Result<Labelling> {
    let started = Instant::now();
    let sym = loss.symmetrize_cow();
    let assignment = match kind {
        SolverKind::Natural => natural_assignment(loss.k())?,
        SolverKind::Random => random_assignment(loss.k(), seed)?,
        _ => assign_from_path(&solver_path(kind, &sym, params, seed)?)?,
    };
    Ok(Labelling {
        path: assignment.gray_path(),
        assignment,
        time_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

fn default_source() -> MatrixSource {
    MatrixSource::Miso
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub experiment: String,
    #[serde(rename = "K")]
    pub k: Vec<usize>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    #[serde(rename = "M")]
    pub m: Vec<usize>,
    pub b: Vec<u32>,
    pub bsc_snr_db: Vec<f64>,
    pub solvers: Vec<SolverKind>,
    pub runs: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_source")]
    pub source: MatrixSource,
    /// Fields overriding the per-K solver defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver_params: Option<serde_json::Map<String, serde_json::Value>>,
    /// When false, wall times are recorded as 0 so the CSV is reproducible.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

impl CampaignConfig {
    /// CI-sized campaign: K=64, N=64, M=8, b=4, 30 runs.
    pub fn desk(experiment: &str) -> Self {
        CampaignConfig {
            experiment: experiment.to_string(),
            k: vec![64],
            n: vec![64],
            m: vec![8],
            b: vec![4],
            bsc_snr_db: vec![0.0, 4.0, 8.0, 12.0],
            solvers: vec![SolverKind::Tsp, SolverKind::Random, SolverKind::Natural],
            runs: 30,
            seed: 0,
            output_dir: PathBuf::from("results"),
            source: MatrixSource::Miso,
            solver_params: None,
            record_timing: true,
        }
    }

    /// Full-size simulation defaults: K=256, N=256, M=16, b=8, 100 runs.
    pub fn paper_scale(experiment: &str) -> Self {
        CampaignConfig {
            k: vec![256],
            n: vec![256],
            m: vec![16],
            b: vec![8],
            runs: 100,
            ..CampaignConfig::desk(experiment)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = [
            ("K", self.k.is_empty()),
            ("N", self.n.is_empty()),
            ("M", self.m.is_empty()),
            ("b", self.b.is_empty()),
            ("bsc_snr_db", self.bsc_snr_db.is_empty()),
            ("solvers", self.solvers.is_empty()),
        ];
        if let Some((name, _)) = nonempty.iter().find(|(_, empty)| *empty) {
            return Err(Error::invalid(format!("campaign grid '{name}' is empty")));
        }
        if self.runs == 0 {
            return Err(Error::invalid("runs must be at least 1"));
        }
        if self.bsc_snr_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("bsc_snr_db values must be finite"));
        }
        for &k in &self.k {
            if k < 2 || !k.is_power_of_two() {
                return Err(Error::invalid(format!("K = {k} must be a power of two >= 2")));
            }
            if self.solvers.contains(&SolverKind::Exact) && k > EXACT_MAX_K {
                return Err(Error::invalid(format!("exact solver supports K <= {EXACT_MAX_K}, got {k}")));
            }
            if self.solvers.contains(&SolverKind::Tsp) {
                self.params_for(k)?.validate(k)?;
            }
        }
        Ok(())
    }

    pub fn params_for(&self, k: usize) -> Result<SolverParams> {
        let base = SolverParams::for_k(k);
        match &self.solver_params {
            Some(patch) => base.patched(patch),
            None => Ok(base),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            what: "campaign config",
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CampaignConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Default result path, `<output_dir>/<experiment>.csv`.
    pub fn output_path(&self) -> PathBuf {
        self.output_dir.join(format!("{}.csv", self.experiment))
    }

    fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &k in &self.k {
            for &n in &self.n {
                for &m in &self.m {
                    for &b in &self.b {
                        out.push(GridPoint { k, n, m, b });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct GridPoint {
    k: usize,
    n: usize,
    m: usize,
    b: u32,
}

/// Aggregate over runs for one (grid point, SNR, solver).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub b: u32,
    pub bsc_snr_db: f64,
    pub solver: SolverKind,
    pub mean_loss: f64,
    pub std_loss: f64,
    pub mean_path_cost: f64,
    pub mean_time_ms: f64,
    pub q: f64,
}

pub const CSV_HEADER: &str =
    "experiment,K,N,M,b,bsc_snr_db,solver,mean_loss,std_loss,mean_path_cost,mean_time_ms,q";

impl ResultRow {
    /// One CSV line; floats in shortest round-trip form.
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.k,
            self.n,
            self.m,
            self.b,
            self.bsc_snr_db,
            self.solver,
            self.mean_loss,
            self.std_loss,
            self.mean_path_cost,
            self.mean_time_ms,
            self.q
        )
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let bad = |m: String| Error::Format {
            what: "result row",
            message: m,
        };
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 12 {
            return Err(bad(format!("expected 12 fields, got {}", f.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("'{s}': {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("'{s}': {e}")));
        Ok(ResultRow {
            experiment: f[0].to_string(),
            k: int(f[1])?,
            n: int(f[2])?,
            m: int(f[3])?,
            b: int(f[4])? as u32,
            bsc_snr_db: real(f[5])?,
            solver: f[6].parse()?,
            mean_loss: real(f[7])?,
            std_loss: real(f[8])?,
            mean_path_cost: real(f[9])?,
            mean_time_ms: real(f[10])?,
            q: real(f[11])?,
        })
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == CSV_HEADER => {}
        _ => {
            return Err(Error::Format {
                what: "result CSV",
                message: "missing or unexpected header".into(),
            })
        }
    }
    lines.filter(|l| !l.trim().is_empty()).map(ResultRow::parse_csv_line).collect()
}

/// Seed of the instance for one grid point and run; independent of solvers.
fn instance_seed(master: u64, g: GridPoint, run: usize) -> u64 {
    derive_seed(master, &[INSTANCE_TAG, g.k as u64, g.n as u64, g.m as u64, g.b as u64, run as u64])
}

fn matrix_for(cfg: &CampaignConfig, g: GridPoint, seed: u64) -> Result<LossMatrix> {
    match cfg.source.synthetic() {
        Some(dist) => synth_matrix(dist, g.k, seed),
        None => {
            let inst = Instance::generate(g.k, g.n, g.m, g.b, seed)?;
            build_loss_matrix(&inst.channels, &inst.codebook, false)
        }
    }
}

/// Per-run measurements: for each solver, losses per SNR, path cost, time.
struct RunResult {
    per_solver: Vec<(Vec<f64>, f64, f64)>,
}

fn run_once(cfg: &CampaignConfig, g: GridPoint, run: usize, qs: &[f64], params: &SolverParams) -> Result<RunResult> {
    let seed = instance_seed(cfg.seed, g, run);
    let loss = matrix_for(cfg, g, seed)?;
    let sym = loss.symmetrize();
    let mut per_solver = Vec::with_capacity(cfg.solvers.len());
    for &kind in &cfg.solvers {
        let lab = run_solver(kind, &loss, params, derive_seed(seed, &[SOLVER_TAG, kind.tag()]))?;
        let losses = qs
            .iter()
            .map(|&q| expected_loss(&loss, &lab.assignment, q))
            .collect::<Result<Vec<_>>>()?;
        let cost = path_cost(&sym, &lab.path)?;
        let time = if cfg.record_timing { lab.time_ms } else { 0.0 };
        per_solver.push((losses, cost, time));
    }
    Ok(RunResult { per_solver })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs the whole campaign on the current rayon pool. Rows are ordered by
/// grid point, then SNR, then solver (config order); results do not depend on
/// the number of worker threads.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let qs: Vec<f64> = cfg.bsc_snr_db.iter().map(|&s| ber_from_snr_db(s)).collect();
    let mut rows = Vec::new();
    for g in cfg.grid() {
        let params = cfg.params_for(g.k)?;
        let runs: Vec<RunResult> = (0..cfg.runs)
            .into_par_iter()
            .map(|run| run_once(cfg, g, run, &qs, &params))
            .collect::<Result<_>>()?;
        for (si, &snr) in cfg.bsc_snr_db.iter().enumerate() {
            for (vi, &solver) in cfg.solvers.iter().enumerate() {
                let losses: Vec<f64> = runs.iter().map(|r| r.per_solver[vi].0[si]).collect();
                let costs: Vec<f64> = runs.iter().map(|r| r.per_solver[vi].1).collect();
                let times: Vec<f64> = runs.iter().map(|r| r.per_solver[vi].2).collect();
                let (mean_loss, std_loss) = mean_std(&losses);
                rows.push(ResultRow {
                    experiment: cfg.experiment.clone(),
                    k: g.k,
                    n: g.n,
                    m: g.m,
                    b: g.b,
                    bsc_snr_db: snr,
                    solver,
                    mean_loss,
                    std_loss,
                    mean_path_cost: mean_std(&costs).0,
                    mean_time_ms: mean_std(&times).0,
                    q: qs[si],
                });
            }
        }
    }
    Ok(rows)
}

/// Runs the campaign on a dedicated pool of `threads` workers (0 = rayon default).
pub fn run_campaign_with_threads(cfg: &CampaignConfig, threads: usize) -> Result<Vec<ResultRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| run_campaign(cfg))
}

pub fn write_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, rows_to_csv(rows)).map_err(|e| Error::io(path, e))
}
