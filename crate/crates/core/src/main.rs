use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use risia::assignment::{assign_from_path, Assignment};
use risia::bench::{self, CampaignConfig, SolverKind};
use risia::codebook::Instance;
use risia::loss::{ber_from_snr_db, build_loss_matrix, expected_loss, path_cost, synth_matrix, LossMatrix, WeightDist};
use risia::numfmt::F17;
use risia::perm::Permutation;
use risia::solver::{SolverParams, SolverReport};
use risia::{Error, Result};

const DEFAULT_Q: f64 = 1e-3;

#[derive(Parser)]
#[command(name = "risia", version, about = "Robust index assignment for RIS codebooks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when omitted, where that makes sense).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Suppress progress and warnings on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate channels and a steering codebook.
    Gen {
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "M")]
        m: usize,
        #[arg(long)]
        b: u32,
    },
    /// Compute the mismatch-loss matrix of an instance.
    Loss {
        instance: PathBuf,
        #[arg(long)]
        symmetrize: bool,
    },
    /// Order the codewords with one solver and derive a Gray assignment.
    Solve {
        matrix: PathBuf,
        #[arg(long, default_value = "tsp")]
        solver: String,
        /// JSON file of solver parameters (defaults depend on K).
        #[arg(long)]
        params: Option<PathBuf>,
        /// Record wall time as 0 for reproducible output.
        #[arg(long)]
        no_timing: bool,
    },
    /// Expected single-bit-error loss of an assignment or path.
    Eval {
        matrix: PathBuf,
        /// Assignment JSON, or a permutation array labelled along the path.
        assignment: PathBuf,
        #[arg(long = "bsc-snr-db")]
        bsc_snr_db: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
    },
    /// Write a synthetic loss matrix.
    Synth {
        #[arg(long, value_enum)]
        dist: DistArg,
        #[arg(long = "K")]
        k: usize,
    },
    /// Run a Monte Carlo campaign and write the result CSV.
    Bench {
        /// Campaign config JSON; a preset is used when omitted.
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Preset::Desk)]
        preset: Preset,
        #[arg(long)]
        no_timing: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Clustered,
    Exploded,
}

impl From<DistArg> for WeightDist {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Uniform => WeightDist::Uniform,
            DistArg::Clustered => WeightDist::Clustered,
            DistArg::Exploded => WeightDist::Exploded,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Paper,
}

struct Ctx {
    global: Global,
}

impl Ctx {
    fn seed(&self) -> u64 {
        self.global.seed.unwrap_or(0)
    }

    fn info(&self, msg: &str) {
        if !self.global.quiet {
            eprintln!("{msg}");
        }
    }

    /// Writes `text` to `--out`, or stdout.
    fn emit(&self, text: &str) -> Result<()> {
        match &self.global.out {
            Some(p) => {
                write(p, text)?;
                self.info(&format!("wrote {}", p.display()));
                Ok(())
            }
            None => {
                println!("{}", text.trim_end());
                Ok(())
            }
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn cmd_gen(ctx: &Ctx, k: usize, n: usize, m: usize, b: u32) -> Result<()> {
    let inst = Instance::generate(k, n, m, b, ctx.seed())?;
    ctx.emit(&inst.to_json()?)
}

fn cmd_loss(ctx: &Ctx, instance: &Path, symmetrize: bool) -> Result<()> {
    let inst = Instance::load(instance)?;
    let loss = build_loss_matrix(&inst.channels, &inst.codebook, symmetrize)?;
    match &ctx.global.out {
        Some(p) => {
            loss.save(p, "miso", Some(inst.seed))?;
            ctx.info(&format!("wrote {}", p.display()));
            Ok(())
        }
        None => ctx.emit(&loss.to_csv()),
    }
}

fn cmd_synth(ctx: &Ctx, dist: WeightDist, k: usize) -> Result<()> {
    let loss = synth_matrix(dist, k, ctx.seed())?;
    match &ctx.global.out {
        Some(p) => {
            loss.save(p, dist.name(), Some(ctx.seed()))?;
            ctx.info(&format!("wrote {}", p.display()));
            Ok(())
        }
        None => ctx.emit(&loss.to_csv()),
    }
}

fn cmd_solve(ctx: &Ctx, matrix: &Path, solver: &str, params: Option<&Path>, no_timing: bool) -> Result<()> {
    let kind: SolverKind = solver.parse()?;
    let (loss, _) = LossMatrix::load(matrix)?;
    let k = loss.k();
    let mut p = match params {
        Some(path) => SolverParams::load(path)?,
        None => SolverParams::for_k(k),
    };
    if let Some(seed) = ctx.global.seed {
        p.seed = seed;
    }
    let sym = loss.symmetrize();
    let started = std::time::Instant::now();
    let (report, assignment) = if kind == SolverKind::Tsp {
        let r = risia::solver::solve(&sym, &p)?;
        let a = k.is_power_of_two().then(|| assign_from_path(&r.best_pi)).transpose()?;
        (r, a)
    } else {
        let (path, a) = if k.is_power_of_two() {
            let lab = bench::run_solver(kind, &sym, &p, p.seed)?;
            (lab.path, Some(lab.assignment))
        } else {
            (bench::solver_path(kind, &sym, &p, p.seed)?, None)
        };
        let cost = path_cost(&sym, &path)?;
        let r = SolverReport {
            best_pi: path,
            best_cost: cost,
            cost_trace: vec![cost],
            iterations_run: 0,
            mode_switches: 0,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        (r, a)
    };
    let report = if no_timing { report.without_timing() } else { report };
    ctx.emit(&report.to_json())?;
    if let Some(out) = &ctx.global.out {
        write(&sibling(out, "perm.json"), &serde_json::to_string(&report.best_pi).expect("serializes"))?;
        if let Some(a) = assignment {
            a.save(sibling(out, "assign.json"))?;
        }
    }
    ctx.info(&format!("{kind}: path cost {}", report.best_cost));
    Ok(())
}

fn load_assignment(path: &Path) -> Result<Assignment> {
    let text = read(path)?;
    if let Ok(pi) = serde_json::from_str::<Permutation>(&text) {
        return assign_from_path(&pi);
    }
    Assignment::from_json(&text)
}

fn cmd_eval(ctx: &Ctx, matrix: &Path, assignment: &Path, snr_db: Option<f64>, q: Option<f64>) -> Result<()> {
    let (loss, _) = LossMatrix::load(matrix)?;
    let a = load_assignment(assignment)?;
    let q = match (q, snr_db) {
        (Some(q), Some(_)) => {
            ctx.info("warning: both --q and --bsc-snr-db given; using --q");
            q
        }
        (Some(q), None) => q,
        (None, Some(db)) => ber_from_snr_db(db),
        (None, None) => DEFAULT_Q,
    };
    let el = expected_loss(&loss, &a, q)?;
    let pc = path_cost(&loss, &a.gray_path())?;
    let out = serde_json::json!({
        "K": a.k(),
        "q": F17(q),
        "expected_loss": F17(el),
        "path_cost": F17(pc),
    });
    ctx.emit(&serde_json::to_string_pretty(&out).expect("serializes"))
}

fn cmd_bench(ctx: &Ctx, config: Option<&Path>, preset: Preset, no_timing: bool) -> Result<()> {
    let mut cfg = match config {
        Some(p) => CampaignConfig::load(p)?,
        None => match preset {
            Preset::Desk => CampaignConfig::desk("desk"),
            Preset::Paper => CampaignConfig::paper_scale("paper"),
        },
    };
    if let Some(seed) = ctx.global.seed {
        cfg.seed = seed;
    }
    if no_timing {
        cfg.record_timing = false;
    }
    let rows = bench::run_campaign_with_threads(&cfg, ctx.global.threads)?;
    let out = ctx.global.out.clone().unwrap_or_else(|| cfg.output_path());
    bench::write_csv(&rows, &out)?;
    ctx.info(&format!("wrote {} rows to {}", rows.len(), out.display()));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx { global: cli.global };
    if ctx.global.threads > 0 {
        // Only fails if a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(ctx.global.threads).build_global();
    }
    match cli.cmd {
        Cmd::Gen { k, n, m, b } => cmd_gen(&ctx, k, n, m, b),
        Cmd::Loss { instance, symmetrize } => cmd_loss(&ctx, &instance, symmetrize),
        Cmd::Solve {
            matrix,
            solver,
            params,
            no_timing,
        } => cmd_solve(&ctx, &matrix, &solver, params.as_deref(), no_timing),
        Cmd::Eval {
            matrix,
            assignment,
            bsc_snr_db,
            q,
        } => cmd_eval(&ctx, &matrix, &assignment, bsc_snr_db, q),
        Cmd::Synth { dist, k } => cmd_synth(&ctx, dist.into(), k),
        Cmd::Bench {
            config,
            preset,
            no_timing,
        } => cmd_bench(&ctx, config.as_deref(), preset, no_timing),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Format { .. } => 2,
        Error::DegenerateInstance { .. } => 3,
        Error::Io { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
