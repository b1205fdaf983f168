//! `cfp-split` command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | feasible (or command succeeded) |
//! | 1 | usage error |
//! | 2 | infeasible |
//! | 3 | graph generation or calibration failed |
//! | 4 | iteration limit reached without a verdict |
//! | 5 | unreadable or malformed input, or unwritable output |
//! | 6 | solver produced non-finite iterates |

pub mod bench;
pub mod csv;
pub mod gen;
pub mod instance;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use cfp_split::flowprob::{build_problem, maxflow_feasible, FlowError};
use cfp_split::solvers::{Schedule, SolverError, DEFAULT_FEAS_TOL, DEFAULT_MAX_ITER};
use cfp_split::{solve, Algorithm, SolveStatus, SolverConfig};
use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::bench::{load_dir, run_bench, status_name, write_summary, BenchOptions};
use crate::gen::{generate, Mode};
use crate::instance::read_instance;

pub const EXIT_FEASIBLE: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_GENERATION: i32 = 3;
pub const EXIT_MAX_ITER: i32 = 4;
pub const EXIT_INPUT: i32 = 5;
pub const EXIT_NUMERIC: i32 = 6;

/// Environment variable supplying the default `--seed`.
pub const SEED_ENV: &str = "CFP_SPLIT_SEED";

#[derive(Debug, Parser)]
#[command(name = "cfp-split", version, about = "Distributed convex feasibility solvers and flow benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a calibrated flow instance.
    Gen(GenArgs),
    /// Run one algorithm on an instance.
    Solve(SolveArgs),
    /// Run algorithms over a directory of instances.
    Bench(BenchArgs),
    /// Decide an instance with max-flow.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").args(["feasible", "infeasible"])))]
pub struct GenArgs {
    #[arg(long)]
    pub nodes: usize,
    /// Defaults to $CFP_SPLIT_SEED, or 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Calibrate until max-flow accepts (default).
    #[arg(long)]
    pub feasible: bool,
    /// Calibrate until max-flow rejects.
    #[arg(long)]
    pub infeasible: bool,
    #[arg(long, default_value_t = cfp_split::graphgen::DEFAULT_EDGE_PROBABILITY)]
    pub edge_probability: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "afb")]
    pub alg: Algorithm,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = cfp_split::convergence::DEFAULT_RC_THRESHOLD)]
    pub rc_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_FEAS_TOL)]
    pub feas_tol: f64,
    /// Step size (FB) or prox scale (DR).
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Relaxation (FB, DR).
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Per-iteration trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub instances: PathBuf,
    /// Comma-separated algorithm names; all eight when omitted.
    #[arg(long, value_delimiter = ',')]
    pub algs: Option<Vec<Algorithm>>,
    /// Summary CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for per-run trace CSVs.
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// FB/DR step sizes to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub gamma: Vec<f64>,
    /// FB/DR relaxations to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub lambda: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = cfp_split::convergence::DEFAULT_RC_THRESHOLD)]
    pub rc_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_FEAS_TOL)]
    pub feas_tol: f64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match cli.command {
        Command::Gen(a) => cmd_gen(&a, out, err),
        Command::Solve(a) => cmd_solve(&a, out, err),
        Command::Bench(a) => cmd_bench(&a, out, err),
        Command::Oracle(a) => cmd_oracle(&a, out, err),
    }
}

fn default_seed() -> Result<u64, String> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| format!("{SEED_ENV}={s:?} is not a u64")),
        Err(_) => Ok(0),
    }
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let seed = match a.seed.map_or_else(default_seed, Ok) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let mode = if a.infeasible { Mode::Infeasible } else { Mode::Feasible };
    let file = match generate(a.nodes, seed, mode, a.edge_probability) {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_GENERATION;
        }
    };
    let text = file.to_json();
    let written = match &a.out {
        Some(path) => fs::write(path, text),
        None => out.write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write instance: {e}");
        return EXIT_INPUT;
    }
    EXIT_FEASIBLE
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let inst = match read_instance(&a.input) {
        Ok((_, inst)) => inst,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let problem = match build_problem(&inst) {
        Ok(p) => p,
        Err(FlowError::EmptyLocalSet(i)) => {
            let _ = writeln!(out, "infeasible: the constraints of node {i} alone admit no flow");
            return EXIT_INFEASIBLE;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let mut config = SolverConfig::new(a.alg).with_max_iter(a.max_iter);
    config.rc_threshold = a.rc_threshold;
    config.feas_tol = a.feas_tol;
    config.gamma = Schedule::Constant(a.gamma);
    config.lambda = Schedule::Constant(a.lambda);
    let report = match solve(&problem, &config) {
        Ok(r) => r,
        Err(SolverError::NumericFailure(k)) => {
            let _ = writeln!(err, "error: iterates became non-finite at iteration {k}");
            return EXIT_NUMERIC;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(path) = &a.trace {
        let written = File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            csv::write_trace(&mut w, &report)?;
            w.flush()
        });
        if let Err(e) = written {
            let _ = writeln!(err, "error: cannot write trace {}: {e}", path.display());
            return EXIT_INPUT;
        }
    }
    let _ = writeln!(
        out,
        "{} after {} iterations (objective {}, {} messages)",
        status_name(report.status),
        report.iterations,
        csv::fmt_f64(report.final_objective()),
        report.total_messages + report.detector_messages
    );
    match report.status {
        SolveStatus::Feasible => EXIT_FEASIBLE,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::MaxIter => EXIT_MAX_ITER,
    }
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let instances = match load_dir(&a.instances) {
        Ok(i) => i,
        Err(e) => {
            let _ = writeln!(err, "error: cannot list {}: {e}", a.instances.display());
            return EXIT_INPUT;
        }
    };
    if let Some(dir) = &a.traces {
        if let Err(e) = fs::create_dir_all(dir) {
            let _ = writeln!(err, "error: cannot create {}: {e}", dir.display());
            return EXIT_INPUT;
        }
    }
    let opts = BenchOptions {
        algorithms: a.algs.clone().unwrap_or_else(|| Algorithm::ALL.to_vec()),
        gammas: a.gamma.clone(),
        lambdas: a.lambda.clone(),
        max_iter: a.max_iter,
        rc_threshold: a.rc_threshold,
        feas_tol: a.feas_tol,
        trace_dir: a.traces.clone(),
    };
    let rows = run_bench(&instances, &opts);
    let written = match &a.out {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            write_summary(&mut w, &rows)?;
            w.flush()
        }),
        None => write_summary(out, &rows),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write summary: {e}");
        return EXIT_INPUT;
    }
    EXIT_FEASIBLE
}

fn cmd_oracle(a: &OracleArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let inst = match read_instance(&a.input) {
        Ok((_, inst)) => inst,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let (feasible, throughput) = maxflow_feasible(&inst);
    let verdict = if feasible { "feasible" } else { "infeasible" };
    let _ = writeln!(out, "{verdict} {}", csv::fmt_f64(throughput));
    if feasible {
        EXIT_FEASIBLE
    } else {
        EXIT_INFEASIBLE
    }
}
