//! Benchmark runs over a directory of instances.
//!
//! Every (instance, algorithm) pair is an independent task run on the rayon
//! pool. FB and DR are run once per point of the `gamma` x `lambda` grid and
//! the best run is kept: a verdict beats `max_iter`, then fewer iterations
//! win, then the earlier grid point.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cfp_split::flowprob::{build_problem, FlowInstance};
use cfp_split::solvers::{Schedule, DEFAULT_FEAS_TOL, DEFAULT_MAX_ITER};
use cfp_split::{solve, Algorithm, SolveReport, SolveStatus, SolverConfig};
use rayon::prelude::*;

use crate::csv::{fmt_f64, write_trace};
use crate::instance::read_instance;

pub const SUMMARY_HEADER: &str = "instance,algorithm,gamma,lambda,status,iterations,verdict_iteration,\
total_messages,detector_messages,final_objective,wall_ms,error";

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub algorithms: Vec<Algorithm>,
    pub gammas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub max_iter: usize,
    pub rc_threshold: f64,
    pub feas_tol: f64,
    /// Where to write the trace of each kept run, if anywhere.
    pub trace_dir: Option<PathBuf>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            algorithms: Algorithm::ALL.to_vec(),
            gammas: vec![1.0],
            lambdas: vec![1.0],
            max_iter: DEFAULT_MAX_ITER,
            rc_threshold: cfp_split::convergence::DEFAULT_RC_THRESHOLD,
            feas_tol: DEFAULT_FEAS_TOL,
            trace_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub status: SolveStatus,
    pub iterations: usize,
    pub verdict_iteration: Option<usize>,
    pub total_messages: u64,
    pub detector_messages: u64,
    pub final_objective: f64,
}

impl RunSummary {
    fn of(report: &SolveReport) -> Self {
        RunSummary {
            status: report.status,
            iterations: report.iterations,
            verdict_iteration: report.verdict_iteration,
            total_messages: report.total_messages,
            detector_messages: report.detector_messages,
            final_objective: report.final_objective(),
        }
    }

    fn key(&self) -> (bool, usize) {
        (self.status == SolveStatus::MaxIter, self.iterations)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub algorithm: Algorithm,
    /// Parameters of the kept run; `None` for algorithms that take none.
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub outcome: Result<RunSummary, String>,
    pub wall_ms: f64,
}

pub fn status_name(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Feasible => "feasible",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::MaxIter => "max_iter",
    }
}

fn uses_parameters(alg: Algorithm) -> bool {
    matches!(alg, Algorithm::Fb | Algorithm::Dr)
}

/// Instance files (`*.json`) in `dir`, sorted by file stem. Files that fail
/// to load are kept as errors.
pub fn load_dir(dir: &Path) -> io::Result<Vec<(String, Result<FlowInstance, String>)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "json"));
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let inst = read_instance(&p).map(|(_, inst)| inst).map_err(|e| e.to_string());
            (name, inst)
        })
        .collect())
}

fn run_one(
    name: &str,
    inst: &Result<FlowInstance, String>,
    alg: Algorithm,
    opts: &BenchOptions,
) -> BenchRow {
    let mut row = BenchRow {
        instance: name.to_string(),
        algorithm: alg,
        gamma: None,
        lambda: None,
        outcome: Err(String::new()),
        wall_ms: 0.0,
    };
    let problem = match inst.as_ref().map_err(Clone::clone).and_then(|i| build_problem(i).map_err(|e| e.to_string())) {
        Ok(p) => p,
        Err(e) => {
            row.outcome = Err(e);
            return row;
        }
    };
    let grid: Vec<(Option<f64>, Option<f64>)> = if uses_parameters(alg) {
        opts.gammas
            .iter()
            .flat_map(|&g| opts.lambdas.iter().map(move |&l| (Some(g), Some(l))))
            .collect()
    } else {
        vec![(None, None)]
    };
    let mut best: Option<(RunSummary, SolveReport, f64, Option<f64>, Option<f64>)> = None;
    let mut last_err = None;
    for (g, l) in grid {
        let mut config = SolverConfig::new(alg).with_max_iter(opts.max_iter);
        config.rc_threshold = opts.rc_threshold;
        config.feas_tol = opts.feas_tol;
        if let Some(g) = g {
            config.gamma = Schedule::Constant(g);
        }
        if let Some(l) = l {
            config.lambda = Schedule::Constant(l);
        }
        let start = Instant::now();
        let result = solve(&problem, &config);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match result {
            Ok(report) => {
                let summary = RunSummary::of(&report);
                if best.as_ref().is_none_or(|b| summary.key() < b.0.key()) {
                    best = Some((summary, report, ms, g, l));
                }
            }
            Err(e) => last_err = Some((e.to_string(), g, l)),
        }
    }
    match best {
        Some((summary, report, ms, g, l)) => {
            if let Some(dir) = &opts.trace_dir {
                let path = dir.join(format!("{name}__{}.csv", alg.name()));
                if let Err(e) = write_trace_file(&path, &report) {
                    row.outcome = Err(format!("writing {}: {e}", path.display()));
                    return row;
                }
            }
            row.gamma = g;
            row.lambda = l;
            row.wall_ms = ms;
            row.outcome = Ok(summary);
        }
        None => {
            let (e, g, l) = last_err.expect("grid is nonempty");
            row.gamma = g;
            row.lambda = l;
            row.outcome = Err(e);
        }
    }
    row
}

fn write_trace_file(path: &Path, report: &SolveReport) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_trace(&mut out, report)?;
    out.flush()
}

/// Runs every algorithm on every instance. Rows are sorted by instance name,
/// then algorithm.
pub fn run_bench(instances: &[(String, Result<FlowInstance, String>)], opts: &BenchOptions) -> Vec<BenchRow> {
    let tasks: Vec<(usize, Algorithm)> = (0..instances.len())
        .flat_map(|i| opts.algorithms.iter().map(move |&a| (i, a)))
        .collect();
    let mut rows: Vec<BenchRow> = tasks
        .par_iter()
        .map(|&(i, alg)| run_one(&instances[i].0, &instances[i].1, alg, opts))
        .collect();
    rows.sort_by(|a, b| (&a.instance, a.algorithm).cmp(&(&b.instance, b.algorithm)));
    rows
}

/// Convenience for callers holding validated instances.
pub fn run_bench_instances(instances: &[(String, FlowInstance)], opts: &BenchOptions) -> Vec<BenchRow> {
    let wrapped: Vec<(String, Result<FlowInstance, String>)> =
        instances.iter().map(|(n, i)| (n.clone(), Ok(i.clone()))).collect();
    run_bench(&wrapped, opts)
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Quotes a free-text field for CSV.
fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_summary<W: Write + ?Sized>(out: &mut W, rows: &[BenchRow]) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        let head = format!(
            "{},{},{},{}",
            quote(&r.instance),
            r.algorithm.name(),
            opt_f64(r.gamma),
            opt_f64(r.lambda)
        );
        match &r.outcome {
            Ok(s) => writeln!(
                out,
                "{head},{},{},{},{},{},{},{},",
                status_name(s.status),
                s.iterations,
                s.verdict_iteration.map(|k| k.to_string()).unwrap_or_default(),
                s.total_messages,
                s.detector_messages,
                fmt_f64(s.final_objective),
                fmt_f64(r.wall_ms)
            )?,
            Err(e) => writeln!(out, "{head},error,,,,,,,{}", quote(e))?,
        }
    }
    Ok(())
}
