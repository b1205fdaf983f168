//! Distributed feasibility solvers.
//!
//! Every solver iterates over a [`Problem`] (coupling structure plus one
//! convex set per agent) in synchronous rounds. Local work is per-agent;
//! the only inter-agent step is consensus averaging, which goes through an
//! [`Exchange`] so the same iteration can run directly or on the simulated
//! network in [`crate::netsim`].

mod accelerated;
mod ap;
mod forward_backward;
mod linearization;
mod mean_projection;
mod monitor;
mod rachford;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::convergence::{ConvergenceError, Verdict, DEFAULT_OBJECTIVE_FLOOR, DEFAULT_RC_THRESHOLD};
use crate::coupling::{CouplingError, CouplingStructure, GlobalVector, ProductVector};
use crate::sets::{SetError, SetSpec};

pub use monitor::Objective;

pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Convergence(#[from] ConvergenceError),
    #[error("invalid {name} = {value}")]
    InvalidSchedule { name: &'static str, value: f64 },
    #[error("invalid mean-projection weights: {0}")]
    InvalidWeights(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("{name} out of range: {value}")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("iterate became non-finite at iteration {0}")]
    NumericFailure(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Forward-backward splitting on the projection-residual objective.
    Fb,
    /// Accelerated forward-backward.
    Afb,
    /// Douglas-Rachford on the split objective.
    Dr,
    /// Alternating linearization.
    Alm,
    /// Fast alternating linearization.
    Falm,
    /// Von Neumann alternating projections.
    Vn,
    /// Dykstra alternating projections.
    Dykstra,
    /// Mean projection (global communication baseline).
    Mpa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Fb,
        Algorithm::Afb,
        Algorithm::Dr,
        Algorithm::Alm,
        Algorithm::Falm,
        Algorithm::Vn,
        Algorithm::Dykstra,
        Algorithm::Mpa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fb => "fb",
            Algorithm::Afb => "afb",
            Algorithm::Dr => "dr",
            Algorithm::Alm => "alm",
            Algorithm::Falm => "falm",
            Algorithm::Vn => "vn",
            Algorithm::Dykstra => "dykstra",
            Algorithm::Mpa => "mpa",
        }
    }

    pub fn objective(self) -> Objective {
        match self {
            Algorithm::Dr | Algorithm::Alm | Algorithm::Falm => Objective::Split,
            _ => Objective::ProjectionResidual,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .iter()
            .copied()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown algorithm '{s}'"))
    }
}

/// Per-iteration step or relaxation parameter. Sequences hold their last
/// value once exhausted.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl Schedule {
    /// Value for iteration `k` (1-based).
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Schedule::Constant(x) => *x,
            Schedule::Sequence(xs) => {
                let idx = k.saturating_sub(1).min(xs.len().saturating_sub(1));
                xs.get(idx).copied().unwrap_or(f64::NAN)
            }
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            Schedule::Constant(x) => vec![*x],
            Schedule::Sequence(xs) if xs.is_empty() => vec![f64::NAN],
            Schedule::Sequence(xs) => xs.clone(),
        }
    }

    fn check_within(&self, name: &'static str, lo: f64, hi: f64) -> Result<(), SolverError> {
        for value in self.values() {
            if !(value >= lo && value <= hi) {
                return Err(SolverError::InvalidSchedule { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Gradient step (FB) or prox scale (DR, constant only).
    pub gamma: Schedule,
    /// Relaxation (FB in `[eps, 1]`, DR in `[eps, 2 - eps]`).
    pub lambda: Schedule,
    pub theta0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub rc_threshold: f64,
    pub feas_tol: f64,
    pub objective_floor: f64,
    /// Mean-projection weights; uniform when `None`.
    pub alpha_weights: Option<Vec<f64>>,
    /// Starting point in global coordinates; zero when `None`.
    pub initial: Option<Vec<f64>>,
    /// Keep iterating after a verdict until `max_iter`.
    pub run_to_max_iter: bool,
    /// Store the global iterate in every trace entry.
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::Afb,
            gamma: Schedule::Constant(1.0),
            lambda: Schedule::Constant(1.0),
            theta0: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            epsilon: 0.01,
            max_iter: DEFAULT_MAX_ITER,
            rc_threshold: DEFAULT_RC_THRESHOLD,
            feas_tol: DEFAULT_FEAS_TOL,
            objective_floor: DEFAULT_OBJECTIVE_FLOOR,
            alpha_weights: None,
            initial: None,
            run_to_max_iter: false,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SolverConfig {
            algorithm,
            ..Default::default()
        }
    }

    pub fn with_initial(mut self, v: Vec<f64>) -> Self {
        self.initial = Some(v);
        self
    }

    pub fn with_max_iter(mut self, k: usize) -> Self {
        self.max_iter = k;
        self
    }

    fn validate(&self, problem: &Problem) -> Result<(), SolverError> {
        let eps = self.epsilon;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SolverError::InvalidSchedule {
                name: "epsilon",
                value: eps,
            });
        }
        if self.max_iter == 0 {
            return Err(SolverError::InvalidSchedule {
                name: "max_iter",
                value: 0.0,
            });
        }
        if !(self.feas_tol >= 0.0) || !(self.rc_threshold >= 0.0) || !(self.objective_floor >= 0.0)
        {
            return Err(SolverError::InvalidSchedule {
                name: "tolerance",
                value: self.feas_tol.min(self.rc_threshold).min(self.objective_floor),
            });
        }
        if let Some(v) = &self.initial {
            if v.len() != problem.coupling.n_global() {
                return Err(CouplingError::LengthMismatch {
                    expected: problem.coupling.n_global(),
                    actual: v.len(),
                }
                .into());
            }
        }
        match self.algorithm {
            Algorithm::Fb => {
                self.gamma.check_within("gamma", eps, 2.0 - eps)?;
                self.lambda.check_within("lambda", eps, 1.0)?;
            }
            Algorithm::Dr => {
                match self.gamma {
                    Schedule::Constant(g) if g > 0.0 && g.is_finite() => {}
                    _ => {
                        return Err(SolverError::InvalidSchedule {
                            name: "gamma",
                            value: self.gamma.at(1),
                        })
                    }
                }
                self.lambda.check_within("lambda", eps, 2.0 - eps)?;
            }
            Algorithm::Afb => {
                if !(self.theta0 > 0.0 && self.theta0 <= 1.0) {
                    return Err(SolverError::InvalidSchedule {
                        name: "theta0",
                        value: self.theta0,
                    });
                }
            }
            Algorithm::Alm | Algorithm::Falm => {
                for (name, mu) in [("mu1", self.mu1), ("mu2", self.mu2)] {
                    if !(mu > 0.0 && mu.is_finite()) {
                        return Err(SolverError::InvalidSchedule { name, value: mu });
                    }
                }
            }
            Algorithm::Mpa => {
                self.weights(problem.coupling.n_agents())?;
            }
            Algorithm::Vn | Algorithm::Dykstra => {}
        }
        Ok(())
    }

    pub(crate) fn weights(&self, n_agents: usize) -> Result<Vec<f64>, SolverError> {
        match &self.alpha_weights {
            None => Ok(vec![1.0 / n_agents as f64; n_agents]),
            Some(w) => {
                if w.len() != n_agents {
                    return Err(SolverError::InvalidWeights(format!(
                        "expected {n_agents} weights, got {}",
                        w.len()
                    )));
                }
                if w.iter().any(|a| !(*a > 0.0)) {
                    return Err(SolverError::InvalidWeights("weights must be positive".into()));
                }
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(SolverError::InvalidWeights(format!("weights sum to {sum}")));
                }
                Ok(w.clone())
            }
        }
    }

    fn initial_point(&self, n: usize) -> GlobalVector {
        match &self.initial {
            Some(v) => GlobalVector(v.clone()),
            None => GlobalVector::zeros(n),
        }
    }
}

/// A decomposed feasibility problem: agent `i` must place its block in
/// `sets[i]`, and all copies of a shared variable must agree.
#[derive(Debug, Clone)]
pub struct Problem {
    coupling: CouplingStructure,
    sets: Vec<SetSpec>,
}

impl Problem {
    pub fn new(coupling: CouplingStructure, sets: Vec<SetSpec>) -> Result<Self, SolverError> {
        if coupling.n_agents() == 0 {
            return Err(SolverError::InvalidProblem("no agents".into()));
        }
        if sets.len() != coupling.n_agents() {
            return Err(SolverError::InvalidProblem(format!(
                "{} agents but {} sets",
                coupling.n_agents(),
                sets.len()
            )));
        }
        for (i, set) in sets.iter().enumerate() {
            if set.dim() != coupling.index_set(i).len() {
                return Err(SolverError::InvalidProblem(format!(
                    "set {i} has dimension {}, agent owns {} variables",
                    set.dim(),
                    coupling.index_set(i).len()
                )));
            }
        }
        Ok(Problem { coupling, sets })
    }

    pub fn coupling(&self) -> &CouplingStructure {
        &self.coupling
    }

    pub fn sets(&self) -> &[SetSpec] {
        &self.sets
    }

    /// `P_C(x)`: every agent projects its own block.
    pub fn project(&self, x: &ProductVector) -> Result<ProductVector, SolverError> {
        let mut out = x.clone();
        for (i, set) in self.sets.iter().enumerate() {
            set.project_in_place(out.block_mut(i))?;
        }
        Ok(out)
    }

    /// Blockwise `(x + mu P_C(x)) / (1 + mu)`.
    pub fn prox(&self, x: &ProductVector, mu: f64) -> Result<ProductVector, SolverError> {
        let p = self.project(x)?;
        Ok(x.lincomb(1.0 / (1.0 + mu), &p, mu / (1.0 + mu)))
    }

    /// `F1` at a consensual product vector: `1/2 sum_i dist(s^i, C_i)^2`.
    pub fn projection_residual(&self, s: &ProductVector) -> Result<f64, SolverError> {
        let p = self.project(s)?;
        Ok(0.5 * s.distance(&p).powi(2))
    }

    /// `F2(Y) = 1/2 ||Y - P_C(Y)||^2 + 1/2 ||Y - P_D(Y)||^2`.
    pub fn split_objective(&self, y: &ProductVector) -> Result<f64, SolverError> {
        let p = self.project(y)?;
        let d = self.coupling.consensus_project(y)?;
        Ok(0.5 * y.distance(&p).powi(2) + 0.5 * y.distance(&d).powi(2))
    }
}

/// Messages spent since the last [`Exchange::take_counts`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MessageCounts {
    /// Messages needed by the algorithm's own updates.
    pub update: u64,
    /// Extra consensus snapshots needed only by the convergence detector.
    pub detector: u64,
}

/// How agents share values during one synchronous round.
pub trait Exchange {
    /// Averages every variable over its owners and returns each agent's
    /// restriction of the result, i.e. `P_D(contributions)`.
    fn average(&mut self, coupling: &CouplingStructure, contributions: &ProductVector) -> ProductVector;

    /// Same as [`Exchange::average`], accounted as detector traffic.
    fn detector_average(
        &mut self,
        coupling: &CouplingStructure,
        contributions: &ProductVector,
    ) -> ProductVector;

    /// All-to-all round for the mean projection method:
    /// `v+ = sum_i alpha_i P_{C_i}(v)` with each projection lifted to global
    /// coordinates.
    fn broadcast_mix(
        &mut self,
        coupling: &CouplingStructure,
        v: &GlobalVector,
        projections: &ProductVector,
        weights: &[f64],
    ) -> GlobalVector;

    fn take_counts(&mut self) -> MessageCounts;
}

/// Central averaging with message counts derived from the topology.
#[derive(Debug, Default)]
pub struct DirectExchange {
    pending: MessageCounts,
}

impl DirectExchange {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Exchange for DirectExchange {
    fn average(&mut self, coupling: &CouplingStructure, contributions: &ProductVector) -> ProductVector {
        self.pending.update += coupling.pairwise_transfers();
        coupling.scatter_unchecked(&coupling.gather_average_unchecked(contributions))
    }

    fn detector_average(
        &mut self,
        coupling: &CouplingStructure,
        contributions: &ProductVector,
    ) -> ProductVector {
        self.pending.detector += coupling.pairwise_transfers();
        coupling.scatter_unchecked(&coupling.gather_average_unchecked(contributions))
    }

    fn broadcast_mix(
        &mut self,
        coupling: &CouplingStructure,
        v: &GlobalVector,
        projections: &ProductVector,
        weights: &[f64],
    ) -> GlobalVector {
        let n = coupling.n_agents() as u64;
        self.pending.update += n * (n - 1);
        let mut out = Vec::with_capacity(v.len());
        for j in 0..v.len() {
            let owners = coupling.membership(j);
            let mut next = 0.0;
            let mut o = 0;
            for (q, alpha) in weights.iter().enumerate() {
                let value = if o < owners.len() && owners[o] == q {
                    o += 1;
                    let pos = coupling.local_position(q, j).expect("owner holds variable");
                    projections.block(q)[pos]
                } else {
                    v.0[j]
                };
                next += alpha * value;
            }
            out.push(next);
        }
        GlobalVector(out)
    }

    fn take_counts(&mut self) -> MessageCounts {
        std::mem::take(&mut self.pending)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub k: usize,
    /// `F1` or `F2`, whichever the algorithm minimises; the projection
    /// residual at the consensual iterate for the projection methods.
    pub objective: f64,
    /// Error bound `T(v)` at the global iterate.
    pub t_v: f64,
    pub max_rc: f64,
    pub per_agent_rc: Vec<f64>,
    pub messages: u64,
    pub detector_messages: u64,
    /// `||V - S||` for the alternating projection methods.
    pub displacement: Option<f64>,
    pub verdict: Verdict,
    pub v: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    pub status: SolveStatus,
    /// Iterations performed.
    pub iterations: usize,
    /// First iteration that produced a verdict, if any.
    pub verdict_iteration: Option<usize>,
    pub final_v: GlobalVector,
    /// The iterate the detector examined last.
    pub final_s: ProductVector,
    pub trace: Vec<IterationTrace>,
    pub total_messages: u64,
    pub detector_messages: u64,
}

impl SolveReport {
    pub fn final_objective(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |t| t.objective)
    }
}

/// Runs `config.algorithm` with direct averaging.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<SolveReport, SolverError> {
    solve_with(problem, config, &mut DirectExchange::new())
}

/// Runs `config.algorithm` using `exchange` for all inter-agent traffic.
pub fn solve_with(
    problem: &Problem,
    config: &SolverConfig,
    exchange: &mut dyn Exchange,
) -> Result<SolveReport, SolverError> {
    config.validate(problem)?;
    let _ = exchange.take_counts();
    match config.algorithm {
        Algorithm::Fb => forward_backward::run(problem, config, exchange),
        Algorithm::Afb => accelerated::run(problem, config, exchange),
        Algorithm::Dr => rachford::run(problem, config, exchange),
        Algorithm::Alm => linearization::run_alm(problem, config, exchange),
        Algorithm::Falm => linearization::run_falm(problem, config, exchange),
        Algorithm::Vn => ap::run_von_neumann(problem, config, exchange),
        Algorithm::Dykstra => ap::run_dykstra(problem, config, exchange),
        Algorithm::Mpa => mean_projection::run(problem, config, exchange),
    }
}

fn with_algorithm(config: &SolverConfig, algorithm: Algorithm) -> SolverConfig {
    SolverConfig {
        algorithm,
        ..config.clone()
    }
}

/// Forward-backward splitting; with unit step and relaxation it coincides
/// with von Neumann's method.
pub fn solve_fb(problem: &Problem, config: &SolverConfig) -> Result<SolveReport, SolverError> {
    solve(problem, &with_algorithm(config, Algorithm::Fb))
}

pub fn solve_afb(problem: &Problem, config: &SolverConfig) -> Result<SolveReport, SolverError> {
    solve(problem, &with_algorithm(config, Algorithm::Afb))
}

pub fn solve_dr(problem: &Problem, config: &SolverConfig) -> Result<SolveReport, SolverError> {
    solve(problem, &with_algorithm(config, Algorithm::Dr))
}

pub fn solve_alm(problem: &Problem, config: &SolverConfig) -> Result<SolveReport, SolverError> {
    solve(problem, &with_algorithm(config, Algorithm::Alm))
}

pub fn solve_falm(problem: &Problem, config: &SolverConfig) -> Result<SolveReport, SolverError> {
    solve(problem, &with_algorithm(config, Algorithm::Falm))
}

pub fn solve_vn(problem: &Problem, config: &SolverConfig) -> Result<SolveReport, SolverError> {
    solve(problem, &with_algorithm(config, Algorithm::Vn))
}

pub fn solve_dykstra(problem: &Problem, config: &SolverConfig) -> Result<SolveReport, SolverError> {
    solve(problem, &with_algorithm(config, Algorithm::Dykstra))
}

pub fn solve_mpa(problem: &Problem, config: &SolverConfig) -> Result<SolveReport, SolverError> {
    solve(problem, &with_algorithm(config, Algorithm::Mpa))
}

/// Next momentum weight for the accelerated forward-backward method:
/// the `theta'` in `(0, 1]` with `(1 - theta') / theta'^2 = 1 / theta^2`.
pub fn theta_next(theta: f64) -> Result<f64, SolverError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(SolverError::OutOfRange {
            name: "theta",
            value: theta,
        });
    }
    let t2 = theta * theta;
    Ok((theta * (t2 + 4.0).sqrt() - t2) / 2.0)
}

/// `t' = (1 + sqrt(1 + t^2)) / 2`.
pub fn t_next(t: f64) -> Result<f64, SolverError> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(SolverError::OutOfRange { name: "t", value: t });
    }
    Ok((1.0 + (1.0 + t * t).sqrt()) / 2.0)
}
