use crate::convergence::{
    detect, error_bound_t, r1_from_distances, r2_from_terms, AgentStatus, Verdict,
};
use crate::coupling::{GlobalVector, ProductVector};
use crate::sets::distance;

use super::{
    Algorithm, IterationTrace, MessageCounts, Problem, SolveReport, SolveStatus, SolverConfig,
    SolverError,
};

/// Which objective an algorithm minimises, and therefore which local
/// relative-change test its detector uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// `1/2 sum_i dist(s^i, C_i)^2` over consensual iterates.
    ProjectionResidual,
    /// Projection residual plus consensus deviation, over split iterates.
    Split,
}

/// Per-iteration bookkeeping shared by all solvers.
pub(crate) struct Monitor<'a> {
    problem: &'a Problem,
    config: &'a SolverConfig,
    prev_d: Option<Vec<f64>>,
    prev_x: Option<ProductVector>,
    prev_rc: Option<Vec<f64>>,
    prev_e: Option<Vec<f64>>,
    trace: Vec<IterationTrace>,
    messages: u64,
    detector_messages: u64,
    first_verdict: Option<(usize, Verdict)>,
    rc_floor: Option<Vec<f64>>,
}

impl<'a> Monitor<'a> {
    pub fn new(problem: &'a Problem, config: &'a SolverConfig) -> Self {
        Monitor {
            problem,
            config,
            prev_d: None,
            prev_x: None,
            prev_rc: None,
            prev_e: None,
            trace: Vec::new(),
            messages: 0,
            detector_messages: 0,
            first_verdict: None,
            rc_floor: None,
        }
    }

    /// Per-agent lower bounds on the relative change of the next observed
    /// iteration.
    pub fn raise_rc(&mut self, floor: Vec<f64>) {
        self.rc_floor = Some(floor);
    }

    /// Records iteration `k` for a consensual iterate `x = scatter(v)` with
    /// projection `proj = P_C(x)`. Returns true when the solver should stop.
    ///
    /// An agent's distance can stay flat while its block slides parallel to
    /// the set, which R1 reads as zero change. Its rc is therefore at least
    /// `(|x_i - x_i_prev| / d_i_prev)^2`, the second-order part of the
    /// largest relative change that step could cause. Near a limit the step
    /// is much shorter than the distance and this bound is negligible.
    ///
    /// Momentum can also leave a block exactly still for one iteration while
    /// its neighbours move, so an agent reports the larger of its last two
    /// values.
    pub fn observe_consensual(
        &mut self,
        k: usize,
        v: &GlobalVector,
        x: &ProductVector,
        proj: &ProductVector,
        counts: MessageCounts,
        displacement: Option<f64>,
    ) -> Result<bool, SolverError> {
        let n = x.num_blocks();
        let d: Vec<f64> = (0..n).map(|i| distance(x.block(i), proj.block(i))).collect();
        let mut rc: Vec<f64> = match (&self.prev_d, &self.prev_x) {
            (Some(prev), Some(px)) => (0..n)
                .map(|i| {
                    let r1 = r1_from_distances(prev[i], d[i]);
                    if prev[i] > self.config.feas_tol {
                        let step = distance(x.block(i), px.block(i)) / prev[i];
                        r1.max(step * step)
                    } else {
                        r1
                    }
                })
                .collect(),
            _ => vec![f64::INFINITY; n],
        };
        if let Some(floor) = self.rc_floor.take() {
            for (r, f) in rc.iter_mut().zip(floor) {
                *r = r.max(f);
            }
        }
        let reported: Vec<f64> = match &self.prev_rc {
            Some(prev) => rc.iter().zip(prev).map(|(r, p)| r.max(*p)).collect(),
            None => rc.clone(),
        };
        self.prev_rc = Some(rc);
        let rc = reported;
        let tol = self.config.feas_tol;
        let statuses: Vec<AgentStatus> = (0..n)
            .map(|i| AgentStatus {
                locally_feasible: d[i] <= tol,
                rc: rc[i],
                local_objective: 0.5 * d[i] * d[i],
            })
            .collect();
        let objective: f64 = statuses.iter().map(|s| s.local_objective).sum();
        let t_v = d.iter().copied().fold(0.0f64, f64::max);
        let verdict = self.verdict(&statuses, false, true)?;
        self.prev_d = Some(d);
        self.prev_x = Some(x.clone());
        self.push(k, objective, t_v, rc, counts, displacement, verdict, v)
    }

    /// Records iteration `k` for a split iterate `y` with projection
    /// `proj = P_C(y)` and consensus restriction `consensus = P_D(y)`,
    /// whose global form is `v`.
    pub fn observe_split(
        &mut self,
        k: usize,
        y: &ProductVector,
        proj: &ProductVector,
        consensus: &ProductVector,
        v: &GlobalVector,
        counts: MessageCounts,
    ) -> Result<bool, SolverError> {
        let n = y.num_blocks();
        let d: Vec<f64> = (0..n).map(|i| distance(y.block(i), proj.block(i))).collect();
        let e: Vec<f64> = (0..n)
            .map(|i| distance(y.block(i), consensus.block(i)))
            .collect();
        let rc: Vec<f64> = match (&self.prev_d, &self.prev_e) {
            (Some(pd), Some(pe)) => (0..n)
                .map(|i| r2_from_terms(pd[i], d[i], pe[i], e[i]))
                .collect(),
            _ => vec![f64::INFINITY; n],
        };
        let tol = self.config.feas_tol;
        let statuses: Vec<AgentStatus> = (0..n)
            .map(|i| AgentStatus {
                locally_feasible: d[i] <= tol,
                rc: rc[i],
                local_objective: 0.5 * (d[i] * d[i] + e[i] * e[i]),
            })
            .collect();
        let consensus_ok = e.iter().map(|x| x * x).sum::<f64>().sqrt() <= tol;
        let objective: f64 = statuses.iter().map(|s| s.local_objective).sum();
        let t_v = error_bound_t(v, self.problem.sets(), self.problem.coupling())?;
        let verdict = self.verdict(&statuses, true, consensus_ok)?;
        self.prev_d = Some(d);
        self.prev_e = Some(e);
        self.push(k, objective, t_v, rc, counts, None, verdict, v)
    }

    fn verdict(
        &self,
        statuses: &[AgentStatus],
        needs_consensus: bool,
        consensus_ok: bool,
    ) -> Result<Verdict, SolverError> {
        Ok(detect(
            statuses,
            needs_consensus,
            consensus_ok,
            self.config.rc_threshold,
            self.config.objective_floor,
        )?)
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        k: usize,
        objective: f64,
        t_v: f64,
        rc: Vec<f64>,
        counts: MessageCounts,
        displacement: Option<f64>,
        verdict: Verdict,
        v: &GlobalVector,
    ) -> Result<bool, SolverError> {
        if !objective.is_finite() || v.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(SolverError::NumericFailure(k));
        }
        self.messages += counts.update;
        self.detector_messages += counts.detector;
        let max_rc = rc.iter().copied().fold(0.0f64, f64::max);
        self.trace.push(IterationTrace {
            k,
            objective,
            t_v,
            max_rc,
            per_agent_rc: rc,
            messages: counts.update,
            detector_messages: counts.detector,
            displacement,
            verdict,
            v: self.config.record_iterates.then(|| v.0.clone()),
        });
        if verdict != Verdict::Continue && self.first_verdict.is_none() {
            self.first_verdict = Some((k, verdict));
        }
        Ok(self.first_verdict.is_some() && !self.config.run_to_max_iter)
    }

    pub fn finish(
        self,
        algorithm: Algorithm,
        final_v: GlobalVector,
        final_s: ProductVector,
    ) -> SolveReport {
        let status = match self.first_verdict {
            Some((_, Verdict::Feasible)) => SolveStatus::Feasible,
            Some((_, Verdict::InfeasibleConverged)) => SolveStatus::Infeasible,
            _ => SolveStatus::MaxIter,
        };
        SolveReport {
            algorithm,
            status,
            iterations: self.trace.len(),
            verdict_iteration: self.first_verdict.map(|(k, _)| k),
            final_v,
            final_s,
            trace: self.trace,
            total_messages: self.messages,
            detector_messages: self.detector_messages,
        }
    }
}
