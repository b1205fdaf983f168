use crate::coupling::ProductVector;

use super::monitor::Monitor;
use super::{Exchange, Problem, SolveReport, SolverConfig, SolverError};

/// Gradient step on the projection residual followed by a relaxed
/// consensus average. The iterate stays consensual throughout.
pub(super) fn run(
    problem: &Problem,
    config: &SolverConfig,
    exchange: &mut dyn Exchange,
) -> Result<SolveReport, SolverError> {
    let coupling = problem.coupling();
    let v0 = config.initial_point(coupling.n_global());
    let mut s = coupling.scatter(&v0)?;
    let mut p = problem.project(&s)?;
    let mut monitor = Monitor::new(problem, config);
    for k in 1..=config.max_iter {
        let gamma = config.gamma.at(k);
        let lambda = config.lambda.at(k);
        let y = s.lincomb(1.0 - gamma, &p, gamma);
        let avg = exchange.average(coupling, &y);
        s = relax(&s, &avg, lambda);
        p = problem.project(&s)?;
        let v = coupling.first_copy(&s);
        if monitor.observe_consensual(k, &v, &s, &p, exchange.take_counts(), None)? {
            return Ok(monitor.finish(config.algorithm, v, s));
        }
    }
    let v = coupling.first_copy(&s);
    Ok(monitor.finish(config.algorithm, v, s))
}

fn relax(s: &ProductVector, target: &ProductVector, lambda: f64) -> ProductVector {
    if lambda == 1.0 {
        target.clone()
    } else {
        s.lincomb(1.0 - lambda, target, lambda)
    }
}
