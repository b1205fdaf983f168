use super::monitor::Monitor;
use super::{Exchange, Problem, SolveReport, SolverConfig, SolverError};

/// Weighted mean of the lifted local projections. Every agent needs every
/// other agent's projection, so each round is an all-to-all broadcast.
pub(super) fn run(
    problem: &Problem,
    config: &SolverConfig,
    exchange: &mut dyn Exchange,
) -> Result<SolveReport, SolverError> {
    let coupling = problem.coupling();
    let weights = config.weights(coupling.n_agents())?;
    let mut v = config.initial_point(coupling.n_global());
    let mut x = coupling.scatter(&v)?;
    let mut p = problem.project(&x)?;
    let mut monitor = Monitor::new(problem, config);
    for k in 1..=config.max_iter {
        v = exchange.broadcast_mix(coupling, &v, &p, &weights);
        x = coupling.scatter(&v)?;
        p = problem.project(&x)?;
        if monitor.observe_consensual(k, &v, &x, &p, exchange.take_counts(), None)? {
            break;
        }
    }
    Ok(monitor.finish(config.algorithm, v, x))
}
