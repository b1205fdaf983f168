use super::monitor::Monitor;
use super::{theta_next, Exchange, Problem, SolveReport, SolverConfig, SolverError};

/// Forward-backward with Nesterov-type momentum. Both sequences stay
/// consensual, so the only traffic is averaging the projected extrapolation.
pub(super) fn run(
    problem: &Problem,
    config: &SolverConfig,
    exchange: &mut dyn Exchange,
) -> Result<SolveReport, SolverError> {
    let coupling = problem.coupling();
    let v0 = config.initial_point(coupling.n_global());
    let mut s = coupling.scatter(&v0)?;
    let mut g = s.clone();
    let mut theta = config.theta0;
    let mut monitor = Monitor::new(problem, config);
    for k in 1..=config.max_iter {
        if k > 1 {
            theta = theta_next(theta)?;
        }
        let y = s.lincomb(1.0 - theta, &g, theta);
        let py = problem.project(&y)?;
        let next = exchange.average(coupling, &py);
        g = s.lincomb((theta - 1.0) / theta, &next, 1.0 / theta);
        s = next;
        let p = problem.project(&s)?;
        let v = coupling.first_copy(&s);
        if monitor.observe_consensual(k, &v, &s, &p, exchange.take_counts(), None)? {
            return Ok(monitor.finish(config.algorithm, v, s));
        }
    }
    let v = coupling.first_copy(&s);
    Ok(monitor.finish(config.algorithm, v, s))
}
