use super::monitor::Monitor;
use super::{Exchange, Problem, SolveReport, SolverConfig, SolverError};

/// Relaxed Douglas-Rachford on the split objective. The governing sequence
/// `Y` is not itself meaningful; detection runs on the shadow sequence
/// `S = prox(Y)`, whose consensus snapshot costs one extra averaging round.
pub(super) fn run(
    problem: &Problem,
    config: &SolverConfig,
    exchange: &mut dyn Exchange,
) -> Result<SolveReport, SolverError> {
    let coupling = problem.coupling();
    let gamma = config.gamma.at(1);
    let v0 = config.initial_point(coupling.n_global());
    let mut y = coupling.scatter(&v0)?;
    let mut monitor = Monitor::new(problem, config);
    let mut last = None;
    for k in 1..=config.max_iter {
        let lambda = config.lambda.at(k);
        let s = problem.prox(&y, gamma)?;
        let z = s.lincomb(2.0, &y, -1.0);
        let avg = exchange.average(coupling, &z);
        let (a, b, c) = (
            (1.0 - gamma) / (1.0 + gamma),
            -1.0 / (1.0 + gamma),
            gamma / (1.0 + gamma),
        );
        let step = s.lincomb(a, &y, b).lincomb(1.0, &avg, c);
        y = y.lincomb(1.0, &step, lambda);

        let ps = problem.project(&s)?;
        let consensus = exchange.detector_average(coupling, &s);
        let v = coupling.first_copy(&consensus);
        let stop = monitor.observe_split(k, &s, &ps, &consensus, &v, exchange.take_counts())?;
        if stop {
            return Ok(monitor.finish(config.algorithm, v, s));
        }
        last = Some((v, s));
    }
    let (v, s) = last.expect("at least one iteration");
    Ok(monitor.finish(config.algorithm, v, s))
}
