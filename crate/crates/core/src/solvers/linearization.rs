use crate::coupling::ProductVector;

use super::monitor::Monitor;
use super::{t_next, Exchange, Problem, SolveReport, SolverConfig, SolverError};

/// One alternating-linearization sweep from the point `y` with multiplier
/// `xi`. Returns the new `(Y, xi, P_D(Y))`; the consensus restriction comes
/// for free because averaging `Y+` gives back the average of `U`.
fn sweep(
    problem: &Problem,
    config: &SolverConfig,
    exchange: &mut dyn Exchange,
    y: &ProductVector,
    xi: &ProductVector,
) -> Result<(ProductVector, ProductVector, ProductVector), SolverError> {
    let (mu1, mu2) = (config.mu1, config.mu2);
    let w = y.lincomb(1.0, xi, -mu1);
    let s = problem.prox(&w, mu1)?;
    // nu = -xi - (s - y) / mu1
    let nu = xi.lincomb(-1.0, &s.sub(y), -1.0 / mu1);
    let u = s.lincomb(1.0, &nu, -mu2);
    let avg = exchange.average(problem.coupling(), &u);
    let y_next = u.lincomb(1.0 / (1.0 + mu2), &avg, mu2 / (1.0 + mu2));
    // xi+ = -nu + (s - y+) / mu2
    let xi_next = nu.lincomb(-1.0, &s.sub(&y_next), 1.0 / mu2);
    Ok((y_next, xi_next, avg))
}

pub(super) fn run_alm(
    problem: &Problem,
    config: &SolverConfig,
    exchange: &mut dyn Exchange,
) -> Result<SolveReport, SolverError> {
    let coupling = problem.coupling();
    let v0 = config.initial_point(coupling.n_global());
    let mut y = coupling.scatter(&v0)?;
    let mut xi = y.zeros_like();
    let mut monitor = Monitor::new(problem, config);
    let mut v = v0;
    for k in 1..=config.max_iter {
        let (y_next, xi_next, consensus) = sweep(problem, config, exchange, &y, &xi)?;
        y = y_next;
        xi = xi_next;
        let p = problem.project(&y)?;
        v = coupling.first_copy(&consensus);
        if monitor.observe_split(k, &y, &p, &consensus, &v, exchange.take_counts())? {
            break;
        }
    }
    Ok(monitor.finish(config.algorithm, v, y))
}

pub(super) fn run_falm(
    problem: &Problem,
    config: &SolverConfig,
    exchange: &mut dyn Exchange,
) -> Result<SolveReport, SolverError> {
    let coupling = problem.coupling();
    let v0 = config.initial_point(coupling.n_global());
    let mut y = coupling.scatter(&v0)?;
    let mut xi = y.zeros_like();
    let mut z = y.clone();
    let mut beta = xi.clone();
    let mut t = 1.0;
    let mut monitor = Monitor::new(problem, config);
    let mut v = v0;
    for k in 1..=config.max_iter {
        let (y_next, xi_next, consensus) = sweep(problem, config, exchange, &z, &beta)?;
        let t_new = t_next(t)?;
        let m = (t - 1.0) / t_new;
        z = y_next.lincomb(1.0 + m, &y, -m);
        beta = xi_next.lincomb(1.0 + m, &xi, -m);
        y = y_next;
        xi = xi_next;
        t = t_new;
        let p = problem.project(&y)?;
        v = coupling.first_copy(&consensus);
        if monitor.observe_split(k, &y, &p, &consensus, &v, exchange.take_counts())? {
            break;
        }
    }
    Ok(monitor.finish(config.algorithm, v, y))
}
