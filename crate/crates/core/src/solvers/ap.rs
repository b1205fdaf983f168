use crate::coupling::ProductVector;
use crate::sets::distance;

use super::monitor::Monitor;
use super::{Exchange, Problem, SolveReport, SolverConfig, SolverError};

/// Alternating projections between the product of local sets and the
/// consensus subspace.
pub(super) fn run_von_neumann(
    problem: &Problem,
    config: &SolverConfig,
    exchange: &mut dyn Exchange,
) -> Result<SolveReport, SolverError> {
    let coupling = problem.coupling();
    let v0 = config.initial_point(coupling.n_global());
    let mut x = coupling.scatter(&v0)?;
    let mut s = problem.project(&x)?;
    let mut monitor = Monitor::new(problem, config);
    for k in 1..=config.max_iter {
        let displacement = x.distance(&s);
        x = exchange.average(coupling, &s);
        s = problem.project(&x)?;
        let v = coupling.first_copy(&x);
        let counts = exchange.take_counts();
        if monitor.observe_consensual(k, &v, &x, &s, counts, Some(displacement))? {
            return Ok(monitor.finish(config.algorithm, v, x));
        }
    }
    let v = coupling.first_copy(&x);
    Ok(monitor.finish(config.algorithm, v, x))
}

/// Dykstra's variant: each agent carries a correction that steers the
/// sequence to the projection of the starting point onto the intersection.
///
/// The consensual iterate can sit still for hundreds of iterations while a
/// correction slides the shifted point `x - correction` across a normal
/// cone, which the relative-change test alone reads as an infeasible fixed
/// point. Every limit of the method, feasible or not, has `s_i = P_i(x_i)`,
/// so an agent also reports its relative mismatch between the two as a
/// lower bound on its relative change.
pub(super) fn run_dykstra(
    problem: &Problem,
    config: &SolverConfig,
    exchange: &mut dyn Exchange,
) -> Result<SolveReport, SolverError> {
    let coupling = problem.coupling();
    let v0 = config.initial_point(coupling.n_global());
    let mut x = coupling.scatter(&v0)?;
    let mut correction = x.zeros_like();
    let mut monitor = Monitor::new(problem, config);
    for k in 1..=config.max_iter {
        let shifted = x.sub(&correction);
        let s = problem.project(&shifted)?;
        let next = exchange.average(coupling, &s);
        correction = correction.lincomb(1.0, &s.sub(&x), 1.0);
        x = next;
        let displacement = x.distance(&s);
        let p = problem.project(&x)?;
        monitor.raise_rc(mismatch(&x, &s, &p, config.feas_tol));
        let v = coupling.first_copy(&x);
        let counts = exchange.take_counts();
        if monitor.observe_consensual(k, &v, &x, &p, counts, Some(displacement))? {
            return Ok(monitor.finish(config.algorithm, v, x));
        }
    }
    let v = coupling.first_copy(&x);
    Ok(monitor.finish(config.algorithm, v, x))
}

/// Per agent `|P_i(x_i) - s_i| / max(|x_i - s_i|, |x_i - P_i(x_i)|)`, zero
/// when both points are within `tol` of `x_i`, where the ratio is rounding
/// noise over rounding noise.
fn mismatch(x: &ProductVector, s: &ProductVector, p: &ProductVector, tol: f64) -> Vec<f64> {
    (0..x.num_blocks())
        .map(|i| {
            let scale = distance(x.block(i), s.block(i)).max(distance(x.block(i), p.block(i)));
            if scale <= tol {
                0.0
            } else {
                distance(p.block(i), s.block(i)) / scale
            }
        })
        .collect()
}
