//! Neighbour-local convergence and infeasibility detection.
//!
//! Each agent reports whether its iterate satisfies its own constraints and
//! how much its share of the objective moved since the previous iteration.
//! The combination of those reports decides between "feasible point found",
//! "converged to a nonzero objective" (infeasible) and "keep going".

use thiserror::Error;

use crate::coupling::{CouplingStructure, GlobalVector, ProductVector};
use crate::sets::{SetError, SetSpec};

/// Denominators at or below this are treated as zero.
pub const DENOMINATOR_GUARD: f64 = 1e-15;
pub const DEFAULT_RC_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_OBJECTIVE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvergenceError {
    #[error("detector needs at least one agent status")]
    EmptyStatusList,
    #[error(transparent)]
    Set(#[from] SetError),
    #[error("iterate does not conform to the coupling structure")]
    Nonconforming,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentStatus {
    pub locally_feasible: bool,
    pub rc: f64,
    pub local_objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Continue,
    Feasible,
    InfeasibleConverged,
}

/// `num / den` with `0/0 -> 0` and `x/0 -> inf`.
pub fn guarded_ratio(num: f64, den: f64) -> f64 {
    if den <= DENOMINATOR_GUARD {
        if num <= DENOMINATOR_GUARD {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// `T(v) = max_i dist(v restricted to J_i, C_i)`.
pub fn error_bound_t(
    v: &GlobalVector,
    sets: &[SetSpec],
    coupling: &CouplingStructure,
) -> Result<f64, ConvergenceError> {
    let s = coupling
        .scatter(v)
        .map_err(|_| ConvergenceError::Nonconforming)?;
    let mut worst: f64 = 0.0;
    for (set, block) in sets.iter().zip(s.blocks()) {
        worst = worst.max(set.dist(block)?);
    }
    Ok(worst)
}

/// Local relative change of `dist(s, C_i)^2` given the two distances.
pub fn r1_from_distances(dist_prev: f64, dist_curr: f64) -> f64 {
    let prev = dist_prev * dist_prev;
    let curr = dist_curr * dist_curr;
    guarded_ratio((curr - prev).abs(), prev)
}

/// `R1^i` for one agent from consecutive local iterates.
pub fn local_rc_r1(s_prev: &[f64], s_curr: &[f64], set: &SetSpec) -> Result<f64, SetError> {
    Ok(r1_from_distances(set.dist(s_prev)?, set.dist(s_curr)?))
}

/// `R2^i` from the set distances `d` and consensus deviations `e` of two
/// consecutive iterates. Both changes are normalised by the agent's previous
/// total `d_prev^2 + e_prev^2`.
pub fn r2_from_terms(d_prev: f64, d_curr: f64, e_prev: f64, e_curr: f64) -> f64 {
    let den = d_prev * d_prev + e_prev * e_prev;
    let num = (d_curr * d_curr - d_prev * d_prev).abs() + (e_curr * e_curr - e_prev * e_prev).abs();
    guarded_ratio(num, den)
}

/// `R2^i` for one agent. `consensus_prev`/`consensus_curr` are the agent's
/// restrictions of the averaged iterates `C^(k)` and `C^(k+1)`.
pub fn local_rc_r2(
    y_prev: &[f64],
    y_curr: &[f64],
    set: &SetSpec,
    consensus_prev: &[f64],
    consensus_curr: &[f64],
) -> Result<f64, SetError> {
    let d_prev = set.dist(y_prev)?;
    let d_curr = set.dist(y_curr)?;
    let e_prev = crate::sets::distance(y_prev, consensus_prev);
    let e_curr = crate::sets::distance(y_curr, consensus_curr);
    Ok(r2_from_terms(d_prev, d_curr, e_prev, e_curr))
}

pub fn local_feasibility(x: &[f64], set: &SetSpec, tol: f64) -> Result<bool, SetError> {
    set.contains(x, tol)
}

pub fn consensus_check(
    y: &ProductVector,
    coupling: &CouplingStructure,
    tol: f64,
) -> Result<bool, ConvergenceError> {
    let r = coupling
        .consensus_residual(y)
        .map_err(|_| ConvergenceError::Nonconforming)?;
    Ok(r <= tol)
}

/// Combines the per-agent reports. A feasible point wins over a converged
/// objective when both conditions hold in the same iteration.
pub fn detect(
    statuses: &[AgentStatus],
    needs_consensus_check: bool,
    consensus_ok: bool,
    rc_threshold: f64,
    objective_floor: f64,
) -> Result<Verdict, ConvergenceError> {
    if statuses.is_empty() {
        return Err(ConvergenceError::EmptyStatusList);
    }
    let all_feasible = statuses.iter().all(|s| s.locally_feasible);
    if all_feasible && (consensus_ok || !needs_consensus_check) {
        return Ok(Verdict::Feasible);
    }
    let settled = statuses.iter().all(|s| s.rc < rc_threshold);
    let worst = statuses
        .iter()
        .map(|s| s.local_objective)
        .fold(0.0f64, f64::max);
    if settled && worst > objective_floor {
        return Ok(Verdict::InfeasibleConverged);
    }
    Ok(Verdict::Continue)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::build_coupling;

    fn pair_infeasible() -> (CouplingStructure, Vec<SetSpec>) {
        let c = build_coupling(vec![vec![0], vec![0]], 1).unwrap();
        let sets = vec![
            SetSpec::halfspace(vec![1.0], 0.0).unwrap(),
            SetSpec::halfspace(vec![-1.0], -1.0).unwrap(),
        ];
        (c, sets)
    }

    #[test]
    fn error_bound_examples() {
        let (c, sets) = pair_infeasible();
        assert_eq!(error_bound_t(&vec![0.5].into(), &sets, &c).unwrap(), 0.5);
        assert_eq!(error_bound_t(&vec![0.0].into(), &sets, &c).unwrap(), 1.0);

        let feasible = vec![
            SetSpec::halfspace(vec![1.0], 2.0).unwrap(),
            SetSpec::boxed(vec![1.0], vec![5.0]).unwrap(),
        ];
        assert_eq!(error_bound_t(&vec![1.5].into(), &feasible, &c).unwrap(), 0.0);
    }

    #[test]
    fn r1_examples() {
        assert_eq!(r1_from_distances(0.0, 0.0), 0.0);
        assert_eq!(r1_from_distances(1.0, 0.5), 0.75);
        assert_eq!(r1_from_distances(0.3, 0.3), 0.0);
        assert_eq!(r1_from_distances(0.0, 0.1), f64::INFINITY);

        let set = SetSpec::halfspace(vec![1.0], 0.0).unwrap();
        assert_eq!(local_rc_r1(&[1.0], &[0.5], &set).unwrap(), 0.75);
    }

    #[test]
    fn r2_examples() {
        let set = SetSpec::boxed(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(
            local_rc_r2(&[0.5], &[0.5], &set, &[0.5], &[0.5]).unwrap(),
            0.0
        );
        // no consensus deviation: reduces to R1
        assert_eq!(
            local_rc_r2(&[2.0], &[1.5], &set, &[2.0], &[1.5]).unwrap(),
            r1_from_distances(1.0, 0.5)
        );
        // y: 2.0 -> 1.5 against [0,1]: d 1.0 -> 0.5
        // consensus 1.0 -> 1.25: e 1.0 -> 0.25
        // (|0.25 - 1| + |0.0625 - 1|) / (1 + 1) = 0.84375
        let r = local_rc_r2(&[2.0], &[1.5], &set, &[1.0], &[1.25]).unwrap();
        assert!((r - 0.84375).abs() < 1e-12);
    }

    #[test]
    fn feasibility_checks() {
        let (c, sets) = pair_infeasible();
        let y = c.scatter(&vec![0.5].into()).unwrap();
        assert!(!local_feasibility(y.block(0), &sets[0], 1e-6).unwrap());
        assert!(!local_feasibility(y.block(1), &sets[1], 1e-6).unwrap());
        assert!(consensus_check(&y, &c, 1e-6).unwrap());

        let y = ProductVector::from_blocks(&[vec![0.0], vec![1.0]]);
        assert!(!consensus_check(&y, &c, 1e-6).unwrap());
    }

    #[test]
    fn detect_examples() {
        let ok = AgentStatus {
            locally_feasible: true,
            rc: 0.3,
            local_objective: 0.0,
        };
        assert_eq!(detect(&[ok, ok], true, true, 1e-4, 1e-8).unwrap(), Verdict::Feasible);
        assert_eq!(detect(&[ok, ok], true, false, 1e-4, 1e-8).unwrap(), Verdict::Continue);
        assert_eq!(detect(&[ok, ok], false, false, 1e-4, 1e-8).unwrap(), Verdict::Feasible);

        let stuck = AgentStatus {
            locally_feasible: false,
            rc: 1e-6,
            local_objective: 0.25,
        };
        let calm = AgentStatus {
            locally_feasible: true,
            rc: 0.0,
            local_objective: 0.0,
        };
        assert_eq!(
            detect(&[stuck, calm], false, true, 1e-4, 1e-8).unwrap(),
            Verdict::InfeasibleConverged
        );

        let moving = AgentStatus { rc: 0.5, ..stuck };
        assert_eq!(detect(&[moving, calm], false, true, 1e-4, 1e-8).unwrap(), Verdict::Continue);

        let tiny = AgentStatus {
            local_objective: 1e-12,
            ..stuck
        };
        assert_eq!(detect(&[tiny], false, true, 1e-4, 1e-8).unwrap(), Verdict::Continue);

        assert_eq!(
            detect(&[], false, true, 1e-4, 1e-8),
            Err(ConvergenceError::EmptyStatusList)
        );
    }

    #[test]
    fn feasible_takes_precedence() {
        let both = AgentStatus {
            locally_feasible: true,
            rc: 0.0,
            local_objective: 1.0,
        };
        assert_eq!(detect(&[both], false, true, 1e-4, 1e-8).unwrap(), Verdict::Feasible);
    }
}
