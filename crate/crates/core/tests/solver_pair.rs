mod common;

use cfp_split::coupling::build_coupling;
use cfp_split::sets::SetSpec;
use cfp_split::solvers::{solve, t_next, theta_next, Algorithm, Problem, SolveStatus, SolverConfig};
use common::{pair_feasible, pair_infeasible};
use proptest::prelude::*;

fn run(problem: &Problem, algorithm: Algorithm, v0: f64, max_iter: usize, to_max: bool) -> cfp_split::SolveReport {
    let mut config = SolverConfig::new(algorithm).with_initial(vec![v0]).with_max_iter(max_iter);
    config.run_to_max_iter = to_max;
    config.record_iterates = true;
    solve(problem, &config).unwrap()
}

fn iterates(report: &cfp_split::SolveReport) -> Vec<f64> {
    report.trace.iter().map(|t| t.v.as_ref().unwrap()[0]).collect()
}

#[test]
fn fb_hand_iterated_sequence() {
    let report = run(&pair_feasible(), Algorithm::Fb, 10.0, 10_000, false);
    let v = iterates(&report);
    // v+ = (min(v, 2) + clamp(v, 1, 5)) / 2
    assert_eq!(&v[..3], &[3.5, 2.75, 2.375]);
    assert_eq!(report.status, SolveStatus::Feasible);
    assert!((report.final_v.0[0] - 2.0).abs() <= 1e-5);
}

#[test]
fn vn_halves_the_gap_to_two() {
    let report = run(&pair_feasible(), Algorithm::Vn, 10.0, 40, true);
    let v = iterates(&report);
    assert_eq!(v[0], 3.5);
    for w in v.windows(2) {
        let ratio = (w[1] - 2.0) / (w[0] - 2.0);
        assert!(w[0] - 2.0 < 1e-12 || (ratio - 0.5).abs() < 1e-9, "{w:?}");
    }
    assert!((v.last().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn every_algorithm_finds_the_feasible_interval() {
    for alg in Algorithm::ALL {
        let report = run(&pair_feasible(), alg, 10.0, 10_000, false);
        assert_eq!(report.status, SolveStatus::Feasible, "{alg}");
        let v = report.final_v.0[0];
        assert!((1.0 - 1e-5..=2.0 + 1e-5).contains(&v), "{alg}: {v}");
    }
}

#[test]
fn dykstra_limit_is_the_projection_of_the_start() {
    let report = run(&pair_feasible(), Algorithm::Dykstra, 10.0, 10_000, false);
    assert!((report.final_v.0[0] - 2.0).abs() <= 1e-5);
    let report = run(&pair_feasible(), Algorithm::Dykstra, -4.0, 10_000, false);
    assert!((report.final_v.0[0] - 1.0).abs() <= 1e-5);
}

#[test]
fn infeasible_objective_limits() {
    let problem = pair_infeasible();
    let cases = [
        (Algorithm::Fb, 0.25),
        (Algorithm::Afb, 0.25),
        (Algorithm::Alm, 0.125),
        (Algorithm::Falm, 0.125),
        (Algorithm::Dr, 0.125),
    ];
    for (alg, limit) in cases {
        let report = run(&problem, alg, 3.0, 2000, true);
        assert_eq!(report.status, SolveStatus::Infeasible, "{alg}");
        let f = report.final_objective();
        assert!((f - limit).abs() <= 1e-6, "{alg}: {f}");
    }
    for alg in [Algorithm::Vn, Algorithm::Dykstra] {
        let report = run(&problem, alg, 3.0, 2000, true);
        assert_eq!(report.status, SolveStatus::Infeasible, "{alg}");
        let d = report.trace.last().unwrap().displacement.unwrap();
        assert!((d - 0.5f64.sqrt()).abs() <= 1e-6, "{alg}: {d}");
    }
}

#[test]
fn vn_infeasible_fixed_point() {
    let report = run(&pair_infeasible(), Algorithm::Vn, 7.0, 200, true);
    assert!((report.final_v.0[0] - 0.5).abs() < 1e-12);
    let s = report.final_s.as_slice();
    assert!((s[0] - 0.5).abs() < 1e-12 && (s[1] - 0.5).abs() < 1e-12);
}

#[test]
fn mpa_matches_vn_on_the_pair() {
    let problem = pair_infeasible();
    let vn = iterates(&run(&problem, Algorithm::Vn, 7.0, 100, true));
    let mpa = iterates(&run(&problem, Algorithm::Mpa, 7.0, 100, true));
    for (a, b) in vn.iter().zip(&mpa) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert!((mpa.last().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn unconstrained_dr_stops_at_first_iteration() {
    let coupling = build_coupling(vec![vec![0, 1], vec![1, 2]], 3).unwrap();
    let problem = Problem::new(
        coupling,
        vec![SetSpec::unconstrained(2), SetSpec::unconstrained(2)],
    )
    .unwrap();
    let config = SolverConfig::new(Algorithm::Dr).with_initial(vec![1.0, -2.0, 3.0]);
    let report = solve(&problem, &config).unwrap();
    assert_eq!(report.status, SolveStatus::Feasible);
    assert_eq!(report.iterations, 1);
}

#[test]
fn single_set_dykstra_projects_once() {
    let coupling = build_coupling(vec![vec![0, 1]], 2).unwrap();
    let set = SetSpec::composite(vec![
        SetSpec::hyperplane(vec![1.0, 1.0], 1.0).unwrap(),
        SetSpec::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
    ])
    .unwrap();
    let problem = Problem::new(coupling, vec![set]).unwrap();
    let config = SolverConfig::new(Algorithm::Dykstra).with_initial(vec![3.0, 0.0]);
    let report = solve(&problem, &config).unwrap();
    assert_eq!(report.status, SolveStatus::Feasible);
    assert_eq!(report.iterations, 1);
    assert!((report.final_v.0[0] - 1.0).abs() < 1e-9 && report.final_v.0[1].abs() < 1e-9);
}

#[test]
fn single_affine_set_mpa_converges_in_one_step() {
    let coupling = build_coupling(vec![vec![0, 1, 2]], 3).unwrap();
    let set = SetSpec::hyperplane(vec![1.0, 2.0, -1.0], 4.0).unwrap();
    let problem = Problem::new(coupling, vec![set]).unwrap();
    let config = SolverConfig::new(Algorithm::Mpa).with_initial(vec![5.0, -1.0, 2.0]);
    let report = solve(&problem, &config).unwrap();
    assert_eq!(report.status, SolveStatus::Feasible);
    assert_eq!(report.iterations, 1);
}

#[test]
fn alm_from_a_feasible_consensual_point() {
    let report = run(&pair_feasible(), Algorithm::Alm, 1.5, 100, false);
    assert_eq!(report.status, SolveStatus::Feasible);
    assert_eq!(report.iterations, 1);
}

#[test]
fn vn_from_the_intersection_stays_put() {
    let report = run(&pair_feasible(), Algorithm::Vn, 1.5, 50, true);
    assert!(iterates(&report).iter().all(|&v| v == 1.5));
}

#[test]
fn falm_needs_no_more_iterations_than_alm() {
    let problem = pair_infeasible();
    let first_within = |alg| {
        let report = run(&problem, alg, 3.0, 5000, true);
        report
            .trace
            .iter()
            .position(|t| (t.objective - 0.125).abs() <= 1e-6)
            .expect("reaches the limit")
    };
    let alm = first_within(Algorithm::Alm);
    let falm = first_within(Algorithm::Falm);
    assert!(falm <= alm, "falm {falm} vs alm {alm}");
}

#[test]
fn theta_and_t_examples() {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    assert!((theta_next(1.0).unwrap() - golden).abs() < 1e-15);
    let t2 = t_next(1.0).unwrap();
    assert!((t2 - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-15);
    assert!((t_next(t2).unwrap() - (1.0 + (1.0 + t2 * t2).sqrt()) / 2.0).abs() < 1e-15);
    assert!((t_next(3.0).unwrap() - (1.0 + 10f64.sqrt()) / 2.0).abs() < 1e-15);
    assert!(theta_next(0.0).is_err() && theta_next(1.5).is_err() && t_next(0.5).is_err());
}

proptest! {
    #[test]
    fn theta_recursion_identity(theta in 1e-6f64..=1.0) {
        let next = theta_next(theta).unwrap();
        prop_assert!(next > 0.0 && next < theta);
        let lhs = (1.0 - next) / (next * next);
        prop_assert!((lhs - 1.0 / (theta * theta)).abs() <= 1e-12 * (1.0 / (theta * theta)).max(1.0));
    }

    #[test]
    fn t_recursion_bound(t in 1.0f64..1e6) {
        let next = t_next(t).unwrap();
        prop_assert!(next >= (t + 1.0) / 2.0);
        prop_assert_eq!(next, (1.0 + (1.0 + t * t).sqrt()) / 2.0);
    }
}
