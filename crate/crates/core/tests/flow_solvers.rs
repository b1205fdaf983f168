mod common;

use cfp_split::flowprob::{build_problem, maxflow_feasible, violations};
use cfp_split::solvers::{solve, Algorithm, SolveStatus, SolverConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn oracle_feasible_flows_are_never_declared_infeasible(n in 5usize..=10, seed in any::<u64>()) {
        let inst = common::calibrated_feasible(n, seed);
        prop_assert!(maxflow_feasible(&inst).0);
        let problem = build_problem(&inst).unwrap();
        for alg in Algorithm::ALL {
            let report = solve(&problem, &SolverConfig::new(alg).with_max_iter(20_000)).unwrap();
            prop_assert_ne!(report.status, SolveStatus::Infeasible, "{}", alg.name());
        }
    }
}

#[test]
fn feasible_verdicts_satisfy_flow_constraints() {
    for seed in 0..4 {
        let inst = common::calibrated_feasible(8, seed);
        let problem = build_problem(&inst).unwrap();
        let coupling = problem.coupling();
        for alg in Algorithm::ALL {
            // a residual of a row with k unit entries is at most sqrt(k)
            // times the distance to the node's set
            let mut config = SolverConfig::new(alg);
            config.feas_tol = 1e-7;
            let report = solve(&problem, &config).unwrap();
            assert_eq!(report.status, SolveStatus::Feasible, "{} seed {seed}", alg.name());
            let s = coupling.scatter(&report.final_v).unwrap();
            let v = violations(&inst, coupling, &s).unwrap();
            assert!(v.max() <= 1e-6, "{} seed {seed}: {v:?}", alg.name());
        }
    }
}

#[test]
fn calibrated_infeasible_flows_are_detected() {
    let mut checked = 0;
    for seed in 0..40 {
        let Some(inst) = common::calibrated_infeasible(8, seed) else {
            continue;
        };
        assert!(!maxflow_feasible(&inst).0);
        let problem = build_problem(&inst).unwrap();
        for alg in Algorithm::ALL {
            let report = solve(&problem, &SolverConfig::new(alg).with_max_iter(50_000)).unwrap();
            assert_eq!(report.status, SolveStatus::Infeasible, "{} seed {seed}", alg.name());
        }
        checked += 1;
        if checked == 3 {
            return;
        }
    }
    panic!("only {checked} infeasible calibrations in 40 graphs");
}

#[test]
fn unit_step_fb_tracks_von_neumann_on_flows() {
    for seed in 0..3 {
        let inst = common::calibrated_feasible(10, seed);
        let problem = build_problem(&inst).unwrap();
        let run = |alg| {
            let mut c = SolverConfig::new(alg).with_max_iter(100);
            c.run_to_max_iter = true;
            c.record_iterates = true;
            solve(&problem, &c).unwrap()
        };
        let (fb, vn) = (run(Algorithm::Fb), run(Algorithm::Vn));
        for (a, b) in fb.trace.iter().zip(&vn.trace) {
            let (va, vb) = (a.v.as_ref().unwrap(), b.v.as_ref().unwrap());
            for (x, y) in va.iter().zip(vb) {
                assert!((x - y).abs() <= 1e-12, "seed {seed} k {}", a.k);
            }
        }
    }
}
