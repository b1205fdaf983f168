mod common;

use cfp_split::convergence::{error_bound_t, local_rc_r1};
use cfp_split::solvers::{solve, Algorithm, SolverConfig};
use cfp_split::GlobalVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn local_bounds_dominate_global_relative_change(seed in any::<u64>()) {
        let (problem, _) = common::random_feasible(seed);
        let mut c = SolverConfig::new(Algorithm::Fb).with_initial(common::start(&problem, seed)).with_max_iter(40);
        c.run_to_max_iter = true;
        c.record_iterates = true;
        let report = solve(&problem, &c).unwrap();
        let coupling = problem.coupling();
        let blocks = |v: &[f64]| coupling.scatter(&GlobalVector(v.to_vec())).unwrap();
        for pair in report.trace.windows(2) {
            let prev = blocks(pair[0].v.as_ref().unwrap());
            let curr = blocks(pair[1].v.as_ref().unwrap());
            let mut f_prev = 0.0;
            let mut f_curr = 0.0;
            let mut bound = 0.0;
            for (i, set) in problem.sets().iter().enumerate() {
                f_prev += 0.5 * set.dist(prev.block(i)).unwrap().powi(2);
                f_curr += 0.5 * set.dist(curr.block(i)).unwrap().powi(2);
                bound += local_rc_r1(prev.block(i), curr.block(i), set).unwrap();
            }
            if f_prev > 0.0 {
                // agents whose squared distances stay below the 1e-15 guard
                // report zero
                let guard = problem.sets().len() as f64 * 1e-15 / f_prev;
                let global = (f_curr - f_prev).abs() / f_prev;
                prop_assert!(global <= bound * (1.0 + 1e-12) + guard, "k {}: {} > {}", pair[1].k, global, bound);
            }
        }
    }

    #[test]
    fn error_bound_is_max_of_agent_distances(seed in any::<u64>()) {
        let (problem, anchor) = common::random_feasible(seed);
        let coupling = problem.coupling();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..coupling.n_global()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mut expected: f64 = 0.0;
        for (i, set) in problem.sets().iter().enumerate() {
            let local: Vec<f64> = coupling.index_set(i).iter().map(|&j| v[j]).collect();
            expected = expected.max(set.dist(&local).unwrap());
        }
        let t = error_bound_t(&GlobalVector(v), problem.sets(), coupling).unwrap();
        prop_assert_eq!(t, expected);
        let at_anchor = error_bound_t(&GlobalVector(anchor), problem.sets(), coupling).unwrap();
        prop_assert!(at_anchor <= 1e-12);
    }
}
