#![allow(dead_code)]

use cfp_split::coupling::build_coupling;
use cfp_split::flowprob::{calibrate_feasible, calibrate_infeasible, FlowEdge, FlowInstance};
use cfp_split::graphgen::generate_graph;
use cfp_split::sets::SetSpec;
use cfp_split::solvers::Problem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two agents sharing one scalar: agent 0 holds `x <= a`, agent 1 holds
/// `x in [lo, hi]` (or `x >= lo` when `hi` is infinite).
pub fn pair(a: f64, lo: f64, hi: f64) -> Problem {
    let coupling = build_coupling(vec![vec![0], vec![0]], 1).unwrap();
    let first = SetSpec::halfspace(vec![1.0], a).unwrap();
    let second = if hi.is_finite() {
        SetSpec::boxed(vec![lo], vec![hi]).unwrap()
    } else {
        SetSpec::halfspace(vec![-1.0], -lo).unwrap()
    };
    Problem::new(coupling, vec![first, second]).unwrap()
}

/// `C1 = {x <= 2}`, `C2 = [1, 5]`; intersection `[1, 2]`.
pub fn pair_feasible() -> Problem {
    pair(2.0, 1.0, 5.0)
}

/// `C1 = {x <= 0}`, `C2 = {x >= 1}`; `dist(C, D)^2 = 1/2`.
pub fn pair_infeasible() -> Problem {
    pair(0.0, 1.0, f64::INFINITY)
}

/// Random loosely coupled problem whose sets all contain a common anchor
/// point, so it is feasible. Sets mix boxes, halfspaces and composites.
pub fn random_feasible(seed: u64) -> (Problem, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=8);
    let agents = rng.gen_range(2..=5);
    let mut index_sets: Vec<Vec<usize>> = (0..agents)
        .map(|_| (0..n).filter(|_| rng.gen_bool(0.4)).collect())
        .collect();
    for j in 0..n {
        if !index_sets.iter().any(|s| s.contains(&j)) {
            let i = rng.gen_range(0..agents);
            index_sets[i].push(j);
        }
    }
    for s in index_sets.iter_mut() {
        if s.is_empty() {
            s.push(rng.gen_range(0..n));
        }
        s.sort_unstable();
        s.dedup();
    }
    let anchor: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let sets = index_sets
        .iter()
        .map(|set| {
            let local: Vec<f64> = set.iter().map(|&j| anchor[j]).collect();
            random_set_around(&mut rng, &local)
        })
        .collect();
    let coupling = build_coupling(index_sets, n).unwrap();
    (Problem::new(coupling, sets).unwrap(), anchor)
}

fn random_set_around(rng: &mut ChaCha8Rng, point: &[f64]) -> SetSpec {
    let m = point.len();
    let boxed = |rng: &mut ChaCha8Rng| {
        let lower = point.iter().map(|p| p - rng.gen_range(0.0..1.0)).collect();
        let upper = point.iter().map(|p| p + rng.gen_range(0.0..1.0)).collect();
        SetSpec::boxed(lower, upper).unwrap()
    };
    let half = |rng: &mut ChaCha8Rng| {
        let a: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let b = a.iter().zip(point).map(|(x, y)| x * y).sum::<f64>() + rng.gen_range(0.0..0.5);
        SetSpec::halfspace(a, b).unwrap()
    };
    match rng.gen_range(0..3) {
        0 => boxed(rng),
        1 => half(rng),
        _ => {
            let b = boxed(rng);
            let h = half(rng);
            SetSpec::composite(vec![b, h]).unwrap()
        }
    }
}

pub fn start(problem: &Problem, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..problem.coupling().n_global())
        .map(|_| rng.gen_range(-6.0..6.0))
        .collect()
}

/// Calibrated feasible flow instance on a random `n`-node graph.
pub fn calibrated_feasible(n: usize, seed: u64) -> FlowInstance {
    let graph = generate_graph(n, seed, 1000).unwrap().to_flow_graph();
    calibrate_feasible(&graph).unwrap().instance
}

/// Calibrated infeasible flow instance, or `None` when the graph's
/// bottleneck sits at the source or sink.
pub fn calibrated_infeasible(n: usize, seed: u64) -> Option<FlowInstance> {
    let graph = generate_graph(n, seed, 1000).unwrap().to_flow_graph();
    calibrate_infeasible(&graph).ok().map(|c| c.instance)
}

/// Random graph with independently drawn edge capacities, nodal
/// capacities and injection; roughly half of these are feasible.
pub fn random_flow_instance(n: usize, seed: u64) -> FlowInstance {
    let graph = generate_graph(n, seed, 1000).unwrap().to_flow_graph();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf10e);
    let edges = graph
        .arcs
        .iter()
        .map(|&(from, to)| FlowEdge {
            from,
            to,
            capacity: rng.gen_range(0.0..10.0),
        })
        .collect();
    let nodal = (0..n).map(|_| rng.gen_range(0.0..20.0)).collect();
    let injection = rng.gen_range(0.5..12.0);
    FlowInstance::new(n, edges, nodal, graph.source, graph.sink, injection).unwrap()
}
