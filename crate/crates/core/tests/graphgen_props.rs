use cfp_split::graphgen::{generate_graph, pick_source_sink, SignedAdjacency};
use proptest::prelude::*;

fn undirected_components(adj: &SignedAdjacency) -> usize {
    let n = adj.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in 0..n {
            if adj.get(i, j) != 0 {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&i| root(&mut parent, i) == i).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_graphs_satisfy_invariants(n in 4usize..=30, seed in any::<u64>()) {
        let adj = generate_graph(n, seed, 1000).unwrap();
        prop_assert_eq!(adj.n(), n);
        for i in 0..n {
            prop_assert_eq!(adj.get(i, i), 0);
            for j in 0..n {
                prop_assert_eq!(adj.get(i, j), -adj.get(j, i));
                prop_assert!([-1, 0, 1].contains(&adj.get(i, j)));
            }
            let row: Vec<i8> = (0..n).map(|j| adj.get(i, j)).collect();
            prop_assert!(row.iter().filter(|&&x| x != 0).count() >= 3);
            prop_assert!(row.contains(&1));
            prop_assert!(row.contains(&-1));
        }
        prop_assert_eq!(undirected_components(&adj), 1);
    }

    #[test]
    fn same_seed_same_graph(n in 4usize..=30, seed in any::<u64>()) {
        prop_assert_eq!(generate_graph(n, seed, 1000), generate_graph(n, seed, 1000));
    }

    #[test]
    fn arcs_follow_positive_entries(n in 4usize..=20, seed in any::<u64>()) {
        let adj = generate_graph(n, seed, 1000).unwrap();
        let arcs = adj.arcs();
        let positive = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| adj.get(i, j) == 1)
            .count();
        prop_assert_eq!(arcs.len(), positive);
        for &(i, j) in &arcs {
            prop_assert_eq!(adj.get(i, j), 1);
        }
    }

    #[test]
    fn source_and_sink_have_extreme_degrees(n in 4usize..=30, seed in any::<u64>()) {
        let adj = generate_graph(n, seed, 1000).unwrap();
        let (u, o) = pick_source_sink(&adj);
        prop_assert_ne!(u, o);
        let out: Vec<usize> = (0..n).map(|i| (0..n).filter(|&j| adj.get(i, j) == 1).count()).collect();
        let inn: Vec<usize> = (0..n).map(|i| (0..n).filter(|&j| adj.get(i, j) == -1).count()).collect();
        prop_assert_eq!(out[u], *out.iter().max().unwrap());
        prop_assert!(out[..u].iter().all(|&d| d < out[u]));
        let best_in = (0..n).filter(|&i| i != u).map(|i| inn[i]).max().unwrap();
        prop_assert_eq!(inn[o], best_in);
    }
}

#[test]
fn different_seeds_differ() {
    assert_ne!(generate_graph(20, 1, 1000), generate_graph(20, 2, 1000));
}

#[test]
fn sixty_node_variable_counts_match_reported_range() {
    // reported local plus global variable counts for 60-node instances lie
    // in [936, 1146]; each edge is one global and two local variables
    let counts: Vec<usize> = (0..10)
        .map(|s| 3 * generate_graph(60, s, 1000).unwrap().arcs().len())
        .collect();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    assert!((936.0..=1146.0).contains(&mean), "{counts:?}");
}
