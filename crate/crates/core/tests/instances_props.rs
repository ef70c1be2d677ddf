use physarum_core::instances::{generate, shortest_path, GeneratorSpec, InstanceError, RandomLpSpec};
use physarum_core::model::parse_instance;
use physarum_core::{enumerate_bfs, Mode};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn random_lps_are_feasible_and_reproducible(n in 1usize..=3, extra in 0usize..=3, seed in any::<u64>()) {
        let spec = GeneratorSpec::RandomPositiveLp(RandomLpSpec::new(n, n + extra, seed));
        let g = generate(&spec).unwrap();
        prop_assert_eq!(g.instance.n(), n);
        prop_assert!(g.instance.c().iter().all(|&c| c >= 1));
        prop_assert!(enumerate_bfs(&g.instance).is_ok());
        prop_assert_eq!(generate(&spec).unwrap().instance.to_json(None), g.instance.to_json(None));
    }

    #[test]
    fn graphs_are_incidence_matrices(nodes in 2usize..=5, extra in 0usize..=4, seed in any::<u64>()) {
        let spec = GeneratorSpec::ShortestPath { nodes, edges: nodes - 1 + extra, max_cost: 4, mode: Mode::Directed, seed };
        match generate(&spec) {
            Ok(g) => {
                let a = g.instance.a();
                for e in 0..a.cols() {
                    let col = a.column(e);
                    prop_assert!(col.iter().filter(|v| **v == 1).count() <= 1);
                    prop_assert!(col.iter().filter(|v| **v == -1).count() <= 1);
                    prop_assert!(col.iter().all(|v| v.abs() <= 1));
                }
                prop_assert_eq!(g.instance.b().iter().sum::<i64>(), 1);
                prop_assert!(enumerate_bfs(&g.instance).is_ok());
            }
            Err(e) => prop_assert_eq!(e, InstanceError::Rejected(1000)),
        }
    }

    #[test]
    fn json_round_trip(n in 1usize..=3, extra in 0usize..=3, seed in any::<u64>()) {
        let g = generate(&GeneratorSpec::RandomPositiveLp(RandomLpSpec::new(n, n + extra, seed))).unwrap();
        let text = g.instance.to_json(Some(vec![0.5; n + extra]));
        let (back, x0) = parse_instance(&text).unwrap();
        prop_assert_eq!(back, g.instance);
        prop_assert_eq!(x0, Some(vec![0.5; n + extra]));
    }
}

#[test]
fn sink_can_be_any_node() {
    let inst = shortest_path(3, &[(0, 2, 1), (2, 1, 1), (0, 1, 3)], 0, 1, Mode::Directed).unwrap();
    let report = enumerate_bfs(&inst).unwrap();
    assert_eq!(report.opt_f64(), 2.0);
}

#[test]
fn undirected_paths_ignore_orientation() {
    let edges = [(1, 0, 1), (1, 2, 1)];
    assert_eq!(shortest_path(3, &edges, 0, 2, Mode::Directed), Err(InstanceError::DegenerateGraph));
    let inst = shortest_path(3, &edges, 0, 2, Mode::Undirected).unwrap();
    assert_eq!(enumerate_bfs(&inst).unwrap().opt_f64(), 2.0);
}

#[test]
fn transshipment_balances_supplies() {
    let spec = GeneratorSpec::Transshipment { nodes: 5, edges: 9, max_cost: 4, max_supply: 3, seed: 11 };
    let g = generate(&spec).unwrap();
    assert_eq!(g.instance.m(), 9);
    assert!(enumerate_bfs(&g.instance).is_ok());
}
