//! Property tests for the structural invariants: shell partitions, the
//! estimator-collapse chain, and data-format round trips.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use netdyad::dyad::{build_dyad_index, build_dyad_network, NodeGraph};
use netdyad::io::{parse_dyadic_csv, write_dyadic_csv};
use netdyad::regression::RegressionData;
use netdyad::variance::{
    dyadic_robust_variance, ehw_variance, network_hac_variance, Kernel,
};
use proptest::prelude::*;

/// Edge sets over up to 8 nodes, at least one edge.
fn arb_graph() -> impl Strategy<Value = NodeGraph> {
    (2usize..=8)
        .prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .collect();
            let len = pairs.len();
            (Just(n), Just(pairs), prop::collection::vec(any::<bool>(), len))
        })
        .prop_filter_map("at least one edge", |(n, pairs, mask)| {
            let edges: Vec<(usize, usize)> = pairs
                .into_iter()
                .zip(mask)
                .filter_map(|(e, keep)| keep.then_some(e))
                .collect();
            (!edges.is_empty()).then(|| NodeGraph::new(n, edges).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shells_partition_and_match_degrees(g in arb_graph()) {
        let net = build_dyad_network(build_dyad_index(&g));
        let m = net.n_dyads();
        let dist = floyd_warshall(&net);
        for a in 0..m {
            let shells = net.shells_up_to(a, m).unwrap();
            prop_assert_eq!(shells[0].clone(), vec![a]);
            if m > 0 {
                prop_assert_eq!(shells[1].len(), net.degree(a).unwrap());
            }
            // disjoint union over shells = component of a
            let mut seen = std::collections::HashSet::new();
            for shell in &shells {
                for &d in shell {
                    prop_assert!(seen.insert(d), "dyad {} in two shells", d);
                }
            }
            let component = (0..m).filter(|&b| dist[a][b].is_some()).count();
            prop_assert_eq!(seen.len(), component);
            // neighborhood identity: |M(a;s)| = sum of shell sizes up to s
            for s in 0..shells.len() {
                let nbhd = oracle_neighborhood(&dist, a, s).len();
                let total: usize = shells[..=s].iter().map(|sh| sh.len()).sum();
                prop_assert_eq!(nbhd, total);
            }
        }
    }

    #[test]
    fn distance_is_symmetric(g in arb_graph()) {
        let net = build_dyad_network(build_dyad_index(&g));
        let m = net.n_dyads();
        for a in 0..m {
            for b in (a + 1)..m {
                let ab = net.dyad_distance(a, b, m).unwrap();
                let ba = net.dyad_distance(b, a, m).unwrap();
                prop_assert_eq!(ab, ba);
                let adjacent = net.adjacency(a).unwrap().contains(&b);
                prop_assert_eq!(ab == netdyad::dyad::DyadDistance::Finite(1), adjacent);
            }
        }
    }

    #[test]
    fn estimator_collapse_chain(g in arb_graph(), seed in any::<u64>()) {
        let mut rng = rand::SeedableRng::seed_from_u64(seed);
        if g.n_edges() < 3 {
            return Ok(());
        }
        let (fit, net) = random_fit(&g, 2, &mut rng);
        let ehw = ehw_variance(&fit);
        let dyadic = dyadic_robust_variance(&fit, &net).unwrap();
        let below = network_hac_variance(&fit, &net, Kernel::Rectangular, 0.5).unwrap();
        let at_one = network_hac_variance(&fit, &net, Kernel::Rectangular, 1.0).unwrap();
        prop_assert!(rel_frobenius(&ehw.matrix, &below.matrix) <= 1e-12);
        prop_assert!(rel_frobenius(&dyadic.matrix, &at_one.matrix) <= 1e-12);
    }

    #[test]
    fn dyadic_csv_round_trip(
        g in arb_graph(),
        k in 1usize..4,
        with_group in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let mut rng: rand_chacha::ChaCha8Rng = rand::SeedableRng::seed_from_u64(seed);
        use rand::Rng as _;
        let idx = build_dyad_index(&g);
        let m = idx.len();
        let y = DVector::from_fn(m, |_, _| rng.random::<f64>() * 10.0 - 5.0);
        let x = DMatrix::from_fn(m, k, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let names = (0..k).map(|c| format!("x{}", c + 1)).collect();
        let groups = with_group
            .then(|| (0..m).map(|_| rng.random_range(0..3) as i64).collect::<Vec<_>>());
        let data =
            RegressionData::new(y, x, (0..m).collect(), names, None, groups).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        write_dyadic_csv(&data, &idx, file.path()).unwrap();
        let parsed = parse_dyadic_csv(file.path(), &idx).unwrap();
        prop_assert_eq!(parsed, data);
    }
}
