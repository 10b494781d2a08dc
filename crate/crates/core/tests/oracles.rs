//! Library kernels against independent brute-force implementations.

mod common;

use clustershape::bottleneck::{bottleneck_distance, bottleneck_distance_with, bottleneck_oracle, Feasibility};
use clustershape::eval::paired_t_test;
use clustershape::hclust::{clustering_diagram, linkage, pairwise_distances, ClusteringDiagram, Linkage};
use clustershape::persistence::{rips_dim0, rips_dim1};
use common::{dense_dim1_pairs, naive_linkage_heights, prim_mst_weights, random_cloud, t_test_p_oracle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dim1_matches_dense_reduction_on_random_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..60 {
        let n = rng.random_range(3..=11);
        let cloud = if trial % 2 == 0 {
            random_cloud(&mut rng, n, 10.0)
        } else {
            // Integer coordinates: plenty of equal distances.
            (0..n)
                .map(|_| (rng.random_range(0..5) as f64, rng.random_range(0..5) as f64))
                .collect()
        };
        let dm = pairwise_distances(&cloud).unwrap();
        let got: Vec<(f64, f64)> = rips_dim1(&dm)
            .unwrap()
            .pairs
            .iter()
            .map(|p| (p.birth, p.death))
            .collect();
        assert_eq!(got, dense_dim1_pairs(&dm), "trial {trial}");
    }
}

#[test]
fn single_linkage_heights_are_mst_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let n = rng.random_range(2..=40);
        let dm = pairwise_distances(&random_cloud(&mut rng, n, 27.0)).unwrap();
        let heights: Vec<f64> = linkage(&dm, Linkage::Single).unwrap().heights().collect();
        assert_eq!(heights, prim_mst_weights(&dm));
        assert_eq!(rips_dim0(&dm).unwrap().deaths(), prim_mst_weights(&dm));
    }
}

#[test]
fn lance_williams_matches_definitional_linkage() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let n = rng.random_range(2..=25);
        let cloud = random_cloud(&mut rng, n, 27.0);
        let dm = pairwise_distances(&cloud).unwrap();
        for m in Linkage::ALL {
            let got = clustering_diagram(&linkage(&dm, m).unwrap()).deaths;
            let want = naive_linkage_heights(&cloud, m);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9 * w.max(1.0), "{m:?}: {got:?} vs {want:?}");
            }
        }
    }
}

#[test]
fn t_test_p_values_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let n = rng.random_range(2..=12);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.4..0.9)).collect();
        let b: Vec<f64> = a.iter().map(|x| x + rng.random_range(-0.05..0.08)).collect();
        let r = paired_t_test(&a, &b).unwrap();
        let want = t_test_p_oracle(r.t_statistic, n - 1);
        assert!(
            (r.p_value - want).abs() < 1e-6,
            "t={} df={} p={} oracle={}",
            r.t_statistic,
            n - 1,
            r.p_value,
            want
        );
    }
}

fn diagram(max_len: usize) -> impl Strategy<Value = ClusteringDiagram> {
    proptest::collection::vec(0.0f64..10.0, 0..=max_len).prop_map(ClusteringDiagram::new)
}

fn grid_diagram(max_len: usize) -> impl Strategy<Value = ClusteringDiagram> {
    proptest::collection::vec(0u8..8, 0..=max_len)
        .prop_map(|v| ClusteringDiagram::new(v.into_iter().map(|x| x as f64 * 0.5).collect()))
}

proptest! {
    #[test]
    fn bottleneck_feasibility_methods_agree(a in diagram(20), b in diagram(20)) {
        prop_assert_eq!(
            bottleneck_distance_with(&a, &b, Feasibility::Greedy),
            bottleneck_distance_with(&a, &b, Feasibility::HopcroftKarp)
        );
    }

    #[test]
    fn bottleneck_matches_oracle_with_ties(a in grid_diagram(6), b in grid_diagram(6)) {
        prop_assert_eq!(bottleneck_distance(&a, &b), bottleneck_oracle(&a, &b).unwrap());
    }
}
