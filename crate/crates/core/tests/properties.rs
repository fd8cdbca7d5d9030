//! Property tests for the structural invariants: ingestion round-trips,
//! simplex constraints, p-value ranges and monotonicity, and BH conservatism.

use momentmix::graph_io::{load_edge_list, LoadOptions};
use momentmix::linalg::Mat;
use momentmix::synthgen::{sample_memberships, DirichletSpec};
use momentmix::validation::{
    benjamini_hochberg, bridgeness, build_match_graph, pvalue_matrix, recovery_ratio,
    special::t_upper_tail, PvalMatrix,
};
use proptest::prelude::*;
use std::io::Write;

fn arbitrary_edges() -> impl Strategy<Value = Vec<(u8, u8, u8)>> {
    prop::collection::vec((0u8..40, 0u8..40, 1u8..9), 1..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_round_trip(edges in arbitrary_edges(), weighted in any::<bool>(), directed in any::<bool>()) {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for (s, d, w) in &edges {
            if weighted {
                writeln!(f, "{} {} {}", s, d, w).unwrap();
            } else {
                writeln!(f, "{} {}", s, d).unwrap();
            }
        }
        let opts = LoadOptions { directed, weighted, bipartite: false };
        match load_edge_list(f.path(), opts) {
            Err(_) => {
                // only legitimate for inputs that are all self-loops
                prop_assert!(edges.iter().all(|(s, d, _)| s == d));
            }
            Ok(g) => {
                let out = tempfile::NamedTempFile::new().unwrap();
                g.write_edge_list(out.path()).unwrap();
                let g2 = load_edge_list(out.path(), opts).unwrap();
                prop_assert_eq!(g.adjacency().clone(), g2.adjacency().clone());
            }
        }
    }

    #[test]
    fn dirichlet_columns_on_simplex(raw in prop::collection::vec(0.05f64..4.0, 1..6), n in 1usize..40, seed in any::<u64>()) {
        let spec = DirichletSpec::new(raw).unwrap();
        let pi = sample_memberships(&spec, n, seed).unwrap();
        for j in 0..n {
            let col = pi.col(j);
            prop_assert!(col.iter().all(|&v| v >= 0.0));
            let s: f64 = col.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn t_tail_in_unit_interval_and_monotone(t1 in -30.0f64..30.0, t2 in -30.0f64..30.0, df in 1.0f64..500.0) {
        let (p1, p2) = (t_upper_tail(t1, df), t_upper_tail(t2, df));
        prop_assert!((0.0..=1.0).contains(&p1));
        prop_assert!((0.0..=1.0).contains(&p2));
        if t1 < t2 {
            prop_assert!(p1 >= p2 - 1e-12, "upper tail must be nonincreasing in t");
        }
    }

    #[test]
    fn bh_is_conservative_and_recovery_monotone(
        raw in prop::collection::vec(0.0f64..1.0, 4..100),
        q in 0.001f64..0.5,
    ) {
        let adj = benjamini_hochberg(&raw);
        for (p, a) in raw.iter().zip(&adj) {
            // BH never rejects a hypothesis the raw threshold keeps at the
            // same level, because adjusted ≥ raw.
            prop_assert!(a + 1e-15 >= *p);
            prop_assert!(*a <= 1.0 + 1e-15);
        }
        // pack into a matrix and check recovery monotonicity in the threshold
        let k = 2;
        let k_hat = raw.len() / k;
        let values = Mat::from_fn(k, k_hat, |i, j| raw[i * k_hat + j]);
        let pv = PvalMatrix { values, t_stats: Mat::zeros(k, k_hat), n_samples: 100, zero_variance: vec![] };
        let mut prev = -1.0;
        for thr in [0.0, q / 4.0, q, 2.0 * q, 1.0] {
            let r = recovery_ratio(&build_match_graph(&pv, thr, None), k);
            prop_assert!(r >= prev);
            prev = r;
        }
        // BH edges at level q are a subset of raw edges at level q
        let bh_edges = build_match_graph(&pv, q, Some(q)).edges;
        let raw_edges = build_match_graph(&pv, q, None).edges;
        for e in &bh_edges {
            prop_assert!(raw_edges.contains(e));
        }
    }

    #[test]
    fn bridgeness_stays_in_unit_interval(
        entries in prop::collection::vec(0.0f64..5.0, 6..40),
    ) {
        let k_hat = 3;
        let n = entries.len() / k_hat;
        let pi = Mat::from_fn(k_hat, n, |i, j| entries[i * n + j]);
        let degrees = vec![1.0; n];
        let (b, _) = bridgeness(&pi, &degrees).unwrap();
        for v in b {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn pvalues_lie_in_unit_interval(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 12), 2..4),
    ) {
        let n = rows[0].len();
        let truth = Mat::from_fn(rows.len(), n, |i, j| rows[i][j]);
        let pv = pvalue_matrix(&truth, &truth).unwrap();
        for v in pv.values.data() {
            prop_assert!((0.0..=1.0).contains(v));
        }
    }
}
