//! Library-level integration tests of the full community pipeline:
//! recovery accuracy on the block model, thresholding extremes, scaling
//! equivariance of the post-processing, and the weighted/bipartite path.

mod common;

use common::mmsb_instance;
use momentmix::linalg::Mat;
use momentmix::pipeline::{fit_community, FitConfig};
use momentmix::postprocess::recover_memberships;
use momentmix::stgd::EigenEstimate;
use momentmix::synthgen::{
    generate_mmsb_bipartite, sample_memberships, DirichletSpec, EdgeModel, GroundTruth, TruthKind,
};
use momentmix::validation::{nmi_overlap, pvalue_matrix};

#[test]
fn block_model_label_accuracy() {
    // Thresholded memberships match the one-hot truth on ≥ 90% of nodes
    // after component matching.
    let n = 1000;
    let k = 5;
    let (graph, pi) = mmsb_instance(n, k, 0.4, 0.05, 0.0, 77);
    let cfg = FitConfig::new(k, 0.0, 9);
    let fit = fit_community(&graph, &cfg).unwrap();
    let pi_hat = &fit.estimate.pi_hat;
    // match estimate rows to truth rows by correlation (evaluation aid)
    let pv = pvalue_matrix(&pi, pi_hat).unwrap();
    let mut assignment = vec![usize::MAX; k];
    let mut used = vec![false; k];
    let mut cells: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..k {
        for j in 0..k {
            cells.push((pv.t_stats.get(i, j), i, j));
        }
    }
    cells.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for (_, i, j) in cells {
        if assignment[i] == usize::MAX && !used[j] {
            assignment[i] = j;
            used[j] = true;
        }
    }
    let mut correct = 0;
    for x in 0..n {
        let true_label = (0..k).find(|&i| pi.get(i, x) == 1.0).unwrap();
        let mut best = (0usize, -1.0);
        for j in 0..k {
            let v = pi_hat.get(j, x);
            if v > best.1 {
                best = (j, v);
            }
        }
        if best.0 == assignment[true_label] {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / n as f64;
    assert!(accuracy >= 0.9, "label accuracy {accuracy}");
    // the overlapping-NMI comparison score should also be high here
    let nmi = nmi_overlap(&pi, pi_hat).unwrap();
    assert!(nmi > 0.5, "nmi {nmi}");
}

#[test]
fn threshold_extremes() {
    let n = 400;
    let k = 3;
    let (graph, _) = mmsb_instance(n, k, 0.5, 0.08, 0.0, 31);
    let cfg = FitConfig::new(k, 0.0, 5);
    let fit = fit_community(&graph, &cfg).unwrap();
    // threshold 1.0 zeroes everything, one warning per node
    let all = recover_memberships(
        &graph,
        &fit.pass1.partition,
        (&fit.pass1.ctx, &fit.pass1.est),
        (&fit.pass2.ctx, &fit.pass2.est),
        1.0,
    )
    .unwrap();
    assert_eq!(all.zeroed_columns, n);
    assert!(all.pi_hat.data().iter().all(|&v| v == 0.0));
    // threshold 0.0 leaves the renormalized raw output: columns sum to 1
    let raw = recover_memberships(
        &graph,
        &fit.pass1.partition,
        (&fit.pass1.ctx, &fit.pass1.est),
        (&fit.pass2.ctx, &fit.pass2.est),
        0.0,
    )
    .unwrap();
    for x in 0..n {
        let s: f64 = (0..k).map(|i| raw.pi_hat.get(i, x)).sum();
        assert!((s - 1.0).abs() < 1e-9, "column {x} sums to {s}");
    }
    assert!(recover_memberships(
        &graph,
        &fit.pass1.partition,
        (&fit.pass1.ctx, &fit.pass1.est),
        (&fit.pass2.ctx, &fit.pass2.est),
        1.5,
    )
    .is_err());
}

#[test]
fn scaling_phi_preserves_thresholded_supports() {
    // Multiplying all φᵢ by a common positive scalar rescales λᵢ by c³ and
    // leaves the thresholded supports unchanged (threshold applies after
    // renormalization).
    let n = 400;
    let k = 3;
    let (graph, _) = mmsb_instance(n, k, 0.5, 0.08, 0.0, 131);
    let cfg = FitConfig::new(k, 0.0, 15);
    let fit = fit_community(&graph, &cfg).unwrap();
    let scale = 1.7;
    let scale_est = |est: &EigenEstimate| EigenEstimate {
        phi: est.phi.scaled(scale),
        lambda: est.lambda.iter().map(|l| l * scale.powi(3)).collect(),
        iterations_run: est.iterations_run,
        final_loss: est.final_loss,
        degenerate_columns: est.degenerate_columns.clone(),
    };
    let est1 = scale_est(&fit.pass1.est);
    let est2 = scale_est(&fit.pass2.est);
    for lam in est1.lambda.iter().zip(&fit.pass1.est.lambda) {
        assert!((lam.0 / lam.1 - scale.powi(3)).abs() < 1e-9);
    }
    let base = recover_memberships(
        &graph,
        &fit.pass1.partition,
        (&fit.pass1.ctx, &fit.pass1.est),
        (&fit.pass2.ctx, &fit.pass2.est),
        0.05,
    )
    .unwrap();
    let scaled = recover_memberships(
        &graph,
        &fit.pass1.partition,
        (&fit.pass1.ctx, &est1),
        (&fit.pass2.ctx, &est2),
        0.05,
    )
    .unwrap();
    for (a, b) in base.pi_hat.data().iter().zip(scaled.pi_hat.data()) {
        assert_eq!(a == &0.0, b == &0.0, "support changed under scaling");
    }
}

#[test]
fn bipartite_poisson_pipeline_runs() {
    // Rating-style bipartite graph with Poisson weights: cross-block pairs
    // only, and the fit still recovers communities well enough to match.
    let k = 3;
    let n = 600;
    let split = 300;
    let spec = DirichletSpec::block_model(k).unwrap();
    let pi = sample_memberships(&spec, n, 41).unwrap();
    let p = Mat::from_fn(k, k, |i, j| if i == j { 1.5 } else { 0.2 });
    let truth = GroundTruth {
        pi: pi.clone(),
        kind: TruthKind::Community { p },
    };
    let graph = generate_mmsb_bipartite(&truth, EdgeModel::Poisson, split, 42).unwrap();
    assert_eq!(graph.bipartite_split(), Some(split));
    // only cross-block entries
    for (i, j, v) in graph.adjacency().iter_entries() {
        assert!((i < split) != (j < split), "entry ({i},{j}) inside a block");
        assert!(v >= 1.0 && v.fract() == 0.0);
    }
    let cfg = FitConfig::new(k, 0.0, 43);
    let fit = fit_community(&graph, &cfg).unwrap();
    let pv = pvalue_matrix(&pi, &fit.estimate.pi_hat).unwrap();
    let m = momentmix::validation::build_match_graph(&pv, 0.01, None);
    let rec = momentmix::validation::recovery_ratio(&m, k);
    assert!(rec >= 2.0 / 3.0, "bipartite recovery {rec}");
}
