//! Shared helpers for the integration and acceptance suites.

use momentmix::graph_io::SparseGraph;
use momentmix::linalg::Mat;
use momentmix::synthgen::{
    generate_mmsb, sample_memberships, DirichletSpec, EdgeModel, GroundTruth, TruthKind,
};

/// Symmetric-connectivity MMSB instance; α₀ = 0 is the block model.
pub fn mmsb_instance(
    n: usize,
    k: usize,
    p_in: f64,
    p_out: f64,
    alpha0: f64,
    seed: u64,
) -> (SparseGraph, Mat) {
    let spec = if alpha0 == 0.0 {
        DirichletSpec::block_model(k).unwrap()
    } else {
        DirichletSpec::symmetric(k, alpha0).unwrap()
    };
    let pi = sample_memberships(&spec, n, seed).unwrap();
    let p = Mat::from_fn(k, k, |i, j| if i == j { p_in } else { p_out });
    let truth = GroundTruth {
        pi: pi.clone(),
        kind: TruthKind::Community { p },
    };
    let graph = generate_mmsb(&truth, EdgeModel::Bernoulli, seed ^ 0x5ca1ab1e).unwrap();
    (graph, pi)
}

/// Block-diagonal-with-floor topic-word matrix, column stochastic.
pub fn topic_matrix(d: usize, k: usize) -> Mat {
    let mut mu = Mat::from_fn(d, k, |i, j| {
        let block = d.div_ceil(k);
        if i / block == j {
            1.0
        } else {
            0.08
        }
    });
    for j in 0..k {
        let s: f64 = (0..d).map(|i| mu.get(i, j)).sum();
        mu.scale_col(j, 1.0 / s);
    }
    mu
}
