//! End-to-end orchestration: moments → whitening → stochastic decomposition
//! → post-processing, with per-stage timings. The community path runs twice
//! (X and A exchanged) so every node receives a membership estimate.

use crate::error::Result;
use crate::graph_io::{partition_nodes, Corpus, NodePartition, SparseGraph};
use crate::moments::{
    compute_m2_community, compute_m2_topic, compute_symmetrizers, MomentSummary, SampleStream,
    SymmetrizationPair, SymmetrizerOpts,
};
use crate::postprocess::{recover_memberships, recover_topics, CommunityEstimate, TopicEstimate};
use crate::stgd::{run_stgd, EigenEstimate, StgdConfig};
use crate::linalg::norm2;
use crate::whitening::{
    randomized_whiten, whiten_views, WhitenMethod, WhitenOptions, WhitenedViews, WhiteningContext,
};
use std::path::PathBuf;
use std::time::Instant;

/// Resolved parameters for one fit.
#[derive(Clone, Debug)]
pub struct FitConfig {
    pub k: usize,
    pub alpha0: f64,
    pub fractions: [f64; 4],
    pub whiten_method: WhitenMethod,
    pub power_iters: usize,
    pub theta: f64,
    /// `None` resolves to 0.01/√k.
    pub learn_rate0: Option<f64>,
    /// `None` resolves to 10·n_X.
    pub decay_tau: Option<f64>,
    pub max_epochs: usize,
    pub batch: usize,
    pub tol: f64,
    pub threshold: f64,
    pub seed: u64,
    pub shifted: Option<bool>,
    pub trace_path: Option<PathBuf>,
}

impl FitConfig {
    pub fn new(k: usize, alpha0: f64, seed: u64) -> Self {
        FitConfig {
            k,
            alpha0,
            fractions: [0.25; 4],
            whiten_method: WhitenMethod::TallThinSvd,
            power_iters: 1,
            theta: 1.0,
            learn_rate0: None,
            decay_tau: None,
            max_epochs: 200,
            batch: 1,
            tol: 1e-6,
            threshold: 0.05,
            seed,
            shifted: None,
            trace_path: None,
        }
    }

    pub fn stgd_config(&self, views: &WhitenedViews, seed: u64) -> StgdConfig {
        let mut cfg = StgdConfig::for_problem(self.k, views.n_samples(), self.alpha0, seed);
        cfg.theta = self.theta;
        cfg.learn_rate0 = match self.learn_rate0 {
            Some(lr) => lr,
            None => {
                // The cubic data term scales with ‖y_A‖‖y_B‖‖y_C‖, which is
                // k^{3/2} for theory-sized whitened views. Scaling the rate
                // by the measured magnitude keeps the per-sample kick
                // bounded across k and across noise-inflated instances;
                // the 0.003 constant holds a 3× margin below the observed
                // divergence threshold at k = 10.
                let k = self.k as f64;
                let m3 = mean_view_magnitude(views).max(k.powf(1.5));
                0.003 * k / m3
            }
        };
        if let Some(tau) = self.decay_tau {
            cfg.decay_tau = tau;
        }
        cfg.max_epochs = self.max_epochs;
        cfg.batch = self.batch;
        cfg.tol = self.tol;
        cfg.shifted = self.shifted;
        cfg.trace_path = self.trace_path.clone();
        cfg
    }
}

fn mean_view_magnitude(views: &WhitenedViews) -> f64 {
    let n = views.n_samples();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        let (a, b, c) = views.sample(i);
        total += norm2(a) * norm2(b) * norm2(c);
    }
    total / n as f64
}

fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add(tag.wrapping_mul(0x9e3779b97f4a7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Wall-clock seconds per stage, mirroring the pre-processing / STGD /
/// post-processing split.
#[derive(Clone, Copy, Debug, Default)]
pub struct StageTimings {
    pub pre_seconds: f64,
    pub stgd_seconds: f64,
    pub post_seconds: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.pre_seconds + self.stgd_seconds + self.post_seconds
    }
}

/// Everything one whitening+decomposition pass produces; kept around so
/// callers (and the acceptance suite) can audit invariants like WᵀM₂W = I.
pub struct PassArtifacts {
    pub partition: NodePartition,
    pub symm: SymmetrizationPair,
    pub m2: MomentSummary,
    pub ctx: WhiteningContext,
    pub est: EigenEstimate,
    pub stgd_iterations: usize,
}

/// One moments→whiten→STGD pass over a fixed partition.
pub fn community_pass(
    graph: &SparseGraph,
    partition: NodePartition,
    cfg: &FitConfig,
    pass_tag: u64,
    timings: &mut StageTimings,
) -> Result<PassArtifacts> {
    let t0 = Instant::now();
    let symm_opts = SymmetrizerOpts::for_k(cfg.k, derive_seed(cfg.seed, 11 + pass_tag));
    let symm = compute_symmetrizers(graph, &partition, cfg.k, symm_opts)?;
    let m2 = compute_m2_community(graph, &partition, &symm, cfg.alpha0)?;
    let mut wopts = WhitenOptions::new(cfg.whiten_method, derive_seed(cfg.seed, 23 + pass_tag));
    wopts.power_iters = cfg.power_iters;
    let ctx = randomized_whiten(&m2, cfg.k, wopts)?;
    let stream = SampleStream::community(graph, &partition);
    let views = whiten_views(&ctx, Some(&symm), &stream)?;
    timings.pre_seconds += t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let stgd_cfg = cfg.stgd_config(&views, derive_seed(cfg.seed, 37 + pass_tag));
    let est = run_stgd(&views, &stgd_cfg)?;
    timings.stgd_seconds += t1.elapsed().as_secs_f64();

    Ok(PassArtifacts {
        partition,
        symm,
        m2,
        ctx,
        stgd_iterations: est.iterations_run,
        est,
    })
}

pub struct CommunityFit {
    pub estimate: CommunityEstimate,
    pub pass1: PassArtifacts,
    pub pass2: PassArtifacts,
    pub timings: StageTimings,
}

/// Full community fit: partition, two passes with X and A exchanged, and
/// Lemma-4 recovery with thresholding.
pub fn fit_community(graph: &SparseGraph, cfg: &FitConfig) -> Result<CommunityFit> {
    let mut timings = StageTimings::default();
    let t0 = Instant::now();
    let part = partition_nodes(graph, cfg.fractions, derive_seed(cfg.seed, 1), cfg.k)?;
    timings.pre_seconds += t0.elapsed().as_secs_f64();

    let pass1 = community_pass(graph, part.clone(), cfg, 0, &mut timings)?;
    let pass2 = community_pass(graph, part.swap_x_a(), cfg, 1000, &mut timings)?;

    let t2 = Instant::now();
    let estimate = recover_memberships(
        graph,
        &part,
        (&pass1.ctx, &pass1.est),
        (&pass2.ctx, &pass2.est),
        cfg.threshold,
    )?;
    timings.post_seconds += t2.elapsed().as_secs_f64();
    Ok(CommunityFit {
        estimate,
        pass1,
        pass2,
        timings,
    })
}

pub struct TopicFit {
    pub estimate: TopicEstimate,
    pub m2: MomentSummary,
    pub ctx: WhiteningContext,
    pub est: EigenEstimate,
    pub timings: StageTimings,
}

/// Full topic fit over a corpus of raw frequency vectors.
pub fn fit_topic(corpus: &Corpus, cfg: &FitConfig) -> Result<TopicFit> {
    let mut timings = StageTimings::default();
    let t0 = Instant::now();
    let m2 = compute_m2_topic(corpus, cfg.alpha0)?;
    let mut wopts = WhitenOptions::new(cfg.whiten_method, derive_seed(cfg.seed, 23));
    wopts.power_iters = cfg.power_iters;
    let ctx = randomized_whiten(&m2, cfg.k, wopts)?;
    let stream = SampleStream::topic(corpus);
    let views = whiten_views(&ctx, None, &stream)?;
    timings.pre_seconds += t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let stgd_cfg = cfg.stgd_config(&views, derive_seed(cfg.seed, 37));
    let est = run_stgd(&views, &stgd_cfg)?;
    timings.stgd_seconds += t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let estimate = recover_topics(&ctx, &est)?;
    timings.post_seconds += t2.elapsed().as_secs_f64();
    Ok(TopicFit {
        estimate,
        m2,
        ctx,
        est,
        timings,
    })
}
