//! Synthetic MMSB graphs and LDA corpora with known ground truth.
//!
//! Generators are pure functions of (parameters, seed) and double as the
//! end-to-end test oracles: the dense path draws every node pair directly,
//! and the sparse path for large n is an exact rejection sampler (a Binomial
//! count of uniformly-chosen candidate pairs thinned by rate/p_max draws each
//! pair independently with its own rate, just more cleverly).

use crate::error::{Error, Result};
use crate::graph_io::{Corpus, SparseGraph};
use crate::linalg::{CsrMatrix, Dedup, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use std::collections::HashSet;

/// Above this node count Bernoulli/Poisson generation switches from the
/// all-pairs loop to the exact rejection sampler.
const DENSE_GEN_LIMIT: usize = 10_000;

/// Dirichlet concentration vector α, stored as a direction on the simplex
/// plus the concentration α₀ = Σαᵢ so the block-model limit α₀ = 0 keeps a
/// well-defined sampling direction.
#[derive(Clone, Debug)]
pub struct DirichletSpec {
    direction: Vec<f64>,
    alpha0: f64,
}

impl DirichletSpec {
    /// From a full concentration vector with all αᵢ > 0.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Validation("k must be at least 1".into()));
        }
        if alpha.iter().any(|&a| a <= 0.0) {
            return Err(Error::Validation(
                "Dirichlet concentrations must be positive (use block_model for α₀ = 0)".into(),
            ));
        }
        let alpha0: f64 = alpha.iter().sum();
        let direction = alpha.iter().map(|a| a / alpha0).collect();
        Ok(DirichletSpec { direction, alpha0 })
    }

    /// Uniform direction with the given concentration; α = (α₀/k, …, α₀/k).
    pub fn symmetric(k: usize, alpha0: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::Validation("k must be at least 1".into()));
        }
        if alpha0 < 0.0 {
            return Err(Error::Validation("α₀ must be nonnegative".into()));
        }
        Ok(DirichletSpec {
            direction: vec![1.0 / k as f64; k],
            alpha0,
        })
    }

    /// Block-model limit: α₀ = 0, one-hot memberships drawn from the uniform
    /// category distribution.
    pub fn block_model(k: usize) -> Result<Self> {
        Self::symmetric(k, 0.0)
    }

    pub fn k(&self) -> usize {
        self.direction.len()
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// Normalized direction α/α₀ (the categorical distribution at α₀ = 0).
    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn alpha(&self) -> Vec<f64> {
        self.direction.iter().map(|d| d * self.alpha0).collect()
    }
}

/// True model parameters behind a synthetic instance.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    /// k×n column-stochastic membership matrix Π (empty for topic truth).
    pub pi: Mat,
    pub kind: TruthKind,
}

#[derive(Clone, Debug)]
pub enum TruthKind {
    /// k×k community connectivity matrix with entries in [0, 1].
    Community { p: Mat },
    /// d×k column-stochastic topic-word matrix.
    Topic { mu: Mat },
}

impl GroundTruth {
    pub fn k(&self) -> usize {
        match &self.kind {
            TruthKind::Community { p } => p.rows(),
            TruthKind::Topic { mu } => mu.cols(),
        }
    }

    pub fn n(&self) -> usize {
        self.pi.cols()
    }
}

/// Edge model for the adjacency entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeModel {
    /// Unweighted edges, G_ij ~ Ber(πᵢᵀPπⱼ).
    Bernoulli,
    /// Weighted edges, G_ij ~ Poi(πᵢᵀPπⱼ).
    Poisson,
}

/// Draw n membership columns i.i.d. from Dirichlet(α); at α₀ = 0 each column
/// is one-hot with its category drawn from the direction.
pub fn sample_memberships(spec: &DirichletSpec, n: usize, seed: u64) -> Result<Mat> {
    if n < 1 {
        return Err(Error::Validation("n must be at least 1".into()));
    }
    let k = spec.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pi = Mat::zeros(k, n);
    if spec.alpha0() == 0.0 {
        let cdf: Vec<f64> = spec
            .direction()
            .iter()
            .scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            })
            .collect();
        for j in 0..n {
            let u: f64 = rng.random();
            let cat = cdf.iter().position(|&c| u <= c).unwrap_or(k - 1);
            pi.set(cat, j, 1.0);
        }
    } else {
        let gammas: Vec<Gamma<f64>> = spec
            .alpha()
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("validated α > 0"))
            .collect();
        for j in 0..n {
            let mut col: Vec<f64> = gammas.iter().map(|g| g.sample(&mut rng)).collect();
            let mut s: f64 = col.iter().sum();
            if s == 0.0 {
                // Possible for tiny α where every Gamma draw underflows.
                let cat = rng.random_range(0..k);
                col = vec![0.0; k];
                col[cat] = 1.0;
                s = 1.0;
            }
            for (i, v) in col.iter().enumerate() {
                pi.set(i, j, v / s);
            }
        }
    }
    Ok(pi)
}

/// Generate an undirected MMSB graph from ground truth. The diagonal is
/// forced to zero; the sampled upper triangle is mirrored.
pub fn generate_mmsb(truth: &GroundTruth, model: EdgeModel, seed: u64) -> Result<SparseGraph> {
    let p = community_matrix(truth)?;
    validate_connectivity(p, model)?;
    let n = truth.n();
    let triplets = sample_edges(&truth.pi, p, model, PairUniverse::Full { n }, seed)?;
    let adj = CsrMatrix::from_triplets(n, n, triplets, Dedup::Sum);
    Ok(SparseGraph::new(adj, false, None, (0..n as u64).collect()))
}

/// Bipartite variant: only cross-block pairs are generated, left block
/// `[0, split)` against right block `[split, n)`.
pub fn generate_mmsb_bipartite(
    truth: &GroundTruth,
    model: EdgeModel,
    split: usize,
    seed: u64,
) -> Result<SparseGraph> {
    let p = community_matrix(truth)?;
    validate_connectivity(p, model)?;
    let n = truth.n();
    if split == 0 || split >= n {
        return Err(Error::Validation(format!(
            "bipartite split {} must lie strictly inside 0..{}",
            split, n
        )));
    }
    let triplets = sample_edges(
        &truth.pi,
        p,
        model,
        PairUniverse::Bipartite { n, split },
        seed,
    )?;
    let adj = CsrMatrix::from_triplets(n, n, triplets, Dedup::Sum);
    Ok(SparseGraph::new(
        adj,
        false,
        Some(split),
        (0..n as u64).collect(),
    ))
}

fn community_matrix(truth: &GroundTruth) -> Result<&Mat> {
    match &truth.kind {
        TruthKind::Community { p } => Ok(p),
        TruthKind::Topic { .. } => Err(Error::Validation(
            "generate_mmsb needs community ground truth".into(),
        )),
    }
}

fn validate_connectivity(p: &Mat, model: EdgeModel) -> Result<()> {
    let bad = p
        .data()
        .iter()
        .any(|&v| v < 0.0 || !v.is_finite() || (model == EdgeModel::Bernoulli && v > 1.0));
    if bad {
        return Err(Error::Validation(match model {
            EdgeModel::Bernoulli => "Bernoulli connectivity entries must lie in [0, 1]".into(),
            EdgeModel::Poisson => "Poisson connectivity entries must be nonnegative".into(),
        }));
    }
    Ok(())
}

enum PairUniverse {
    Full { n: usize },
    Bipartite { n: usize, split: usize },
}

impl PairUniverse {
    fn count(&self) -> u64 {
        match *self {
            PairUniverse::Full { n } => (n as u64) * (n as u64 - 1) / 2,
            PairUniverse::Bipartite { n, split } => (split as u64) * ((n - split) as u64),
        }
    }

    fn n(&self) -> usize {
        match *self {
            PairUniverse::Full { n } | PairUniverse::Bipartite { n, .. } => n,
        }
    }

    fn sample_pair(&self, rng: &mut ChaCha8Rng) -> (usize, usize) {
        match *self {
            PairUniverse::Full { n } => loop {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i != j {
                    return (i.min(j), i.max(j));
                }
            },
            PairUniverse::Bipartite { n, split } => {
                let i = rng.random_range(0..split);
                let j = rng.random_range(split..n);
                (i, j)
            }
        }
    }

    fn for_each_pair(&self, mut f: impl FnMut(usize, usize)) {
        match *self {
            PairUniverse::Full { n } => {
                for i in 0..n {
                    for j in i + 1..n {
                        f(i, j);
                    }
                }
            }
            PairUniverse::Bipartite { n, split } => {
                for i in 0..split {
                    for j in split..n {
                        f(i, j);
                    }
                }
            }
        }
    }
}

fn sample_edges(
    pi: &Mat,
    p: &Mat,
    model: EdgeModel,
    pairs: PairUniverse,
    seed: u64,
) -> Result<Vec<(usize, usize, f64)>> {
    let n = pairs.n();
    let k = pi.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // rate(i, j) = πᵢᵀ P πⱼ against the precomputed R = P·Π.
    let r = p.mul(pi); // k×n
    let rate = |i: usize, j: usize| -> f64 {
        let mut s = 0.0;
        for t in 0..k {
            s += pi.get(t, i) * r.get(t, j);
        }
        s
    };
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let push = |trip: &mut Vec<(usize, usize, f64)>, i: usize, j: usize, w: f64| {
        trip.push((i, j, w));
        trip.push((j, i, w));
    };
    if n <= DENSE_GEN_LIMIT {
        match model {
            EdgeModel::Bernoulli => pairs.for_each_pair(|i, j| {
                if rng.random::<f64>() < rate(i, j) {
                    push(&mut triplets, i, j, 1.0);
                }
            }),
            EdgeModel::Poisson => pairs.for_each_pair(|i, j| {
                let lam = rate(i, j);
                if lam > 0.0 {
                    let w = Poisson::new(lam).expect("λ > 0").sample(&mut rng);
                    if w > 0.0 {
                        push(&mut triplets, i, j, w);
                    }
                }
            }),
        }
        return Ok(triplets);
    }

    // Sparse path: exact rejection sampling against p_max = max_ab P(a,b),
    // which bounds every rate since the π columns lie on the simplex.
    let p_max = p.data().iter().cloned().fold(0.0, f64::max);
    if p_max == 0.0 {
        return Ok(triplets);
    }
    let universe = pairs.count();
    match model {
        EdgeModel::Bernoulli => {
            let m = Binomial::new(universe, p_max)
                .map_err(|e| Error::Validation(format!("binomial: {e}")))?
                .sample(&mut rng);
            let mut chosen: HashSet<u64> = HashSet::with_capacity(m as usize * 2);
            while (chosen.len() as u64) < m {
                let (i, j) = pairs.sample_pair(&mut rng);
                let code = (i as u64) * (n as u64) + j as u64;
                if chosen.insert(code) && rng.random::<f64>() < rate(i, j) / p_max {
                    push(&mut triplets, i, j, 1.0);
                }
            }
        }
        EdgeModel::Poisson => {
            // Superposition: Poi(p_max · universe) events on uniform pairs,
            // thinned by rate/p_max; per-pair accepted counts are Poi(rate).
            let total = p_max * universe as f64;
            let events = Poisson::new(total)
                .map_err(|e| Error::Validation(format!("poisson: {e}")))?
                .sample(&mut rng) as u64;
            for _ in 0..events {
                let (i, j) = pairs.sample_pair(&mut rng);
                if rng.random::<f64>() < rate(i, j) / p_max {
                    // Dedup::Sum accumulates event multiplicity per pair.
                    push(&mut triplets, i, j, 1.0);
                }
            }
        }
    }
    Ok(triplets)
}

/// Generate an LDA corpus: per document draw h ~ Dirichlet(α), then
/// `doc_length` i.i.d. words from the mixture μh.
pub fn generate_lda(
    truth: &GroundTruth,
    spec: &DirichletSpec,
    n_docs: usize,
    doc_length: usize,
    seed: u64,
) -> Result<Corpus> {
    let mu = match &truth.kind {
        TruthKind::Topic { mu } => mu,
        TruthKind::Community { .. } => {
            return Err(Error::Validation(
                "generate_lda needs topic ground truth".into(),
            ))
        }
    };
    if doc_length < 3 {
        return Err(Error::Validation(
            "doc_length must be at least 3 (third-order moments need word triples)".into(),
        ));
    }
    let d = mu.rows();
    let k = mu.cols();
    if spec.k() != k {
        return Err(Error::Dim(format!(
            "Dirichlet k = {} vs topic-word k = {}",
            spec.k(),
            k
        )));
    }
    let h = sample_memberships(spec, n_docs, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut triplets = Vec::new();
    let mut word_dist = vec![0.0; d];
    for t in 0..n_docs {
        for w in word_dist.iter_mut() {
            *w = 0.0;
        }
        for topic in 0..k {
            let ht = h.get(topic, t);
            if ht > 0.0 {
                for w in 0..d {
                    word_dist[w] += ht * mu.get(w, topic);
                }
            }
        }
        let mut cdf = word_dist.clone();
        for i in 1..d {
            cdf[i] += cdf[i - 1];
        }
        let total = cdf[d - 1];
        let mut counts = vec![0u32; d];
        for _ in 0..doc_length {
            let u: f64 = rng.random::<f64>() * total;
            let w = cdf.partition_point(|&c| c < u).min(d - 1);
            counts[w] += 1;
        }
        for (w, &c) in counts.iter().enumerate() {
            if c > 0 {
                triplets.push((t, w, c as f64));
            }
        }
    }
    let freq = CsrMatrix::from_triplets(n_docs, d, triplets, Dedup::Sum);
    Ok(Corpus::new(freq))
}
