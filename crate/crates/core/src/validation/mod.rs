//! Statistical validation of estimated memberships against ground truth:
//! correlation t-tests with right p-values, the induced bipartite match
//! graph (optionally FDR-adjusted), recovery ratio, average ℓ₁ error,
//! bridgeness, and an overlapping-NMI comparison score.
//!
//! The soft matching deliberately penalizes every statistically significant
//! pairing, so the average error can exceed 1 when spurious pairings pile
//! up; the NMI variant is provided for comparison only (it underestimates
//! errors on unbalanced community sizes — see `nmi_overlap`).

pub mod special;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use rayon::prelude::*;
use special::t_upper_tail;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Right p-values of the correlation t-test for every (truth, estimate)
/// row pair; `values[i][j]` tests truth row i against estimate row j.
#[derive(Clone, Debug)]
pub struct PvalMatrix {
    pub values: Mat,
    pub t_stats: Mat,
    pub n_samples: usize,
    /// Cells where a zero-variance row forced p = 1.
    pub zero_variance: Vec<(usize, usize)>,
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma: f64 = a.iter().sum::<f64>() / n;
    let mb: f64 = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        None
    } else {
        Some(cov / (va * vb).sqrt())
    }
}

/// T_ij = ρ√(n−2)/√(1−ρ²) and its right p-value from the Student-t upper
/// tail with n−2 degrees of freedom.
pub fn pvalue_matrix(pi_true: &Mat, pi_hat: &Mat) -> Result<PvalMatrix> {
    let n = pi_true.cols();
    if pi_hat.cols() != n {
        return Err(Error::Dim(format!(
            "truth has {} nodes, estimate has {}",
            n,
            pi_hat.cols()
        )));
    }
    if n < 3 {
        return Err(Error::Validation(
            "p-value testing needs at least 3 nodes".into(),
        ));
    }
    let k = pi_true.rows();
    let k_hat = pi_hat.rows();
    let df = (n - 2) as f64;
    let cells: Vec<(usize, usize, f64, f64, bool)> = (0..k * k_hat)
        .into_par_iter()
        .map(|cell| {
            let i = cell / k_hat;
            let j = cell % k_hat;
            match pearson(pi_true.row(i), pi_hat.row(j)) {
                None => (i, j, f64::NAN, 1.0, true),
                Some(rho) => {
                    let denom = 1.0 - rho * rho;
                    let t = if denom <= 0.0 {
                        if rho > 0.0 {
                            f64::INFINITY
                        } else {
                            f64::NEG_INFINITY
                        }
                    } else {
                        rho * df.sqrt() / denom.sqrt()
                    };
                    (i, j, t, t_upper_tail(t, df), false)
                }
            }
        })
        .collect();
    let mut values = Mat::zeros(k, k_hat);
    let mut t_stats = Mat::zeros(k, k_hat);
    let mut zero_variance = Vec::new();
    for (i, j, t, p, flag) in cells {
        values.set(i, j, p);
        t_stats.set(i, j, t);
        if flag {
            zero_variance.push((i, j));
        }
    }
    Ok(PvalMatrix {
        values,
        t_stats,
        n_samples: n,
        zero_variance,
    })
}

/// Bipartite graph between ground-truth and estimated communities induced by
/// the p-value test.
#[derive(Clone, Debug)]
pub struct MatchGraph {
    /// (ground-truth index, estimate index) pairs that passed.
    pub edges: Vec<(usize, usize)>,
    /// The threshold the (possibly adjusted) p-values were compared against.
    pub p_threshold: f64,
    pub k: usize,
    pub k_hat: usize,
}

impl MatchGraph {
    pub fn truth_degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|(a, _)| *a == i).count()
    }
}

/// Benjamini–Hochberg adjusted p-values (monotone step-up).
pub fn benjamini_hochberg(pvals: &[f64]) -> Vec<f64> {
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].partial_cmp(&pvals[b]).unwrap());
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let candidate = pvals[idx] * m as f64 / (rank + 1) as f64;
        running = running.min(candidate).min(1.0);
        adjusted[idx] = running;
    }
    adjusted
}

/// Threshold the p-value matrix into match-graph edges. With `fdr_q` set the
/// Benjamini–Hochberg adjustment is applied across all k·k̂ hypotheses first
/// and the edges are the BH rejections at level q; otherwise the raw
/// p-values are compared against `p_threshold`.
pub fn build_match_graph(pvals: &PvalMatrix, p_threshold: f64, fdr_q: Option<f64>) -> MatchGraph {
    let k = pvals.values.rows();
    let k_hat = pvals.values.cols();
    let (effective, level): (Vec<f64>, f64) = match fdr_q {
        Some(q) => (benjamini_hochberg(pvals.values.data()), q),
        None => (pvals.values.data().to_vec(), p_threshold),
    };
    let mut edges = Vec::new();
    for i in 0..k {
        for j in 0..k_hat {
            if effective[i * k_hat + j] <= level {
                edges.push((i, j));
            }
        }
    }
    MatchGraph {
        edges,
        p_threshold: level,
        k,
        k_hat,
    }
}

/// Fraction of ground-truth communities with at least one significant match.
pub fn recovery_ratio(matches: &MatchGraph, k: usize) -> f64 {
    let mut hit = vec![false; k];
    for &(i, _) in &matches.edges {
        hit[i] = true;
    }
    hit.iter().filter(|&&h| h).count() as f64 / k as f64
}

/// 𝓔 = (1/k) Σ_{(i,j)∈E} (1/n) Σₓ |Π̂ⱼ(x) − Πᵢ(x)|; sums over every matched
/// pair, so falsely discovered pairings accumulate and the value may
/// exceed 1.
pub fn average_error(matches: &MatchGraph, pi_true: &Mat, pi_hat: &Mat) -> f64 {
    let n = pi_true.cols() as f64;
    let k = pi_true.rows() as f64;
    let mut total = 0.0;
    for &(i, j) in &matches.edges {
        let mut l1 = 0.0;
        for (t, e) in pi_true.row(i).iter().zip(pi_hat.row(j)) {
            l1 += (e - t).abs();
        }
        total += l1 / n;
    }
    total / k
}

/// Per-node bridgeness bᵢ = 1 − √(k̂/(k̂−1)·Σⱼ(Π̂ⱼ(i) − 1/k̂)²) and the
/// degree-corrected variant 𝓑ᵢ = Dᵢ·bᵢ. Columns are renormalized onto the
/// simplex first; all-zero columns get b = 0.
pub fn bridgeness(pi_hat: &Mat, degrees: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k_hat = pi_hat.rows();
    let n = pi_hat.cols();
    if k_hat < 2 {
        return Err(Error::Validation(
            "bridgeness needs k̂ ≥ 2 (undefined for a single community)".into(),
        ));
    }
    if degrees.len() != n {
        return Err(Error::Dim(format!(
            "{} degrees for {} nodes",
            degrees.len(),
            n
        )));
    }
    let factor = k_hat as f64 / (k_hat as f64 - 1.0);
    let uniform = 1.0 / k_hat as f64;
    let mut b = vec![0.0; n];
    for x in 0..n {
        let col_sum: f64 = (0..k_hat).map(|i| pi_hat.get(i, x)).sum();
        if col_sum <= 0.0 {
            b[x] = 0.0;
            continue;
        }
        let mut dev = 0.0;
        for i in 0..k_hat {
            let v = pi_hat.get(i, x) / col_sum - uniform;
            dev += v * v;
        }
        b[x] = (1.0 - (factor * dev).sqrt()).clamp(0.0, 1.0);
    }
    let corrected: Vec<f64> = b.iter().zip(degrees).map(|(&bi, &d)| d * bi).collect();
    Ok((b, corrected))
}

fn binary_entropy(p: f64) -> f64 {
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.ln();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).ln();
    }
    h
}

/// Overlapping-NMI comparison score over binarized membership matrices:
/// N = 1 − ½[H(Π|Π̂)_norm + H(Π̂|Π)_norm] with the per-community min over
/// conditional entropies, each normalized by the conditioning community's
/// entropy. Provided for comparison only: the score treats a community and
/// its complement identically, so it underestimates errors on very
/// unbalanced community sizes, and spurious extra matches are invisible to
/// the per-community min.
pub fn nmi_overlap(pi_true: &Mat, pi_hat: &Mat) -> Result<f64> {
    let n = pi_true.cols();
    if pi_hat.cols() != n {
        return Err(Error::Dim("node sets differ".into()));
    }
    let binarize = |m: &Mat| -> Vec<Vec<bool>> {
        (0..m.rows())
            .map(|i| m.row(i).iter().map(|&v| v != 0.0).collect())
            .collect()
    };
    let truth = binarize(pi_true);
    let est = binarize(pi_hat);
    let cond_norm = |from: &[Vec<bool>], given: &[Vec<bool>]| -> f64 {
        // (1/|given|) Σ_j min_i H(from_i | given_j) / H(given_j)
        let mut total = 0.0;
        for g in given {
            let pg = g.iter().filter(|&&v| v).count() as f64 / n as f64;
            let hg = binary_entropy(pg);
            if hg == 0.0 {
                // degenerate all-zero (or all-one) community: H = 0 convention
                continue;
            }
            let best = from
                .iter()
                .map(|f| {
                    let mut joint = [[0usize; 2]; 2];
                    for x in 0..n {
                        joint[f[x] as usize][g[x] as usize] += 1;
                    }
                    let mut h_joint = 0.0;
                    for row in &joint {
                        for &c in row {
                            if c > 0 {
                                let p = c as f64 / n as f64;
                                h_joint -= p * p.ln();
                            }
                        }
                    }
                    h_joint - hg // H(f | g)
                })
                .fold(f64::INFINITY, f64::min);
            total += best / hg;
        }
        total / given.len() as f64
    };
    let h_est_given_truth = cond_norm(&est, &truth);
    let h_truth_given_est = cond_norm(&truth, &est);
    Ok(1.0 - 0.5 * (h_truth_given_est + h_est_given_truth))
}

/// Full validation summary.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub recovery_ratio: f64,
    pub avg_error: f64,
    pub nmi_overlap: f64,
    pub n_edges: usize,
    pub p_threshold: f64,
    pub fdr_q: Option<f64>,
    pub bridgeness: Vec<f64>,
    pub degree_corrected_bridgeness: Vec<f64>,
}

impl ValidationReport {
    pub fn avg_bridgeness(&self) -> f64 {
        mean(&self.bridgeness)
    }

    pub fn avg_degree_corrected(&self) -> f64 {
        mean(&self.degree_corrected_bridgeness)
    }

    /// `key: value` lines.
    pub fn write(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        let mut put = |k: &str, v: String| -> std::io::Result<()> { writeln!(w, "{}: {}", k, v) };
        (|| -> std::io::Result<()> {
            put("recovery_ratio", format!("{}", self.recovery_ratio))?;
            put("avg_error", format!("{}", self.avg_error))?;
            put("nmi_overlap", format!("{}", self.nmi_overlap))?;
            put("n_edges", format!("{}", self.n_edges))?;
            put("p_threshold", format!("{}", self.p_threshold))?;
            put(
                "fdr_q",
                self.fdr_q.map_or("none".into(), |q| format!("{}", q)),
            )?;
            put("avg_bridgeness", format!("{}", self.avg_bridgeness()))?;
            put(
                "avg_degree_corrected_bridgeness",
                format!("{}", self.avg_degree_corrected()),
            )
        })()
        .map_err(|e| Error::io(path, e))
    }

    /// Optional per-node bridgeness table: `node b degree_corrected`.
    pub fn write_bridgeness_table(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        for (i, (b, dc)) in self
            .bridgeness
            .iter()
            .zip(&self.degree_corrected_bridgeness)
            .enumerate()
        {
            writeln!(w, "{} {} {}", i, b, dc).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Run the whole validation suite against ground truth.
pub fn validate(
    pi_true: &Mat,
    pi_hat: &Mat,
    degrees: Option<&[f64]>,
    p_threshold: f64,
    fdr_q: Option<f64>,
) -> Result<ValidationReport> {
    let pvals = pvalue_matrix(pi_true, pi_hat)?;
    let matches = build_match_graph(&pvals, p_threshold, fdr_q);
    let recovery = recovery_ratio(&matches, pi_true.rows());
    let err = average_error(&matches, pi_true, pi_hat);
    let nmi = nmi_overlap(pi_true, pi_hat)?;
    let (b, dc) = match degrees {
        Some(d) if pi_hat.rows() >= 2 => bridgeness(pi_hat, d)?,
        _ => (Vec::new(), Vec::new()),
    };
    Ok(ValidationReport {
        recovery_ratio: recovery,
        avg_error: err,
        nmi_overlap: nmi,
        n_edges: matches.edges.len(),
        p_threshold: matches.p_threshold,
        fdr_q,
        bridgeness: b,
        degree_corrected_bridgeness: dc,
    })
}

/// Dump the p-value matrix as CSV (one row per ground-truth community).
pub fn write_pvalue_csv(pvals: &PvalMatrix, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for i in 0..pvals.values.rows() {
        let row: Vec<String> = pvals.values.row(i).iter().map(|v| format!("{}", v)).collect();
        writeln!(w, "{}", row.join(",")).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Small fixture reproducing a 6-edge match configuration: truth communities
/// 1, 2, 4 are recovered (community 1 by three estimates, 4 by two), truth
/// community 3 stays unmatched. Used by tests and the CLI walkthrough.
pub fn six_edge_fixture() -> (Mat, Mat) {
    let n = 40;
    let indicator = |lo: usize, hi: usize| -> Vec<f64> {
        (0..n).map(|x| if x >= lo && x < hi { 1.0 } else { 0.0 }).collect()
    };
    let mut pi_true = Mat::zeros(4, n);
    for (i, (lo, hi)) in [(0, 10), (10, 20), (20, 30), (30, 40)].iter().enumerate() {
        pi_true.row_mut(i).copy_from_slice(&indicator(*lo, *hi));
    }
    let drop_one = |base: (usize, usize), out: usize| -> Vec<f64> {
        let mut v = indicator(base.0, base.1);
        v[out] = 0.0;
        v
    };
    let mut pi_hat = Mat::zeros(6, n);
    pi_hat.row_mut(0).copy_from_slice(&drop_one((10, 20), 10)); // ≈ truth 2
    pi_hat.row_mut(1).copy_from_slice(&drop_one((0, 10), 0)); // ≈ truth 1
    pi_hat.row_mut(2).copy_from_slice(&drop_one((0, 10), 3)); // ≈ truth 1
    pi_hat.row_mut(3).copy_from_slice(&drop_one((30, 40), 31)); // ≈ truth 4
    pi_hat.row_mut(4).copy_from_slice(&drop_one((30, 40), 35)); // ≈ truth 4
    pi_hat.row_mut(5).copy_from_slice(&drop_one((0, 10), 7)); // ≈ truth 1
    (pi_true, pi_hat)
}
