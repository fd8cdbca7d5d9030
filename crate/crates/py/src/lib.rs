//! Python bindings: the main types (graphs, corpora) and operations
//! (generation, fitting, validation) behind a small, list-based surface.

use momentmix::graph_io::{self, LoadOptions};
use momentmix::linalg::Mat;
use momentmix::pipeline::{fit_community, fit_topic, FitConfig};
use momentmix::synthgen::{
    generate_lda, generate_mmsb, sample_memberships, DirichletSpec, EdgeModel, GroundTruth,
    TruthKind,
};
use momentmix::validation;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;

fn err_to_py(e: momentmix::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn rows_to_mat(rows: &[Vec<f64>]) -> PyResult<Mat> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("empty matrix"));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("ragged rows"));
    }
    let mut m = Mat::zeros(rows.len(), cols);
    for (i, r) in rows.iter().enumerate() {
        m.row_mut(i).copy_from_slice(r);
    }
    Ok(m)
}

/// A sparse graph with compacted node ids.
#[pyclass]
struct Graph {
    inner: graph_io::SparseGraph,
}

#[pymethods]
impl Graph {
    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn n_entries(&self) -> usize {
        self.inner.adjacency().nnz()
    }

    fn degrees(&self) -> Vec<f64> {
        self.inner.degrees()
    }

    /// Original (external) id for each internal node index.
    fn remap(&self) -> Vec<u64> {
        self.inner.remap().to_vec()
    }

    fn write_edge_list(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_edge_list(&path).map_err(err_to_py)
    }
}

/// A bag-of-words corpus of per-document word counts.
#[pyclass]
struct Corpus {
    inner: graph_io::Corpus,
}

#[pymethods]
impl Corpus {
    #[getter]
    fn n_docs(&self) -> usize {
        self.inner.n_docs()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    #[getter]
    fn skipped_docs(&self) -> usize {
        self.inner.skipped_docs()
    }

    fn write_bag_of_words(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_bag_of_words(&path).map_err(err_to_py)
    }
}

/// Load a whitespace `src dst [weight]` edge list.
#[pyfunction]
#[pyo3(signature = (path, directed=false, weighted=false, bipartite=false))]
fn load_edge_list(
    path: PathBuf,
    directed: bool,
    weighted: bool,
    bipartite: bool,
) -> PyResult<Graph> {
    let inner = graph_io::load_edge_list(
        &path,
        LoadOptions {
            directed,
            weighted,
            bipartite,
        },
    )
    .map_err(err_to_py)?;
    Ok(Graph { inner })
}

/// Load a UCI bag-of-words file.
#[pyfunction]
fn load_bag_of_words(path: PathBuf) -> PyResult<Corpus> {
    let inner = graph_io::load_bag_of_words(&path).map_err(err_to_py)?;
    Ok(Corpus { inner })
}

fn spec_for(k: usize, alpha0: f64) -> PyResult<DirichletSpec> {
    if alpha0 == 0.0 {
        DirichletSpec::block_model(k)
    } else {
        DirichletSpec::symmetric(k, alpha0)
    }
    .map_err(err_to_py)
}

/// Generate a synthetic MMSB graph; returns (graph, pi_true) with pi_true
/// as k rows of n memberships.
#[pyfunction]
#[pyo3(signature = (n, k, alpha0, p_in, p_out, seed=0, poisson=false))]
fn generate_community(
    n: usize,
    k: usize,
    alpha0: f64,
    p_in: f64,
    p_out: f64,
    seed: u64,
    poisson: bool,
) -> PyResult<(Graph, Vec<Vec<f64>>)> {
    let spec = spec_for(k, alpha0)?;
    let pi = sample_memberships(&spec, n, seed).map_err(err_to_py)?;
    let p = Mat::from_fn(k, k, |i, j| if i == j { p_in } else { p_out });
    let truth = GroundTruth {
        pi: pi.clone(),
        kind: TruthKind::Community { p },
    };
    let model = if poisson {
        EdgeModel::Poisson
    } else {
        EdgeModel::Bernoulli
    };
    let graph = generate_mmsb(&truth, model, seed ^ 0xabcd).map_err(err_to_py)?;
    Ok((Graph { inner: graph }, mat_to_rows(&pi)))
}

/// Generate a synthetic LDA corpus; returns (corpus, mu_true) with mu_true
/// as d rows of k topic weights.
#[pyfunction]
#[pyo3(signature = (vocab_size, k, alpha0, n_docs, doc_length, seed=0))]
fn generate_topics(
    vocab_size: usize,
    k: usize,
    alpha0: f64,
    n_docs: usize,
    doc_length: usize,
    seed: u64,
) -> PyResult<(Corpus, Vec<Vec<f64>>)> {
    let spec = spec_for(k, alpha0)?;
    let d = vocab_size;
    // block-plus-floor topics, same construction the CLI generator uses
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
    let truth = GroundTruth {
        pi: Mat::zeros(k, 0),
        kind: TruthKind::Topic { mu: mu.clone() },
    };
    let corpus = generate_lda(&truth, &spec, n_docs, doc_length, seed).map_err(err_to_py)?;
    Ok((Corpus { inner: corpus }, mat_to_rows(&mu)))
}

/// Fit community memberships; returns a dict with `pi_hat` (k rows of n),
/// `alpha_hat`, `zeroed_columns`, and per-stage timings.
#[pyfunction(name = "fit_community")]
#[pyo3(signature = (graph, k, alpha0=0.0, seed=0, threshold=0.05, max_epochs=200))]
fn fit_community_py(
    py: Python<'_>,
    graph: &Graph,
    k: usize,
    alpha0: f64,
    seed: u64,
    threshold: f64,
    max_epochs: usize,
) -> PyResult<Py<PyDict>> {
    let mut cfg = FitConfig::new(k, alpha0, seed);
    cfg.threshold = threshold;
    cfg.max_epochs = max_epochs;
    let fit = fit_community(&graph.inner, &cfg).map_err(err_to_py)?;
    let out = PyDict::new(py);
    out.set_item("pi_hat", mat_to_rows(&fit.estimate.pi_hat))?;
    out.set_item("alpha_hat", fit.estimate.alpha_hat.clone())?;
    out.set_item("zeroed_columns", fit.estimate.zeroed_columns)?;
    out.set_item("pre_seconds", fit.timings.pre_seconds)?;
    out.set_item("stgd_seconds", fit.timings.stgd_seconds)?;
    out.set_item("post_seconds", fit.timings.post_seconds)?;
    Ok(out.into())
}

/// Fit topic-word distributions; returns a dict with `mu_hat` (d rows of k)
/// and `alpha_hat`.
#[pyfunction(name = "fit_topic")]
#[pyo3(signature = (corpus, k, alpha0=1.0, seed=0, max_epochs=200))]
fn fit_topic_py(
    py: Python<'_>,
    corpus: &Corpus,
    k: usize,
    alpha0: f64,
    seed: u64,
    max_epochs: usize,
) -> PyResult<Py<PyDict>> {
    let mut cfg = FitConfig::new(k, alpha0, seed);
    cfg.max_epochs = max_epochs;
    let fit = fit_topic(&corpus.inner, &cfg).map_err(err_to_py)?;
    let out = PyDict::new(py);
    out.set_item("mu_hat", mat_to_rows(&fit.estimate.mu_hat))?;
    out.set_item("alpha_hat", fit.estimate.alpha_hat.clone())?;
    out.set_item("pre_seconds", fit.timings.pre_seconds)?;
    out.set_item("stgd_seconds", fit.timings.stgd_seconds)?;
    out.set_item("post_seconds", fit.timings.post_seconds)?;
    Ok(out.into())
}

/// Validate an estimate against ground truth (both as k rows of n values);
/// returns recovery ratio, average error, overlapping NMI, edge count, and
/// bridgeness when degrees are supplied.
#[pyfunction]
#[pyo3(signature = (pi_true, pi_hat, degrees=None, p_threshold=0.01, fdr_q=None))]
fn validate(
    py: Python<'_>,
    pi_true: Vec<Vec<f64>>,
    pi_hat: Vec<Vec<f64>>,
    degrees: Option<Vec<f64>>,
    p_threshold: f64,
    fdr_q: Option<f64>,
) -> PyResult<Py<PyDict>> {
    let t = rows_to_mat(&pi_true)?;
    let e = rows_to_mat(&pi_hat)?;
    let report = validation::validate(&t, &e, degrees.as_deref(), p_threshold, fdr_q)
        .map_err(err_to_py)?;
    let out = PyDict::new(py);
    out.set_item("recovery_ratio", report.recovery_ratio)?;
    out.set_item("avg_error", report.avg_error)?;
    out.set_item("nmi_overlap", report.nmi_overlap)?;
    out.set_item("n_edges", report.n_edges)?;
    out.set_item("p_threshold", report.p_threshold)?;
    if !report.bridgeness.is_empty() {
        out.set_item("bridgeness", report.bridgeness.clone())?;
        out.set_item(
            "degree_corrected_bridgeness",
            report.degree_corrected_bridgeness.clone(),
        )?;
    }
    Ok(out.into())
}

#[pymodule]
fn momentmix_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Corpus>()?;
    m.add_function(wrap_pyfunction!(load_edge_list, m)?)?;
    m.add_function(wrap_pyfunction!(load_bag_of_words, m)?)?;
    m.add_function(wrap_pyfunction!(generate_community, m)?)?;
    m.add_function(wrap_pyfunction!(generate_topics, m)?)?;
    m.add_function(wrap_pyfunction!(fit_community_py, m)?)?;
    m.add_function(wrap_pyfunction!(fit_topic_py, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
