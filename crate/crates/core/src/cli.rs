//! The four pipeline commands behind the command-line interface. Each
//! command reads/writes plain text files and a manifest that reproduces the
//! run; the binary in `src/bin` only parses arguments and dispatches here.

use crate::config::{write_manifest, Mode, Model, RunConfig};
use crate::error::{Error, Result};
use crate::graph_io::{load_bag_of_words, load_edge_list, LoadOptions, SparseGraph};
use crate::linalg::Mat;
use crate::pipeline::{fit_community, fit_topic};
use crate::postprocess::recover_memberships;
use crate::synthgen::{
    generate_lda, generate_mmsb, generate_mmsb_bipartite, sample_memberships, DirichletSpec,
    EdgeModel, GroundTruth, TruthKind,
};
use crate::textio;
use crate::validation::{self, pvalue_matrix, write_pvalue_csv};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const GRAPH_FILE: &str = "graph.txt";
pub const CORPUS_FILE: &str = "corpus.txt";
pub const PI_TRUE_FILE: &str = "pi_true.txt";
pub const P_TRUE_FILE: &str = "p_true.txt";
pub const MU_TRUE_FILE: &str = "mu_true.txt";
pub const ALPHA_TRUE_FILE: &str = "alpha_true.txt";
pub const PI_HAT_FILE: &str = "pi_hat.txt";
pub const MU_HAT_FILE: &str = "mu_hat.txt";
pub const ALPHA_HAT_FILE: &str = "alpha_hat.txt";
pub const W_FILE: &str = "w_pass1.txt";
pub const REMAP_FILE: &str = "remap.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const REPORT_FILE: &str = "report.txt";
pub const PVALUES_FILE: &str = "pvalues.csv";
pub const BRIDGENESS_FILE: &str = "bridgeness.txt";

/// Write a membership estimate keyed by the graph's external node ids, so
/// the file lines up with the ids used in the input edge list.
fn write_estimate_external(path: &Path, pi_hat: &Mat, remap: &[u64]) -> Result<()> {
    use std::io::Write as _;
    let n_ext = remap.iter().copied().max().map_or(0, |m| m + 1);
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    writeln!(w, "# {} {}", pi_hat.rows(), n_ext).map_err(|e| Error::io(path, e))?;
    for i in 0..pi_hat.rows() {
        for j in 0..pi_hat.cols() {
            let v = pi_hat.get(i, j);
            if v != 0.0 {
                writeln!(w, "{} {} {}", i, remap[j], v).map_err(|e| Error::io(path, e))?;
            }
        }
    }
    Ok(())
}

fn refuse_overwrite(paths: &[PathBuf], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    for p in paths {
        if p.exists() {
            return Err(Error::Validation(format!(
                "{} already exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn connectivity_matrix(cfg: &RunConfig) -> Mat {
    Mat::from_fn(cfg.k, cfg.k, |i, j| if i == j { cfg.p_in } else { cfg.p_out })
}

fn dirichlet_spec(cfg: &RunConfig) -> Result<DirichletSpec> {
    if cfg.alpha0 == 0.0 {
        DirichletSpec::block_model(cfg.k)
    } else {
        DirichletSpec::symmetric(cfg.k, cfg.alpha0)
    }
}

/// Generate a synthetic instance plus its ground truth files.
pub fn cmd_generate(cfg: &RunConfig, out_dir: &Path, force: bool) -> Result<()> {
    ensure_dir(out_dir)?;
    let t0 = Instant::now();
    match cfg.mode {
        Mode::Community => {
            let paths: Vec<PathBuf> = [GRAPH_FILE, PI_TRUE_FILE, P_TRUE_FILE, MANIFEST_FILE]
                .iter()
                .map(|f| out_dir.join(f))
                .collect();
            refuse_overwrite(&paths, force)?;
            let spec = dirichlet_spec(cfg)?;
            let pi = sample_memberships(&spec, cfg.n_nodes, cfg.seed)?;
            let p = connectivity_matrix(cfg);
            let truth = GroundTruth {
                pi: pi.clone(),
                kind: TruthKind::Community { p: p.clone() },
            };
            let model = match cfg.model {
                Model::Bernoulli => EdgeModel::Bernoulli,
                Model::Poisson => EdgeModel::Poisson,
            };
            let graph = match cfg.bipartite_split {
                Some(split) => generate_mmsb_bipartite(&truth, model, split, cfg.seed ^ 0xabcd)?,
                None => generate_mmsb(&truth, model, cfg.seed ^ 0xabcd)?,
            };
            graph.write_edge_list(&paths[0])?;
            textio::write_matrix(&paths[1], &pi)?;
            textio::write_matrix(&paths[2], &p)?;
            write_manifest(
                &paths[3],
                cfg,
                &[
                    ("command".into(), "generate".into()),
                    ("edges".into(), (graph.adjacency().nnz() / 2).to_string()),
                    ("elapsed_seconds".into(), format!("{:.3}", t0.elapsed().as_secs_f64())),
                ],
            )
        }
        Mode::Topic => {
            let paths: Vec<PathBuf> = [CORPUS_FILE, MU_TRUE_FILE, ALPHA_TRUE_FILE, MANIFEST_FILE]
                .iter()
                .map(|f| out_dir.join(f))
                .collect();
            refuse_overwrite(&paths, force)?;
            let spec = dirichlet_spec(cfg)?;
            // Block-diagonal-plus-floor topics: distinct supports with overlap.
            let d = cfg.vocab_size;
            let mut mu = Mat::from_fn(d, cfg.k, |i, j| {
                let block = d.div_ceil(cfg.k);
                if i / block == j {
                    1.0
                } else {
                    0.08
                }
            });
            for j in 0..cfg.k {
                let s: f64 = (0..d).map(|i| mu.get(i, j)).sum();
                mu.scale_col(j, 1.0 / s);
            }
            let truth = GroundTruth {
                pi: Mat::zeros(cfg.k, 0),
                kind: TruthKind::Topic { mu: mu.clone() },
            };
            let corpus = generate_lda(&truth, &spec, cfg.n_docs, cfg.doc_length, cfg.seed)?;
            corpus.write_bag_of_words(&paths[0])?;
            textio::write_matrix(&paths[1], &mu)?;
            textio::write_vector(&paths[2], &spec.alpha())?;
            write_manifest(
                &paths[3],
                cfg,
                &[
                    ("command".into(), "generate".into()),
                    ("documents_kept".into(), corpus.n_docs().to_string()),
                    ("documents_skipped".into(), corpus.skipped_docs().to_string()),
                    ("elapsed_seconds".into(), format!("{:.3}", t0.elapsed().as_secs_f64())),
                ],
            )
        }
    }
}

fn load_graph(cfg: &RunConfig, input: &Path) -> Result<SparseGraph> {
    load_edge_list(
        input,
        LoadOptions {
            directed: cfg.directed,
            weighted: cfg.weighted || cfg.model == Model::Poisson,
            bipartite: cfg.bipartite,
        },
    )
}

/// Fit the model and write estimates plus a reproducing manifest.
pub fn cmd_fit(cfg: &RunConfig, input: &Path, out_dir: &Path, force: bool) -> Result<()> {
    ensure_dir(out_dir)?;
    let fit_cfg = cfg.fit_config();
    match cfg.mode {
        Mode::Community => {
            let mut paths = vec![
                out_dir.join(PI_HAT_FILE),
                out_dir.join(ALPHA_HAT_FILE),
                out_dir.join(W_FILE),
                out_dir.join(REMAP_FILE),
                out_dir.join(MANIFEST_FILE),
            ];
            for t in &cfg.threshold_sweep {
                paths.push(out_dir.join(format!("pi_hat_t{}.txt", t)));
            }
            refuse_overwrite(&paths, force)?;
            let t_load = Instant::now();
            let graph = load_graph(cfg, input)?;
            let load_seconds = t_load.elapsed().as_secs_f64();
            let fit = fit_community(&graph, &fit_cfg)
                .map_err(|e| Error::Validation(format!("fit stage failed: {e}")))?;
            write_estimate_external(&paths[0], &fit.estimate.pi_hat, graph.remap())?;
            textio::write_vector(&paths[1], &fit.estimate.alpha_hat)?;
            fit.pass1.ctx.dump_w(&paths[2])?;
            graph.write_remap_table(&paths[3])?;
            // Threshold sweep re-runs only the cheap post-processing stage.
            for (i, t) in cfg.threshold_sweep.iter().enumerate() {
                let est = recover_memberships(
                    &graph,
                    &fit.pass1.partition,
                    (&fit.pass1.ctx, &fit.pass1.est),
                    (&fit.pass2.ctx, &fit.pass2.est),
                    *t,
                )?;
                write_estimate_external(&paths[5 + i], &est.pi_hat, graph.remap())?;
            }
            write_manifest(
                &paths[4],
                cfg,
                &[
                    ("command".into(), "fit".into()),
                    ("input".into(), input.display().to_string()),
                    ("nodes".into(), graph.n_nodes().to_string()),
                    ("self_loops_dropped".into(), graph.self_loops_dropped().to_string()),
                    ("load_seconds".into(), format!("{:.3}", load_seconds)),
                    ("pre_seconds".into(), format!("{:.3}", fit.timings.pre_seconds)),
                    ("stgd_seconds".into(), format!("{:.3}", fit.timings.stgd_seconds)),
                    ("post_seconds".into(), format!("{:.3}", fit.timings.post_seconds)),
                    (
                        "stgd_iterations".into(),
                        (fit.pass1.stgd_iterations + fit.pass2.stgd_iterations).to_string(),
                    ),
                    ("zeroed_columns".into(), fit.estimate.zeroed_columns.to_string()),
                ],
            )
        }
        Mode::Topic => {
            let paths = [
                out_dir.join(MU_HAT_FILE),
                out_dir.join(ALPHA_HAT_FILE),
                out_dir.join(W_FILE),
                out_dir.join(MANIFEST_FILE),
            ];
            refuse_overwrite(&paths, force)?;
            let t_load = Instant::now();
            let corpus = load_bag_of_words(input)?;
            let load_seconds = t_load.elapsed().as_secs_f64();
            let fit = fit_topic(&corpus, &fit_cfg)
                .map_err(|e| Error::Validation(format!("fit stage failed: {e}")))?;
            textio::write_matrix(&paths[0], &fit.estimate.mu_hat)?;
            textio::write_vector(&paths[1], &fit.estimate.alpha_hat)?;
            fit.ctx.dump_w(&paths[2])?;
            write_manifest(
                &paths[3],
                cfg,
                &[
                    ("command".into(), "fit".into()),
                    ("input".into(), input.display().to_string()),
                    ("documents".into(), corpus.n_docs().to_string()),
                    ("documents_skipped".into(), corpus.skipped_docs().to_string()),
                    ("load_seconds".into(), format!("{:.3}", load_seconds)),
                    ("pre_seconds".into(), format!("{:.3}", fit.timings.pre_seconds)),
                    ("stgd_seconds".into(), format!("{:.3}", fit.timings.stgd_seconds)),
                    ("post_seconds".into(), format!("{:.3}", fit.timings.post_seconds)),
                ],
            )
        }
    }
}

/// Validate an estimate against ground truth and write the report.
pub fn cmd_validate(
    cfg: &RunConfig,
    truth_path: &Path,
    estimate_path: &Path,
    graph_path: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    ensure_dir(out_dir)?;
    let pi_true = textio::read_matrix(truth_path)?;
    let pi_hat = textio::read_sparse_triples(estimate_path)?;
    if pi_true.cols() != pi_hat.cols() {
        return Err(Error::Dim(format!(
            "truth covers {} nodes, estimate covers {}",
            pi_true.cols(),
            pi_hat.cols()
        )));
    }
    let degrees: Option<Vec<f64>> = match graph_path {
        Some(p) => Some(load_graph(cfg, p)?.degrees()),
        None => None,
    };
    let report = validation::validate(
        &pi_true,
        &pi_hat,
        degrees.as_deref(),
        cfg.p_threshold,
        cfg.fdr_q,
    )?;
    report.write(&out_dir.join(REPORT_FILE))?;
    let pvals = pvalue_matrix(&pi_true, &pi_hat)?;
    write_pvalue_csv(&pvals, &out_dir.join(PVALUES_FILE))?;
    if !report.bridgeness.is_empty() {
        report.write_bridgeness_table(&out_dir.join(BRIDGENESS_FILE))?;
    }
    println!("recovery_ratio: {}", report.recovery_ratio);
    println!("avg_error: {}", report.avg_error);
    println!("n_edges: {}", report.n_edges);
    Ok(())
}

/// Print a human summary of a run directory (manifest plus report, if any).
pub fn cmd_report(dir: &Path) -> Result<()> {
    let manifest = dir.join(MANIFEST_FILE);
    if manifest.exists() {
        println!("== manifest ({}) ==", manifest.display());
        let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
        print!("{}", text);
    } else {
        println!("no manifest at {}", manifest.display());
    }
    let report = dir.join(REPORT_FILE);
    if report.exists() {
        println!("== validation report ({}) ==", report.display());
        let text = fs::read_to_string(&report).map_err(|e| Error::io(&report, e))?;
        print!("{}", text);
    }
    Ok(())
}
