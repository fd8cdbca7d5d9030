//! Run configuration: a flat key=value text format plus programmatic
//! overrides, and the run manifest that makes a fit reproducible.
//!
//! Precedence: defaults < config file < command-line flags. The manifest a
//! fit writes out is itself a valid config file containing every resolved
//! value, so re-running from a manifest reproduces the run bit-identically
//! in single-worker mode.

use crate::error::{Error, Result};
use crate::pipeline::FitConfig;
use crate::whitening::WhitenMethod;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Community,
    Topic,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "community" => Ok(Mode::Community),
            "topic" => Ok(Mode::Topic),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Community => "community",
            Mode::Topic => "topic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Bernoulli,
    Poisson,
}

impl Model {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(Model::Bernoulli),
            "poisson" => Ok(Model::Poisson),
            other => Err(Error::Config(format!("unknown edge model {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Bernoulli => "bernoulli",
            Model::Poisson => "poisson",
        }
    }
}

/// Everything a run needs, resolved from defaults, config file, and flags.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub k: usize,
    pub alpha0: f64,
    pub model: Model,
    pub fractions: [f64; 4],
    pub whiten: WhitenMethod,
    pub power_iters: usize,
    pub theta: f64,
    pub learn_rate0: Option<f64>,
    pub decay_tau: Option<f64>,
    pub max_epochs: usize,
    pub batch: usize,
    pub tol: f64,
    pub threshold: f64,
    pub threshold_sweep: Vec<f64>,
    pub p_threshold: f64,
    pub fdr_q: Option<f64>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub trace: Option<PathBuf>,
    // generation parameters
    pub n_nodes: usize,
    pub n_docs: usize,
    pub doc_length: usize,
    pub vocab_size: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub bipartite_split: Option<usize>,
    // input options
    pub directed: bool,
    pub weighted: bool,
    pub bipartite: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Community,
            k: 5,
            alpha0: 0.0,
            model: Model::Bernoulli,
            fractions: [0.25; 4],
            whiten: WhitenMethod::TallThinSvd,
            power_iters: 1,
            theta: 1.0,
            learn_rate0: None,
            decay_tau: None,
            max_epochs: 200,
            batch: 1,
            tol: 1e-6,
            threshold: 0.05,
            threshold_sweep: Vec::new(),
            p_threshold: 0.01,
            fdr_q: None,
            seed: 0,
            workers: None,
            trace: None,
            n_nodes: 1000,
            n_docs: 10_000,
            doc_length: 50,
            vocab_size: 100,
            p_in: 0.3,
            p_out: 0.05,
            bipartite_split: None,
            directed: false,
            weighted: false,
            bipartite: false,
        }
    }
}

impl RunConfig {
    /// Parse a key=value file; `#` lines are comments.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_file(path)?;
        Ok(cfg)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        for (lineno, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("expected `key = value`, got {:?}", line),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Set one option from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
        }
        match key {
            "mode" => self.mode = Mode::parse(value)?,
            "k" => self.k = num(key, value)?,
            "alpha0" => self.alpha0 = num(key, value)?,
            "model" => self.model = Model::parse(value)?,
            "fractions" => {
                let parts: Vec<f64> = value
                    .split(',')
                    .map(|t| num("fractions", t.trim()))
                    .collect::<Result<_>>()?;
                if parts.len() != 4 {
                    return Err(Error::Config(
                        "fractions needs four comma-separated values (X,A,B,C)".into(),
                    ));
                }
                self.fractions = [parts[0], parts[1], parts[2], parts[3]];
            }
            "whiten" => self.whiten = WhitenMethod::parse(value)?,
            "power_iters" => self.power_iters = num(key, value)?,
            "theta" => self.theta = num(key, value)?,
            "learn_rate0" => self.learn_rate0 = Some(num(key, value)?),
            "decay_tau" => self.decay_tau = Some(num(key, value)?),
            "max_epochs" => self.max_epochs = num(key, value)?,
            "batch" => self.batch = num(key, value)?,
            "tol" => self.tol = num(key, value)?,
            "threshold" => self.threshold = num(key, value)?,
            "threshold_sweep" => {
                self.threshold_sweep = value
                    .split(',')
                    .map(|t| num("threshold_sweep", t.trim()))
                    .collect::<Result<_>>()?;
            }
            "p_threshold" => self.p_threshold = num(key, value)?,
            "fdr_q" => {
                self.fdr_q = if value == "none" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "seed" => self.seed = num(key, value)?,
            "workers" => self.workers = Some(num(key, value)?),
            "trace" => self.trace = Some(PathBuf::from(value)),
            "n_nodes" => self.n_nodes = num(key, value)?,
            "n_docs" => self.n_docs = num(key, value)?,
            "doc_length" => self.doc_length = num(key, value)?,
            "vocab_size" => self.vocab_size = num(key, value)?,
            "p_in" => self.p_in = num(key, value)?,
            "p_out" => self.p_out = num(key, value)?,
            "bipartite_split" => self.bipartite_split = Some(num(key, value)?),
            "directed" => self.directed = num(key, value)?,
            "weighted" => self.weighted = num(key, value)?,
            "bipartite" => self.bipartite = num(key, value)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// All resolved values, in stable order, as config-file text.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("mode", self.mode.name().into());
        put("k", self.k.to_string());
        put("alpha0", format!("{}", self.alpha0));
        put("model", self.model.name().into());
        put(
            "fractions",
            self.fractions
                .iter()
                .map(|f| format!("{}", f))
                .collect::<Vec<_>>()
                .join(","),
        );
        put("whiten", self.whiten.name().into());
        put("power_iters", self.power_iters.to_string());
        put("theta", format!("{}", self.theta));
        if let Some(lr) = self.learn_rate0 {
            put("learn_rate0", format!("{}", lr));
        }
        if let Some(tau) = self.decay_tau {
            put("decay_tau", format!("{}", tau));
        }
        put("max_epochs", self.max_epochs.to_string());
        put("batch", self.batch.to_string());
        put("tol", format!("{}", self.tol));
        put("threshold", format!("{}", self.threshold));
        if !self.threshold_sweep.is_empty() {
            put(
                "threshold_sweep",
                self.threshold_sweep
                    .iter()
                    .map(|f| format!("{}", f))
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        put("p_threshold", format!("{}", self.p_threshold));
        put("fdr_q", self.fdr_q.map_or("none".into(), |q| format!("{}", q)));
        put("seed", self.seed.to_string());
        if let Some(w) = self.workers {
            put("workers", w.to_string());
        }
        put("n_nodes", self.n_nodes.to_string());
        put("n_docs", self.n_docs.to_string());
        put("doc_length", self.doc_length.to_string());
        put("vocab_size", self.vocab_size.to_string());
        put("p_in", format!("{}", self.p_in));
        put("p_out", format!("{}", self.p_out));
        if let Some(s) = self.bipartite_split {
            put("bipartite_split", s.to_string());
        }
        put("directed", self.directed.to_string());
        put("weighted", self.weighted.to_string());
        put("bipartite", self.bipartite.to_string());
        m
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            k: self.k,
            alpha0: self.alpha0,
            fractions: self.fractions,
            whiten_method: self.whiten,
            power_iters: self.power_iters,
            theta: self.theta,
            learn_rate0: self.learn_rate0,
            decay_tau: self.decay_tau,
            max_epochs: self.max_epochs,
            batch: self.batch,
            tol: self.tol,
            threshold: self.threshold,
            seed: self.seed,
            shifted: None,
            trace_path: self.trace.clone(),
        }
    }
}

/// Write a manifest: the resolved config plus run facts (timings, seeds,
/// versions) as `key = value` lines. Config keys round-trip through
/// `RunConfig::apply_file`; `run.*` keys are informational and prefixed so
/// they are never confused with configuration.
pub fn write_manifest(
    path: &Path,
    cfg: &RunConfig,
    extra: &[(String, String)],
) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    (|| -> std::io::Result<()> {
        writeln!(w, "# momentmix run manifest")?;
        for (k, v) in cfg.entries() {
            writeln!(w, "{} = {}", k, v)?;
        }
        for (k, v) in extra {
            writeln!(w, "# run.{} = {}", k, v)?;
        }
        Ok(())
    })()
    .map_err(|e| Error::io(path, e))
}
