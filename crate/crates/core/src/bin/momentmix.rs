use clap::{Args, Parser, Subcommand};
use momentmix::cli;
use momentmix::config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

/// Moment-tensor learning of overlapping communities and topics.
#[derive(Parser)]
#[command(name = "momentmix", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// key = value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for the parallel sections (1 = fully deterministic);
    /// defaults to $MOMENTMIX_WORKERS, then all cores.
    #[arg(long)]
    workers: Option<usize>,

    /// Generic `key=value` overrides applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph or corpus with ground truth.
    Generate {
        #[command(flatten)]
        common: CommonOpts,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overwrite existing outputs.
        #[arg(long)]
        force: bool,
    },
    /// Fit community memberships or topics from an input file.
    Fit {
        #[command(flatten)]
        common: CommonOpts,
        /// Edge-list (community mode) or bag-of-words file (topic mode).
        #[arg(long)]
        input: PathBuf,
        /// Output directory for estimates and the manifest.
        #[arg(long)]
        out: PathBuf,
        /// Overwrite existing outputs.
        #[arg(long)]
        force: bool,
        /// Comma-separated extra thresholds; one estimate file per value.
        #[arg(long = "threshold-sweep")]
        threshold_sweep: Option<String>,
        /// Write a per-epoch `epoch,loss,max_change` CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare an estimate against ground truth.
    Validate {
        #[command(flatten)]
        common: CommonOpts,
        /// Ground-truth membership matrix (dense text).
        #[arg(long)]
        truth: PathBuf,
        /// Estimated memberships (sparse triples).
        #[arg(long)]
        estimate: PathBuf,
        /// Graph file for degree-corrected bridgeness.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Output directory for the report.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a run directory (manifest and report).
    Report {
        /// Run directory.
        #[arg(long)]
        dir: PathBuf,
    },
}

fn resolve_config(common: &CommonOpts) -> momentmix::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(w) = common.workers {
        cfg.workers = Some(w);
    } else if let Ok(env) = std::env::var("MOMENTMIX_WORKERS") {
        if cfg.workers.is_none() {
            cfg.workers = env.parse().ok();
        }
    }
    for kv in &common.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            momentmix::Error::Config(format!("--set expects KEY=VALUE, got {kv:?}"))
        })?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn init_workers(cfg: &RunConfig) {
    if let Some(w) = cfg.workers {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global();
    }
}

fn run() -> momentmix::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { common, out, force } => {
            let cfg = resolve_config(&common)?;
            init_workers(&cfg);
            cli::cmd_generate(&cfg, &out, force)
        }
        Command::Fit {
            common,
            input,
            out,
            force,
            threshold_sweep,
            trace,
        } => {
            let mut cfg = resolve_config(&common)?;
            if let Some(sweep) = threshold_sweep {
                cfg.set("threshold_sweep", &sweep)?;
            }
            if let Some(trace) = trace {
                cfg.trace = Some(trace);
            }
            init_workers(&cfg);
            cli::cmd_fit(&cfg, &input, &out, force)
        }
        Command::Validate {
            common,
            truth,
            estimate,
            graph,
            out,
        } => {
            let cfg = resolve_config(&common)?;
            init_workers(&cfg);
            cli::cmd_validate(&cfg, &truth, &estimate, graph.as_deref(), &out)
        }
        Command::Report { dir } => cli::cmd_report(&dir),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
