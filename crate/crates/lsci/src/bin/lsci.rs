//! Command-line front end: dataset generation, calibration, prediction,
//! benchmarking, and report aggregation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lsci::cli;
use lsci::config::{MethodKind, RunConfig, SweepKind};
use lsci::datagen::SynthTask;
use lsci::depth::DepthKind;
use lsci::error::Result;
use lsci::localize::LocalizerKernel;
use lsci::projections::ProjectionKind;

#[derive(Parser)]
#[command(
    name = "lsci",
    about = "Locally adaptive conformal prediction sets for operator models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each one overrides the corresponding
/// config-file field.
#[derive(Args, Clone)]
struct CommonOpts {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed (falls back to the config file, then LSCI_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    task: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Projection family: rand|fpca|wave|rfpca|rwave.
    #[arg(long, global = true)]
    projection: Option<String>,
    #[arg(long, global = true)]
    n_phi: Option<usize>,
    /// Depth kind: tukey|norm_inf|mahalanobis.
    #[arg(long, global = true)]
    depth: Option<String>,
    /// Localization kernel: l2|linf|knn.
    #[arg(long, global = true)]
    localizer: Option<String>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Pick the bandwidth by cross validation over the lambda grid.
    #[arg(long, global = true)]
    select_lambda: bool,
    /// Sampler components (M).
    #[arg(long, global = true)]
    m_components: Option<usize>,
    /// Accepted ensemble size (n_s).
    #[arg(long, global = true)]
    n_samples: Option<usize>,
    #[arg(long, global = true)]
    knockoff_scale: Option<f64>,
    #[arg(long, global = true)]
    n_train: Option<usize>,
    #[arg(long, global = true)]
    n_cal: Option<usize>,
    #[arg(long, global = true)]
    n_test: Option<usize>,
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Cap evaluated test points per replicate.
    #[arg(long, global = true)]
    max_eval_test: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Gen {
        #[command(flatten)]
        common: CommonOpts,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate a prediction set for one test index and save the predictor.
    Calibrate {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        index: usize,
        /// Output predictor JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate, sample, and write band/ensemble CSVs for one test index.
    Predict {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        index: usize,
        /// Output directory for prediction/band/ensemble/sidecar files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the replicate benchmark and write results.csv + summary.json.
    Benchmark {
        #[command(flatten)]
        common: CommonOpts,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Evaluate all methods (lsci + baselines).
        #[arg(long)]
        all_methods: bool,
        /// Sweep shape: none|projections_depths|localizers_lambdas.
        #[arg(long)]
        sweep: Option<String>,
        /// Sample ensembles and report band metrics.
        #[arg(long)]
        compute_bands: bool,
    },
    /// Aggregate a results.csv into a table and optional summary JSON.
    Report {
        /// results.csv produced by `benchmark`.
        #[arg(long)]
        results: PathBuf,
        /// Optional JSON output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_sweep(s: &str) -> Result<SweepKind> {
    match s {
        "none" => Ok(SweepKind::None),
        "projections_depths" => Ok(SweepKind::ProjectionsDepths),
        "localizers_lambdas" => Ok(SweepKind::LocalizersLambdas),
        other => Err(lsci::LsciError::InvalidConfig(format!(
            "unknown sweep {other:?}"
        ))),
    }
}

/// Load the config file (if any) and apply flag overrides.
fn build_config(common: &CommonOpts) -> Result<RunConfig> {
    let (mut cfg, config_seed) = match &common.config {
        Some(path) => {
            let cfg = RunConfig::from_json_file(path)?;
            // the raw document tells us whether a seed was explicitly given
            let raw: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(path)?)?;
            let had_seed = raw.get("seed").and_then(|v| v.as_u64());
            (cfg, had_seed)
        }
        None => (RunConfig::default(), None),
    };
    cfg.seed = cli::resolve_seed(common.seed, config_seed);
    if let Some(t) = &common.task {
        cfg.task = SynthTask::parse(t)?;
    }
    if let Some(v) = common.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = common.delta {
        cfg.delta = v;
    }
    if let Some(p) = &common.projection {
        cfg.projection = ProjectionKind::parse(p)?;
    }
    if let Some(v) = common.n_phi {
        cfg.n_phi = v;
    }
    if let Some(d) = &common.depth {
        cfg.depth = DepthKind::parse(d)?;
    }
    if let Some(l) = &common.localizer {
        cfg.localizer = LocalizerKernel::parse(l)?;
    }
    if let Some(v) = common.lambda {
        cfg.lambda = v;
    }
    if common.select_lambda {
        cfg.select_lambda = true;
    }
    if let Some(v) = common.m_components {
        cfg.m_components = v;
    }
    if let Some(v) = common.n_samples {
        cfg.n_samples = v;
    }
    if let Some(v) = common.knockoff_scale {
        cfg.knockoff_scale = Some(v);
    }
    if let Some(v) = common.n_train {
        cfg.n_train = Some(v);
    }
    if let Some(v) = common.n_cal {
        cfg.n_cal = Some(v);
    }
    if let Some(v) = common.n_test {
        cfg.n_test = Some(v);
    }
    if let Some(v) = common.grid_points {
        cfg.grid_points = v;
    }
    if let Some(v) = common.replicates {
        cfg.replicates = v;
    }
    if let Some(v) = common.max_eval_test {
        cfg.max_eval_test = Some(v);
    }
    if let Some(v) = common.threads {
        cfg.threads = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads(threads: usize) {
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn run() -> Result<ExitCode> {
    let cli_args = Cli::parse();
    match cli_args.command {
        Command::Gen { common, out } => {
            let cfg = build_config(&common)?;
            init_threads(cfg.threads);
            cli::cmd_gen(&cfg, &out)?;
            println!("dataset written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Calibrate {
            common,
            dataset,
            index,
            out,
        } => {
            let cfg = build_config(&common)?;
            init_threads(cfg.threads);
            let sidecar = cli::cmd_calibrate(&cfg, &dataset, index, &out)?;
            println!("{}", serde_json::to_string_pretty(&sidecar)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict {
            common,
            dataset,
            index,
            out,
        } => {
            let cfg = build_config(&common)?;
            init_threads(cfg.threads);
            let sidecar = cli::cmd_predict(&cfg, &dataset, index, &out)?;
            println!("{}", serde_json::to_string_pretty(&sidecar)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Benchmark {
            common,
            out,
            all_methods,
            sweep,
            compute_bands,
        } => {
            let mut cfg = build_config(&common)?;
            if all_methods {
                cfg.methods = vec![
                    MethodKind::Lsci,
                    MethodKind::Conf1,
                    MethodKind::Conf2,
                    MethodKind::Supr,
                ];
            }
            if let Some(s) = sweep {
                cfg.sweep = parse_sweep(&s)?;
            }
            if compute_bands {
                cfg.compute_bands = true;
            }
            init_threads(cfg.threads);
            let output = cli::cmd_benchmark(&cfg, &out)?;
            println!(
                "{} rows, {} failed replicates; results in {}",
                output.rows.len(),
                output.n_failed_replicates,
                out.display()
            );
            if output.all_cells_produced {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Report { results, out } => {
            let table = cli::cmd_report(&results, out.as_deref())?;
            print!("{table}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
