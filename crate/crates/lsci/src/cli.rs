//! Command implementations behind the `lsci` binary: dataset generation,
//! one-off calibration and prediction, benchmarking, and report aggregation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::conformal::{calibrate, CalibratedPredictor};
use crate::datagen::{self, SynthTask};
use crate::error::{LsciError, Result};
use crate::eval::{self, fit_base_model, BenchRow, BenchmarkOutput};
use crate::function::FunctionSet;
use crate::io;
use crate::localize::select_bandwidth;
use crate::sampler::sample_ensemble;
use crate::seeding::derive_seed;

/// Generate a dataset directory for the configured task.
pub fn cmd_gen(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let ds = datagen::generate(cfg.task, &cfg.gen_sizes(), cfg.seed)?;
    datagen::write_dataset(out_dir, &ds, cfg.seed)
}

/// Summary fields shared by the calibrate/predict sidecars.
#[derive(Debug, Clone, Serialize)]
pub struct PredictSidecar {
    pub task: String,
    pub index: usize,
    pub alpha: f64,
    pub q: f64,
    pub lambda: f64,
    pub localizer: String,
    pub coverage_gap_bound: Option<f64>,
    pub acceptance_rate: Option<f64>,
    pub n_accepted: Option<usize>,
    pub n_proposed: Option<usize>,
    pub covered: Option<bool>,
    pub inside_fraction: Option<f64>,
    pub seed: u64,
}

struct CalibrationContext {
    predictor: CalibratedPredictor,
    residuals_cal: FunctionSet,
    lambda: f64,
    task: SynthTask,
}

fn calibrate_from_dataset(
    cfg: &RunConfig,
    dataset_dir: &Path,
    index: usize,
) -> Result<CalibrationContext> {
    let ds = datagen::read_dataset(dataset_dir)?;
    if index >= ds.test.len() {
        return Err(LsciError::InvalidConfig(format!(
            "test index {index} out of {} samples",
            ds.test.len()
        )));
    }
    let base = fit_base_model(cfg, &ds)?;
    let residuals_cal = base.residuals(&ds.cal.inputs, &ds.cal.outputs)?;
    let f_test = ds.test.inputs.sample(index).clone();
    let prediction = base.predict_at(&f_test, index)?;
    let mut cal_cfg = cfg.calibration_config(derive_seed(cfg.seed, index as u64));
    if cfg.select_lambda {
        let lambda = select_bandwidth(
            &ds.cal.inputs,
            &residuals_cal,
            cfg.localizer,
            &cfg.lambda_candidates(),
            cfg.alpha,
            &cal_cfg,
            &cfg.cv,
            derive_seed(cfg.seed, 0xcf),
        )?;
        cal_cfg.localizer.lambda = lambda;
    }
    let predictor = calibrate(&residuals_cal, &ds.cal.inputs, &f_test, &prediction, &cal_cfg)?;
    Ok(CalibrationContext {
        lambda: cal_cfg.localizer.lambda,
        predictor,
        residuals_cal,
        task: ds.task,
    })
}

/// Calibrate for one test index and write the frozen predictor as JSON.
pub fn cmd_calibrate(
    cfg: &RunConfig,
    dataset_dir: &Path,
    index: usize,
    out_file: &Path,
) -> Result<PredictSidecar> {
    let ctx = calibrate_from_dataset(cfg, dataset_dir, index)?;
    if let Some(parent) = out_file.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out_file, ctx.predictor.to_json()? + "\n")?;
    Ok(PredictSidecar {
        task: ctx.task.name().to_string(),
        index,
        alpha: cfg.alpha,
        q: ctx.predictor.q(),
        lambda: ctx.lambda,
        localizer: cfg.localizer.name().to_string(),
        coverage_gap_bound: ctx.predictor.gap_bound().ok(),
        acceptance_rate: None,
        n_accepted: None,
        n_proposed: None,
        covered: None,
        inside_fraction: None,
        seed: cfg.seed,
    })
}

/// Calibrate, sample, and write prediction/band/ensemble CSVs plus a JSON
/// sidecar for one test index.
pub fn cmd_predict(
    cfg: &RunConfig,
    dataset_dir: &Path,
    index: usize,
    out_dir: &Path,
) -> Result<PredictSidecar> {
    let ds = datagen::read_dataset(dataset_dir)?;
    let ctx = calibrate_from_dataset(cfg, dataset_dir, index)?;
    std::fs::create_dir_all(out_dir)?;
    let grid = ctx.predictor.prediction().grid().clone();

    let ens = sample_ensemble(
        &ctx.predictor,
        &ctx.residuals_cal,
        &cfg.sampler_config(),
        derive_seed(cfg.seed, 0xbad5eed ^ index as u64),
    )?;
    let band = ens.to_band()?;

    let prediction_set =
        FunctionSet::new(grid.clone(), vec![ctx.predictor.prediction().clone()])?;
    io::write_function_set_csv(&out_dir.join("prediction.csv"), &prediction_set)?;
    let band_set = FunctionSet::new(grid.clone(), vec![band.lower.clone(), band.upper.clone()])?;
    io::write_function_set_csv(&out_dir.join("band.csv"), &band_set)?;
    let ensemble_set = FunctionSet::new(grid.clone(), ens.members().to_vec())?;
    io::write_function_set_csv(&out_dir.join("ensemble.csv"), &ensemble_set)?;

    let g_test = ds.test.outputs.sample(index);
    let sidecar = PredictSidecar {
        task: ctx.task.name().to_string(),
        index,
        alpha: cfg.alpha,
        q: ctx.predictor.q(),
        lambda: ctx.lambda,
        localizer: cfg.localizer.name().to_string(),
        coverage_gap_bound: ctx.predictor.gap_bound().ok(),
        acceptance_rate: Some(ens.acceptance_rate()),
        n_accepted: Some(ens.n_accepted()),
        n_proposed: Some(ens.n_proposed()),
        covered: Some(ctx.predictor.contains(g_test)?),
        inside_fraction: Some(band.inside_fraction(g_test)?),
        seed: cfg.seed,
    };
    let text = serde_json::to_string_pretty(&sidecar)?;
    std::fs::write(out_dir.join("sidecar.json"), text + "\n")?;
    Ok(sidecar)
}

const RESULTS_HEADER: &str = "task,method,projection,depth,localizer,lambda,replicate,seed,n_eval,coverage,risk,median_width,dcr,dcw,gap_bound_mean,acceptance_rate,elapsed_s";

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| io::format_f64(x)).unwrap_or_default()
}

fn row_to_csv(r: &BenchRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3}",
        r.task,
        r.method,
        r.projection,
        r.depth,
        r.localizer,
        if r.lambda.is_nan() {
            String::new()
        } else {
            io::format_f64(r.lambda)
        },
        r.replicate,
        r.seed,
        r.n_eval,
        io::format_f64(r.coverage),
        opt_field(r.risk),
        opt_field(r.median_width),
        opt_field(r.dcr),
        opt_field(r.dcw),
        opt_field(r.gap_bound_mean),
        opt_field(r.acceptance_rate),
        r.elapsed_s,
    )
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse::<f64>()
            .map(Some)
            .map_err(|e| LsciError::Parse(format!("bad float {s:?}: {e}")))
    }
}

fn parse_results_csv(path: &Path) -> Result<Vec<BenchRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| LsciError::Parse("empty results csv".into()))?;
    if header != RESULTS_HEADER {
        return Err(LsciError::Parse(format!(
            "unexpected results header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 17 {
            return Err(LsciError::Parse(format!("bad results row {line:?}")));
        }
        rows.push(BenchRow {
            task: f[0].to_string(),
            method: f[1].to_string(),
            projection: f[2].to_string(),
            depth: f[3].to_string(),
            localizer: f[4].to_string(),
            lambda: parse_opt(f[5])?.unwrap_or(f64::NAN),
            replicate: f[6]
                .parse()
                .map_err(|e| LsciError::Parse(format!("bad replicate: {e}")))?,
            seed: f[7]
                .parse()
                .map_err(|e| LsciError::Parse(format!("bad seed: {e}")))?,
            n_eval: f[8]
                .parse()
                .map_err(|e| LsciError::Parse(format!("bad n_eval: {e}")))?,
            coverage: parse_opt(f[9])?.unwrap_or(f64::NAN),
            risk: parse_opt(f[10])?,
            median_width: parse_opt(f[11])?,
            dcr: parse_opt(f[12])?,
            dcw: parse_opt(f[13])?,
            gap_bound_mean: parse_opt(f[14])?,
            acceptance_rate: parse_opt(f[15])?,
            elapsed_s: parse_opt(f[16])?.unwrap_or(0.0),
        });
    }
    Ok(rows)
}

/// Run the benchmark, streaming rows to `results.csv` as replicates finish,
/// then write the aggregated `summary.json`.
pub fn cmd_benchmark(cfg: &RunConfig, out_dir: &Path) -> Result<BenchmarkOutput> {
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("results.csv");
    let mut csv = BufWriter::new(File::create(&csv_path)?);
    writeln!(csv, "{RESULTS_HEADER}")?;
    let out = eval::run_benchmark(cfg, |row| {
        // flush per row so partial progress survives a crash
        let _ = writeln!(csv, "{}", row_to_csv(row));
        let _ = csv.flush();
    })?;
    drop(csv);
    write_summary_json(&out_dir.join("summary.json"), cfg, &out)?;
    Ok(out)
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    config: &'a RunConfig,
    n_failed_replicates: usize,
    all_cells_produced: bool,
    cells: &'a [eval::CellSummary],
}

fn write_summary_json(path: &Path, cfg: &RunConfig, out: &BenchmarkOutput) -> Result<()> {
    let doc = SummaryDoc {
        config: cfg,
        n_failed_replicates: out.n_failed_replicates,
        all_cells_produced: out.all_cells_produced,
        cells: &out.summaries,
    };
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Aggregate a results CSV into per-cell summaries; prints a text table and
/// optionally writes `summary.json` next to nothing in particular.
pub fn cmd_report(results_csv: &Path, out_json: Option<&Path>) -> Result<String> {
    let rows = parse_results_csv(results_csv)?;
    if rows.is_empty() {
        return Err(LsciError::Parse("results csv has no rows".into()));
    }
    let summaries = eval::summarize(&rows);
    let mut table = String::new();
    table.push_str(&format!(
        "{:<12} {:<7} {:<7} {:<12} {:<10} {:>7} {:>18} {:>14} {:>8} {:>8}\n",
        "task", "method", "proj", "depth", "localizer", "lambda", "coverage", "width", "dCR", "dCW"
    ));
    for s in &summaries {
        table.push_str(&format!(
            "{:<12} {:<7} {:<7} {:<12} {:<10} {:>7} {:>10.4} ± {:>5.3} {:>8} {:>8} {:>8}\n",
            s.task,
            s.method,
            s.projection,
            s.depth,
            s.localizer,
            if s.lambda.is_nan() {
                "-".to_string()
            } else {
                format!("{:.2}", s.lambda)
            },
            s.coverage_mean,
            s.coverage_two_sigma,
            s.width_mean
                .map(|w| format!("{w:.4}"))
                .unwrap_or_else(|| "-".into()),
            s.dcr_mean
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".into()),
            s.dcw_mean
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".into()),
        ));
    }
    if let Some(path) = out_json {
        #[derive(Serialize)]
        struct ReportDoc<'a> {
            cells: &'a [eval::CellSummary],
        }
        let text = serde_json::to_string_pretty(&ReportDoc { cells: &summaries })?;
        std::fs::write(path, text + "\n")?;
    }
    Ok(table)
}

/// Seed resolution: explicit flag beats config beats the `LSCI_SEED`
/// environment variable beats the built-in default.
pub fn resolve_seed(flag: Option<u64>, config_seed: Option<u64>) -> u64 {
    flag.or(config_seed)
        .or_else(|| {
            std::env::var("LSCI_SEED")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or_else(|| RunConfig::default().seed)
}
