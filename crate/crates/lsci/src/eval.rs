//! Metrics (risk, width, distance correlation), split-conformal baselines,
//! and the replicate benchmark harness.

use rayon::prelude::*;
use serde::Serialize;

use crate::basemodel::{fit_ridge, BasePredictor};
use crate::config::{MethodKind, RunConfig, SweepKind};
use crate::conformal::{
    build_measures, build_scoring_family, calibration_scores_projected, threshold,
    CalibratedPredictor,
};
use crate::datagen::{self, SynthDataset, SynthTask};
use crate::depth::{depth_of_scores_self_slot, DepthKind};
use crate::error::{LsciError, Result};
use crate::function::{FunctionSample, FunctionSet};
use crate::localize::{
    coverage_gap_bound, knockoff, local_weights, select_bandwidth, LocalizerKernel, LocalizerKind,
};
use crate::projections::{ProjectedScores, ProjectionFamily, ProjectionKind};
use crate::sampler::{sample_ensemble, PredictionBand};
use crate::seeding::{derive_seed, derive_seed2};

/// Median of the pointwise gap `upper - lower`.
pub fn width(band: &PredictionBand) -> f64 {
    let mut gaps: Vec<f64> = band
        .upper
        .values()
        .iter()
        .zip(band.lower.values())
        .map(|(u, l)| u - l)
        .collect();
    gaps.sort_by(f64::total_cmp);
    median_of_sorted(&gaps)
}

fn median_of_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Fraction of targets whose quadrature-weighted inside-fraction reaches
/// `1 - delta`.
pub fn risk(bands: &[PredictionBand], targets: &FunctionSet, delta: f64) -> Result<f64> {
    if bands.len() != targets.len() {
        return Err(LsciError::ShapeMismatch(format!(
            "{} bands for {} targets",
            bands.len(),
            targets.len()
        )));
    }
    if bands.is_empty() {
        return Ok(0.0);
    }
    let mut covered = 0usize;
    for (band, target) in bands.iter().zip(targets.samples()) {
        if band.inside_fraction(target)? >= 1.0 - delta {
            covered += 1;
        }
    }
    Ok(covered as f64 / bands.len() as f64)
}

/// Distance correlation (the V-statistic form via doubly-centered distance
/// matrices). Degenerate inputs (zero distance variance) return 0.
pub fn distance_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if n != y.len() || n < 4 {
        return Err(LsciError::ShapeMismatch(format!(
            "distance correlation needs equal lengths >= 4, got {n} and {}",
            y.len()
        )));
    }
    // row means and grand means of the distance matrices, O(n^2) time, O(n) space
    let mut row_a = vec![0.0; n];
    let mut row_b = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            row_a[i] += (x[i] - x[j]).abs();
            row_b[i] += (y[i] - y[j]).abs();
        }
    }
    let grand_a: f64 = row_a.iter().sum::<f64>() / (n * n) as f64;
    let grand_b: f64 = row_b.iter().sum::<f64>() / (n * n) as f64;
    for r in row_a.iter_mut() {
        *r /= n as f64;
    }
    for r in row_b.iter_mut() {
        *r /= n as f64;
    }
    let mut dcov2 = 0.0;
    let mut dvar_a = 0.0;
    let mut dvar_b = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = (x[i] - x[j]).abs() - row_a[i] - row_a[j] + grand_a;
            let b = (y[i] - y[j]).abs() - row_b[i] - row_b[j] + grand_b;
            dcov2 += a * b;
            dvar_a += a * a;
            dvar_b += b * b;
        }
    }
    let nn = (n * n) as f64;
    dcov2 /= nn;
    dvar_a /= nn;
    dvar_b /= nn;
    if dvar_a <= 0.0 || dvar_b <= 0.0 {
        return Ok(0.0);
    }
    let r2 = dcov2 / (dvar_a * dvar_b).sqrt();
    Ok(r2.max(0.0).sqrt().min(1.0))
}

/// Conformal order statistic: the `⌈(1-α)(n+1)⌉`-th smallest of `n` scores.
fn conformal_quantile(scores: &[f64], alpha: f64) -> Result<f64> {
    let n = scores.len();
    let rank = ((1.0 - alpha) * (n as f64 + 1.0) - 1e-9).ceil() as usize;
    if rank > n || n == 0 {
        return Err(LsciError::InsufficientCalibration {
            needed: ((1.0 - alpha) / alpha).ceil() as usize,
            got: n,
        });
    }
    let mut sorted = scores.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(sorted[rank.max(1) - 1])
}

/// A fitted split-conformal baseline band rule.
#[derive(Debug, Clone)]
pub struct BaselineRule {
    kind: MethodKind,
    /// Conformal quantile of the scores.
    k: f64,
    /// Constant half-width of the rendered band.
    half_width: f64,
    /// Pointwise modulation profile (Conf2 only).
    shape: Option<Vec<f64>>,
}

impl BaselineRule {
    pub fn kind(&self) -> MethodKind {
        self.kind
    }

    /// Conformal score quantile backing the rule.
    pub fn quantile(&self) -> f64 {
        self.k
    }

    /// Half-width profile over the grid.
    pub fn half_widths(&self, p: usize) -> Vec<f64> {
        match &self.shape {
            Some(s) => s.iter().map(|si| self.k * si).collect(),
            None => vec![self.half_width; p],
        }
    }

    /// Set membership of a residual under the rule's own score.
    pub fn contains_residual(&self, r: &FunctionSample) -> bool {
        match self.kind {
            MethodKind::Conf1 => r.l2_norm() <= self.k,
            MethodKind::Supr => r.sup_norm() <= self.k,
            MethodKind::Conf2 => {
                let s = self.shape.as_ref().expect("conf2 carries a shape");
                r.values()
                    .iter()
                    .zip(s)
                    .map(|(v, si)| v.abs() / si)
                    .fold(0.0, f64::max)
                    <= self.k
            }
            MethodKind::Lsci => unreachable!("lsci is not a baseline rule"),
        }
    }

    /// Render the band centered on a prediction.
    pub fn band_for(&self, prediction: &FunctionSample) -> Result<PredictionBand> {
        let hw = self.half_widths(prediction.len());
        let lower: Vec<f64> = prediction
            .values()
            .iter()
            .zip(&hw)
            .map(|(v, h)| v - h)
            .collect();
        let upper: Vec<f64> = prediction
            .values()
            .iter()
            .zip(&hw)
            .map(|(v, h)| v + h)
            .collect();
        Ok(PredictionBand {
            lower: FunctionSample::new(prediction.grid().clone(), lower)?,
            upper: FunctionSample::new(prediction.grid().clone(), upper)?,
        })
    }
}

/// Split conformal on L2 residual norms. The L2 ball is rendered for band
/// metrics as the constant band of equivalent half-width
/// `k_n / sqrt(domain measure)`.
pub fn baseline_conf_l2(residuals_cal: &FunctionSet, alpha: f64) -> Result<BaselineRule> {
    let scores: Vec<f64> = residuals_cal.samples().iter().map(|r| r.l2_norm()).collect();
    let k = conformal_quantile(&scores, alpha)?;
    Ok(BaselineRule {
        kind: MethodKind::Conf1,
        k,
        half_width: k / residuals_cal.grid().measure().sqrt(),
        shape: None,
    })
}

/// Split conformal on sup-norm residuals: a constant band of half-width `k`.
pub fn baseline_supr(residuals_cal: &FunctionSet, alpha: f64) -> Result<BaselineRule> {
    let scores: Vec<f64> = residuals_cal.samples().iter().map(|r| r.sup_norm()).collect();
    let k = conformal_quantile(&scores, alpha)?;
    Ok(BaselineRule {
        kind: MethodKind::Supr,
        k,
        half_width: k,
        shape: None,
    })
}

/// Standard-deviation-modulated conformal band: `s(x) · k` with `s` the
/// pointwise calibration standard deviation (floored at 1e-8) and `k` the
/// conformal quantile of `max_x |r(x)| / s(x)`.
pub fn baseline_conf_modulated(residuals_cal: &FunctionSet, alpha: f64) -> Result<BaselineRule> {
    let n = residuals_cal.len();
    if n < 2 {
        return Err(LsciError::InsufficientCalibration { needed: 2, got: n });
    }
    let p = residuals_cal.grid().len();
    let mut mean = vec![0.0; p];
    for r in residuals_cal.samples() {
        for (m, v) in mean.iter_mut().zip(r.values()) {
            *m += v / n as f64;
        }
    }
    let mut var = vec![0.0; p];
    for r in residuals_cal.samples() {
        for (vv, (v, m)) in var.iter_mut().zip(r.values().iter().zip(&mean)) {
            *vv += (v - m) * (v - m) / n as f64;
        }
    }
    let shape: Vec<f64> = var.iter().map(|v| v.sqrt().max(1e-8)).collect();
    let scores: Vec<f64> = residuals_cal
        .samples()
        .iter()
        .map(|r| {
            r.values()
                .iter()
                .zip(&shape)
                .map(|(v, s)| v.abs() / s)
                .fold(0.0, f64::max)
        })
        .collect();
    let k = conformal_quantile(&scores, alpha)?;
    Ok(BaselineRule {
        kind: MethodKind::Conf2,
        k,
        half_width: k,
        shape: Some(shape),
    })
}

/// Per-sample evaluation record.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    pub covered: bool,
    pub inside_fraction: Option<f64>,
    pub width: Option<f64>,
    pub true_sigma: f64,
}

/// One replicate's metrics for one method.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub mean_marginal_coverage: f64,
    pub risk: Option<f64>,
    pub median_width: Option<f64>,
    pub dcr: Option<f64>,
    pub dcw: Option<f64>,
    pub coverage_gap_bound_mean: Option<f64>,
    pub acceptance_rate: Option<f64>,
    pub per_sample: Vec<SampleRecord>,
}

fn finish_report(
    records: Vec<SampleRecord>,
    delta: f64,
    gap_sum: Option<f64>,
    rate_sum: Option<(f64, usize)>,
) -> EvalReport {
    let n = records.len() as f64;
    let coverage = records.iter().filter(|r| r.covered).count() as f64 / n;
    let widths: Vec<f64> = records.iter().filter_map(|r| r.width).collect();
    let insides: Vec<f64> = records.iter().filter_map(|r| r.inside_fraction).collect();
    let sigmas: Vec<f64> = records.iter().map(|r| r.true_sigma).collect();
    let (risk, median_width, dcr, dcw) = if widths.len() == records.len() && !widths.is_empty() {
        let risk = insides.iter().filter(|f| **f >= 1.0 - delta).count() as f64 / n;
        let mut sorted = widths.clone();
        sorted.sort_by(f64::total_cmp);
        let mw = median_of_sorted(&sorted);
        let dcr = distance_correlation(&insides, &sigmas).ok();
        let dcw = distance_correlation(&widths, &sigmas).ok();
        (Some(risk), Some(mw), dcr, dcw)
    } else {
        (None, None, None, None)
    };
    EvalReport {
        mean_marginal_coverage: coverage,
        risk,
        median_width,
        dcr,
        dcw,
        coverage_gap_bound_mean: gap_sum.map(|g| g / n),
        acceptance_rate: rate_sum.map(|(s, c)| s / c.max(1) as f64),
        per_sample: records,
    }
}

/// One LSCI benchmark cell.
#[derive(Debug, Clone, Copy)]
pub struct LsciCell {
    pub projection: ProjectionKind,
    pub depth: DepthKind,
    pub kernel: LocalizerKernel,
    pub lambda: f64,
}

fn lsci_cells(cfg: &RunConfig) -> Vec<LsciCell> {
    let base = LsciCell {
        projection: cfg.projection,
        depth: cfg.depth,
        kernel: cfg.localizer,
        lambda: cfg.lambda,
    };
    match cfg.sweep {
        SweepKind::None => vec![base],
        SweepKind::ProjectionsDepths => {
            let mut cells = Vec::new();
            for projection in [
                ProjectionKind::Rand,
                ProjectionKind::Fpca,
                ProjectionKind::Wave,
                ProjectionKind::RFpca,
                ProjectionKind::RWave,
            ] {
                for depth in [DepthKind::Tukey, DepthKind::NormInf, DepthKind::Mahalanobis] {
                    cells.push(LsciCell {
                        projection,
                        depth,
                        ..base
                    });
                }
            }
            cells
        }
        SweepKind::LocalizersLambdas => {
            let mut cells = Vec::new();
            for kernel in [
                LocalizerKernel::L2,
                LocalizerKernel::LInf,
                LocalizerKernel::Knn,
            ] {
                for &lambda in &cfg.lambda_candidates() {
                    cells.push(LsciCell {
                        kernel,
                        lambda,
                        ..base
                    });
                }
            }
            cells
        }
    }
}

struct PointOutcome {
    record: SampleRecord,
    gap: Option<f64>,
    rate: Option<f64>,
}

/// Evaluate one LSCI cell on one replicate's data.
#[allow(clippy::too_many_arguments)]
fn evaluate_lsci_cell(
    cfg: &RunConfig,
    cell: &LsciCell,
    ds: &SynthDataset,
    residuals_cal: &FunctionSet,
    residuals_test: &FunctionSet,
    predictions_test: &[FunctionSample],
    eval_idx: &[usize],
    cell_seed: u64,
) -> Result<EvalReport> {
    let mut cal_cfg = cfg.calibration_config(0);
    cal_cfg.projection = cell.projection;
    cal_cfg.depth = cell.depth;
    cal_cfg.localizer = LocalizerKind::new(cell.kernel, cell.lambda)?;
    let knock_scale = cfg
        .knockoff_scale
        .unwrap_or_else(|| 0.05 * ds.cal.inputs.pooled_std());

    // weight-independent families are shared across test points
    let grid = residuals_cal.grid().clone();
    let fixed_family: Option<ProjectionFamily> = match cell.projection {
        ProjectionKind::Rand => Some(ProjectionFamily::build_random(
            grid.clone(),
            cfg.n_phi,
            derive_seed(cell_seed, 1),
        )?),
        ProjectionKind::Wave => Some(ProjectionFamily::build_wavelet(grid.clone(), cfg.n_phi)?),
        ProjectionKind::RWave => {
            let base = ProjectionFamily::build_wavelet(grid.clone(), cfg.n_phi.div_ceil(2))?;
            Some(ProjectionFamily::build_hybrid(
                &base,
                cfg.n_phi - cfg.n_phi.div_ceil(2),
                derive_seed(cell_seed, 1),
            )?)
        }
        ProjectionKind::Fpca | ProjectionKind::RFpca => None,
    };
    let fixed_proj: Option<ProjectedScores> = match &fixed_family {
        Some(f) => Some(f.project(residuals_cal)?),
        None => None,
    };
    let fixed_test_proj: Option<ProjectedScores> = match &fixed_family {
        Some(f) => Some(f.project(residuals_test)?),
        None => None,
    };

    let sampler_cfg = cfg.sampler_config();
    let outcomes: Result<Vec<PointOutcome>> = eval_idx
        .par_iter()
        .map(|&i| {
            let point_seed = derive_seed2(cell_seed, 2, i as u64);
            let knocked = knockoff(
                ds.test.inputs.sample(i),
                knock_scale,
                derive_seed(point_seed, 0),
            );
            let w = local_weights(&ds.cal.inputs, &knocked, cal_cfg.localizer)?;
            let mut point_cfg = cal_cfg.clone();
            point_cfg.seed = point_seed;

            // resolve the scoring family and projections for this point
            let local_family;
            let local_proj;
            let (family, proj) = match (&fixed_family, &fixed_proj) {
                (Some(f), Some(p)) => (f, p),
                _ => {
                    local_family = build_scoring_family(residuals_cal, &w, &point_cfg)?;
                    local_proj = local_family.project(residuals_cal)?;
                    (&local_family, &local_proj)
                }
            };
            let measures = build_measures(proj, &w, cal_cfg.infinity_mass)?;
            let depths = calibration_scores_projected(proj, &measures, cal_cfg.depth)?;
            let q = threshold(&depths, cal_cfg.alpha, cal_cfg.threshold_rank)?;
            let test_scores: Vec<f64> = match &fixed_test_proj {
                Some(tp) => (0..tp.n_phi()).map(|k| tp.row(k)[i]).collect(),
                None => family.project_sample(residuals_test.sample(i))?,
            };
            let covered = depth_of_scores_self_slot(&test_scores, &measures, cal_cfg.depth)? >= q;
            let gap = if cell.kernel == LocalizerKernel::Knn {
                None
            } else {
                Some(coverage_gap_bound(&w)?)
            };

            let (inside_fraction, band_width, rate) = if cfg.compute_bands {
                let pred = CalibratedPredictor::from_parts(
                    family.clone(),
                    measures,
                    cal_cfg.depth,
                    q,
                    cal_cfg.alpha,
                    predictions_test[i].clone(),
                    w,
                    cal_cfg.infinity_mass,
                );
                let ens =
                    sample_ensemble(&pred, residuals_cal, &sampler_cfg, derive_seed(point_seed, 9))?;
                let band = ens.to_band()?;
                let inside = band.inside_fraction(ds.test.outputs.sample(i))?;
                (
                    Some(inside),
                    Some(width(&band)),
                    Some(ens.acceptance_rate()),
                )
            } else {
                (None, None, None)
            };
            Ok(PointOutcome {
                record: SampleRecord {
                    covered,
                    inside_fraction,
                    width: band_width,
                    true_sigma: ds.test.sigma[i],
                },
                gap,
                rate,
            })
        })
        .collect();
    let outcomes = outcomes?;
    let gap_sum = outcomes
        .iter()
        .map(|o| o.gap)
        .try_fold(0.0, |acc, g| g.map(|g| acc + g));
    let rate_sum = if cfg.compute_bands {
        Some((
            outcomes.iter().filter_map(|o| o.rate).sum::<f64>(),
            outcomes.len(),
        ))
    } else {
        None
    };
    let records = outcomes.into_iter().map(|o| o.record).collect();
    Ok(finish_report(records, cfg.delta, gap_sum, rate_sum))
}

fn evaluate_baseline(
    kind: MethodKind,
    cfg: &RunConfig,
    ds: &SynthDataset,
    residuals_cal: &FunctionSet,
    residuals_test: &FunctionSet,
    predictions_test: &[FunctionSample],
    eval_idx: &[usize],
) -> Result<EvalReport> {
    let rule = match kind {
        MethodKind::Conf1 => baseline_conf_l2(residuals_cal, cfg.alpha)?,
        MethodKind::Conf2 => baseline_conf_modulated(residuals_cal, cfg.alpha)?,
        MethodKind::Supr => baseline_supr(residuals_cal, cfg.alpha)?,
        MethodKind::Lsci => {
            return Err(LsciError::InvalidConfig(
                "lsci is not a baseline".into(),
            ))
        }
    };
    // the rule's width is identical for every test point; computing it once
    // from the half-width profile keeps constant-band dCW at exactly zero
    let mut gaps: Vec<f64> = rule
        .half_widths(residuals_cal.grid().len())
        .iter()
        .map(|h| 2.0 * h)
        .collect();
    gaps.sort_by(f64::total_cmp);
    let rule_width = median_of_sorted(&gaps);
    let mut records = Vec::with_capacity(eval_idx.len());
    for &i in eval_idx {
        let covered = rule.contains_residual(residuals_test.sample(i));
        let (inside, w) = if cfg.compute_bands {
            let band = rule.band_for(&predictions_test[i])?;
            (
                Some(band.inside_fraction(ds.test.outputs.sample(i))?),
                Some(rule_width),
            )
        } else {
            (None, None)
        };
        records.push(SampleRecord {
            covered,
            inside_fraction: inside,
            width: w,
            true_sigma: ds.test.sigma[i],
        });
    }
    Ok(finish_report(records, cfg.delta, None, None))
}

/// One row of benchmark output: a (task, method, cell, replicate) record.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub task: String,
    pub method: String,
    pub projection: String,
    pub depth: String,
    pub localizer: String,
    pub lambda: f64,
    pub replicate: usize,
    pub seed: u64,
    pub n_eval: usize,
    pub coverage: f64,
    pub risk: Option<f64>,
    pub median_width: Option<f64>,
    pub dcr: Option<f64>,
    pub dcw: Option<f64>,
    pub gap_bound_mean: Option<f64>,
    pub acceptance_rate: Option<f64>,
    pub elapsed_s: f64,
}

/// Aggregated mean and 2-sigma error bars across replicates of one cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub task: String,
    pub method: String,
    pub projection: String,
    pub depth: String,
    pub localizer: String,
    pub lambda: f64,
    pub n_replicates: usize,
    pub coverage_mean: f64,
    pub coverage_two_sigma: f64,
    pub risk_mean: Option<f64>,
    pub risk_two_sigma: Option<f64>,
    pub width_mean: Option<f64>,
    pub width_two_sigma: Option<f64>,
    pub dcr_mean: Option<f64>,
    pub dcw_mean: Option<f64>,
    pub gap_bound_mean: Option<f64>,
}

/// Complete benchmark output.
#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkOutput {
    pub rows: Vec<BenchRow>,
    pub summaries: Vec<CellSummary>,
    pub n_failed_replicates: usize,
    /// True when every requested (method, cell) produced at least one row.
    pub all_cells_produced: bool,
}

fn mean_and_two_sigma(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, 2.0 * var.sqrt())
}

pub(crate) fn summarize(rows: &[BenchRow]) -> Vec<CellSummary> {
    // key on the printed lambda so NaN (baselines) groups as one cell
    fn key_of(r: &BenchRow) -> (String, String, String, String, String, String) {
        (
            r.method.clone(),
            r.projection.clone(),
            r.depth.clone(),
            r.localizer.clone(),
            format!("{:?}", r.lambda),
            r.task.clone(),
        )
    }
    let mut keys: Vec<(String, String, String, String, String, String)> = Vec::new();
    for r in rows {
        let key = key_of(r);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.iter()
        .map(|key| {
            let cell: Vec<&BenchRow> = rows.iter().filter(|r| key_of(r) == *key).collect();
            let coverages: Vec<f64> = cell.iter().map(|r| r.coverage).collect();
            let (coverage_mean, coverage_two_sigma) = mean_and_two_sigma(&coverages);
            let risks: Vec<f64> = cell.iter().filter_map(|r| r.risk).collect();
            let widths: Vec<f64> = cell.iter().filter_map(|r| r.median_width).collect();
            let dcrs: Vec<f64> = cell.iter().filter_map(|r| r.dcr).collect();
            let dcws: Vec<f64> = cell.iter().filter_map(|r| r.dcw).collect();
            let gaps: Vec<f64> = cell.iter().filter_map(|r| r.gap_bound_mean).collect();
            let opt = |v: &[f64]| -> (Option<f64>, Option<f64>) {
                if v.is_empty() {
                    (None, None)
                } else {
                    let (m, s) = mean_and_two_sigma(v);
                    (Some(m), Some(s))
                }
            };
            let (risk_mean, risk_two_sigma) = opt(&risks);
            let (width_mean, width_two_sigma) = opt(&widths);
            let (dcr_mean, _) = opt(&dcrs);
            let (dcw_mean, _) = opt(&dcws);
            let (gap_bound_mean, _) = opt(&gaps);
            CellSummary {
                task: key.5.clone(),
                method: key.0.clone(),
                projection: key.1.clone(),
                depth: key.2.clone(),
                localizer: key.3.clone(),
                lambda: cell[0].lambda,
                n_replicates: cell.len(),
                coverage_mean,
                coverage_two_sigma,
                risk_mean,
                risk_two_sigma,
                width_mean,
                width_two_sigma,
                dcr_mean,
                dcw_mean,
                gap_bound_mean,
            }
        })
        .collect()
}

/// Evenly strided subset of `0..n` with at most `cap` indices.
fn strided_indices(n: usize, cap: Option<usize>) -> Vec<usize> {
    match cap {
        Some(c) if c < n && c > 0 => {
            let step = n as f64 / c as f64;
            (0..c).map(|j| (j as f64 * step) as usize).collect()
        }
        _ => (0..n).collect(),
    }
}

/// Fit the task's base predictor on the training split.
pub fn fit_base_model(cfg: &RunConfig, ds: &SynthDataset) -> Result<BasePredictor> {
    match ds.task {
        SynthTask::Reg1D => fit_ridge(
            &ds.train.inputs,
            &ds.train.outputs,
            cfg.ridge_half_width,
            cfg.ridge_penalty,
        ),
        SynthTask::Ar1D | SynthTask::ArSphere2D => Ok(BasePredictor::Persistence),
    }
}

fn run_replicate(
    cfg: &RunConfig,
    cells: &[LsciCell],
    rep: usize,
    rep_seed: u64,
) -> Result<Vec<BenchRow>> {
    let ds = datagen::generate(cfg.task, &cfg.gen_sizes(), rep_seed)?;
    let base = fit_base_model(cfg, &ds)?;
    let residuals_cal = base.residuals(&ds.cal.inputs, &ds.cal.outputs)?;
    let predictions_test: Vec<FunctionSample> = (0..ds.test.len())
        .map(|i| base.predict_at(ds.test.inputs.sample(i), i))
        .collect::<Result<_>>()?;
    let residual_samples: Vec<FunctionSample> = (0..ds.test.len())
        .map(|i| ds.test.outputs.sample(i).subtract(&predictions_test[i]))
        .collect::<Result<_>>()?;
    let residuals_test = FunctionSet::new(ds.grid.clone(), residual_samples)?;
    let eval_idx = strided_indices(ds.test.len(), cfg.max_eval_test);

    let mut rows = Vec::new();
    for method in &cfg.methods {
        match method {
            MethodKind::Lsci => {
                for (ci, cell) in cells.iter().enumerate() {
                    let mut cell = *cell;
                    let cell_seed = derive_seed2(rep_seed, 0xce11, ci as u64);
                    if cfg.select_lambda && cfg.sweep == SweepKind::None {
                        let mut cal_cfg = cfg.calibration_config(cell_seed);
                        cal_cfg.projection = cell.projection;
                        cal_cfg.depth = cell.depth;
                        cell.lambda = select_bandwidth(
                            &ds.cal.inputs,
                            &residuals_cal,
                            cell.kernel,
                            &cfg.lambda_candidates(),
                            cfg.alpha,
                            &cal_cfg,
                            &cfg.cv,
                            derive_seed(cell_seed, 4),
                        )?;
                    }
                    let started = std::time::Instant::now();
                    let report = evaluate_lsci_cell(
                        cfg,
                        &cell,
                        &ds,
                        &residuals_cal,
                        &residuals_test,
                        &predictions_test,
                        &eval_idx,
                        cell_seed,
                    )?;
                    rows.push(report_to_row(
                        cfg,
                        MethodKind::Lsci,
                        Some(&cell),
                        &report,
                        rep,
                        rep_seed,
                        eval_idx.len(),
                        started.elapsed().as_secs_f64(),
                    ));
                }
            }
            baseline => {
                let started = std::time::Instant::now();
                let report = evaluate_baseline(
                    *baseline,
                    cfg,
                    &ds,
                    &residuals_cal,
                    &residuals_test,
                    &predictions_test,
                    &eval_idx,
                )?;
                rows.push(report_to_row(
                    cfg,
                    *baseline,
                    None,
                    &report,
                    rep,
                    rep_seed,
                    eval_idx.len(),
                    started.elapsed().as_secs_f64(),
                ));
            }
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn report_to_row(
    cfg: &RunConfig,
    method: MethodKind,
    cell: Option<&LsciCell>,
    report: &EvalReport,
    replicate: usize,
    seed: u64,
    n_eval: usize,
    elapsed_s: f64,
) -> BenchRow {
    BenchRow {
        task: cfg.task.name().to_string(),
        method: method.name().to_string(),
        projection: cell.map_or(String::new(), |c| c.projection.name().to_string()),
        depth: cell.map_or(String::new(), |c| c.depth.name().to_string()),
        localizer: cell.map_or(String::new(), |c| c.kernel.name().to_string()),
        lambda: cell.map_or(f64::NAN, |c| c.lambda),
        replicate,
        seed,
        n_eval,
        coverage: report.mean_marginal_coverage,
        risk: report.risk,
        median_width: report.median_width,
        dcr: report.dcr,
        dcw: report.dcw,
        gap_bound_mean: report.coverage_gap_bound_mean,
        acceptance_rate: report.acceptance_rate,
        elapsed_s,
    }
}

/// Run the configured benchmark: per replicate, generate data, fit the base
/// model, and evaluate every requested method/cell. Failed replicates are
/// logged, counted, and excluded. `on_row` fires as each row completes so
/// partial results can be flushed.
pub fn run_benchmark(
    cfg: &RunConfig,
    mut on_row: impl FnMut(&BenchRow),
) -> Result<BenchmarkOutput> {
    cfg.validate()?;
    let cells = lsci_cells(cfg);
    let mut rows = Vec::new();
    let mut n_failed = 0usize;
    for rep in 0..cfg.replicates {
        let rep_seed = derive_seed(cfg.seed, rep as u64);
        match run_replicate(cfg, &cells, rep, rep_seed) {
            Ok(rep_rows) => {
                for r in rep_rows {
                    on_row(&r);
                    rows.push(r);
                }
            }
            Err(e) => {
                eprintln!("replicate {rep} failed: {e}");
                n_failed += 1;
            }
        }
    }
    let summaries = summarize(&rows);
    let expected_cells = cfg
        .methods
        .iter()
        .map(|m| if *m == MethodKind::Lsci { cells.len() } else { 1 })
        .sum::<usize>();
    let all_cells_produced = summaries.len() == expected_cells && !rows.is_empty();
    Ok(BenchmarkOutput {
        rows,
        summaries,
        n_failed_replicates: n_failed,
        all_cells_produced,
    })
}
