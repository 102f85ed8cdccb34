//! Localization: knock-off perturbation, kernel weights over the calibration
//! set, the coverage-gap bound, and bandwidth selection by cross validation.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::conformal::{calibrate, CalibrationConfig};
use crate::error::{LsciError, Result};
use crate::function::{FunctionSample, FunctionSet};
use crate::grid::check_same_grid;
use crate::sampler::{sample_ensemble, SamplerConfig};
use crate::seeding::derive_seed2;

/// Localization kernel shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalizerKernel {
    /// `exp(-λ ||f_t - f*||_2)`
    L2,
    /// `exp(-λ ||f_t - f*||_∞)`
    LInf,
    /// Uniform mass on the `k = round(n / (1+λ))` nearest neighbors.
    Knn,
}

impl LocalizerKernel {
    pub fn name(&self) -> &'static str {
        match self {
            LocalizerKernel::L2 => "l2",
            LocalizerKernel::LInf => "linf",
            LocalizerKernel::Knn => "knn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(LocalizerKernel::L2),
            "linf" => Ok(LocalizerKernel::LInf),
            "knn" => Ok(LocalizerKernel::Knn),
            other => Err(LsciError::InvalidConfig(format!(
                "unknown localizer kernel {other:?}"
            ))),
        }
    }
}

/// Kernel plus bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizerKind {
    pub kernel: LocalizerKernel,
    pub lambda: f64,
}

impl LocalizerKind {
    pub fn new(kernel: LocalizerKernel, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(LsciError::InvalidConfig(format!(
                "bandwidth must be nonnegative, got {lambda}"
            )));
        }
        Ok(LocalizerKind { kernel, lambda })
    }

    /// Neighbor count for the k-NN kernel on `n` calibration points.
    pub fn knn_k(&self, n: usize) -> usize {
        let k = (n as f64 / (1.0 + self.lambda)).round() as usize;
        k.clamp(1, n)
    }
}

/// Normalized weights over the `n` calibration points plus the test slot
/// (`w[n]`), together with the distances that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalWeights {
    w: Vec<f64>,
    distances: Vec<f64>,
    kind: LocalizerKind,
}

impl LocalWeights {
    /// All `n + 1` weights; the last entry is the test slot.
    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Weights of the calibration points only.
    pub fn calibration_weights(&self) -> &[f64] {
        &self.w[..self.w.len() - 1]
    }

    /// Mass reserved for the test slot.
    pub fn test_mass(&self) -> f64 {
        self.w[self.w.len() - 1]
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn kind(&self) -> LocalizerKind {
        self.kind
    }

    pub fn n_calibration(&self) -> usize {
        self.distances.len()
    }
}

/// Add i.i.d. Gaussian noise of standard deviation `noise_scale` to every
/// grid value; deterministic per seed. `noise_scale = 0` returns `f` as is.
pub fn knockoff(f: &FunctionSample, noise_scale: f64, seed: u64) -> FunctionSample {
    if noise_scale == 0.0 {
        return f.clone();
    }
    let normal = Normal::new(0.0, noise_scale).expect("noise scale must be finite");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let values = f
        .values()
        .iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    FunctionSample::new(f.grid().clone(), values).expect("knockoff preserves shape")
}

/// Localization weights of the calibration inputs around a (knocked-off)
/// test input. Exponential kernels get `w_t ∝ exp(-λ d_t)` with the test
/// slot at distance zero; the k-NN kernel puts `1/(k+1)` on each of the `k`
/// nearest points and the test slot.
pub fn local_weights(
    f_cal: &FunctionSet,
    f_test: &FunctionSample,
    kind: LocalizerKind,
) -> Result<LocalWeights> {
    check_same_grid(f_cal.grid(), f_test.grid(), "local_weights")?;
    if f_cal.is_empty() {
        return Err(LsciError::EmptyCalibration);
    }
    let n = f_cal.len();
    let distances: Vec<f64> = match kind.kernel {
        LocalizerKernel::LInf => f_cal
            .samples()
            .iter()
            .map(|f| f.sup_distance(f_test))
            .collect::<Result<_>>()?,
        LocalizerKernel::L2 | LocalizerKernel::Knn => f_cal
            .samples()
            .iter()
            .map(|f| f.l2_distance(f_test))
            .collect::<Result<_>>()?,
    };
    let mut w = vec![0.0; n + 1];
    match kind.kernel {
        LocalizerKernel::L2 | LocalizerKernel::LInf => {
            for (wi, d) in w.iter_mut().zip(&distances) {
                *wi = (-kind.lambda * d).exp();
            }
            w[n] = 1.0; // test slot: distance zero
        }
        LocalizerKernel::Knn => {
            let k = kind.knn_k(n);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| distances[i].total_cmp(&distances[j]).then(i.cmp(&j)));
            let mass = 1.0 / (k as f64 + 1.0);
            for &i in order.iter().take(k) {
                w[i] = mass;
            }
            w[n] = mass;
        }
    }
    let total: f64 = w.iter().sum();
    for wi in w.iter_mut() {
        *wi /= total;
    }
    // pin the sum at exactly one; the test slot absorbs the rounding
    let head: f64 = w[..n].iter().sum();
    w[n] = 1.0 - head;
    Ok(LocalWeights {
        w,
        distances,
        kind,
    })
}

/// Upper bound on the coverage gap for exponential kernels:
/// `Σ_t w_t d_t` with the `n+1`-term normalizer already inside `w`.
pub fn coverage_gap_bound(w: &LocalWeights) -> Result<f64> {
    if w.kind.kernel == LocalizerKernel::Knn {
        return Err(LsciError::Unsupported(
            "coverage gap bound is derived for exponential kernels only".into(),
        ));
    }
    Ok(w.calibration_weights()
        .iter()
        .zip(&w.distances)
        .map(|(wi, d)| wi * d)
        .sum())
}

/// Truncated localization weights from distances alone:
/// `η_t = max{0, 1/M + 2(μ - d_t)}` where `M` is the largest prefix of the
/// sorted distances with `(1/M) Σ_{m<=M} (1 + 2 d_(m)) >= 2 d_(M)` and `μ`
/// is the mean of those `M` smallest distances. Returned renormalized.
pub fn campbell_weights(distances: &[f64]) -> Result<Vec<f64>> {
    if distances.is_empty() {
        return Err(LsciError::EmptyCalibration);
    }
    if distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(LsciError::InvalidConfig(
            "distances must be finite and nonnegative".into(),
        ));
    }
    let mut sorted: Vec<f64> = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best_m = 1usize;
    let mut prefix = 0.0;
    for (m, d) in sorted.iter().enumerate() {
        prefix += 1.0 + 2.0 * d;
        if prefix / (m as f64 + 1.0) >= 2.0 * d {
            best_m = m + 1;
        }
    }
    let mu = sorted[..best_m].iter().sum::<f64>() / best_m as f64;
    let mut eta: Vec<f64> = distances
        .iter()
        .map(|d| (1.0 / best_m as f64 + 2.0 * (mu - d)).max(0.0))
        .collect();
    let total: f64 = eta.iter().sum();
    if total <= 0.0 {
        return Err(LsciError::DegenerateWeights);
    }
    for e in &mut eta {
        *e /= total;
    }
    Ok(eta)
}

/// Cross-validation controls for [`select_bandwidth`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvConfig {
    /// Number of folds.
    pub folds: usize,
    /// Cap on evaluated points per held-out fold.
    pub max_eval_per_fold: usize,
    /// Ensemble size used when measuring band width during CV.
    pub n_samples: usize,
    /// Coverage slack below `1 - α` a candidate may not exceed.
    pub coverage_slack: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 5,
            max_eval_per_fold: 40,
            n_samples: 100,
            coverage_slack: 0.01,
        }
    }
}

/// Pick a bandwidth from `lambda_grid` by K-fold cross validation on the
/// calibration set, running the full pipeline (calibrate, test membership,
/// sample a band) on held-out points in residual space.
///
/// Among candidates whose fold coverage reaches `1 - α - slack`, the one
/// with the smallest mean band width wins; otherwise the one with the
/// highest coverage. Ties go to the smaller bandwidth.
pub fn select_bandwidth(
    f_cal: &FunctionSet,
    residuals_cal: &FunctionSet,
    kernel: LocalizerKernel,
    lambda_grid: &[f64],
    alpha: f64,
    base: &CalibrationConfig,
    cv: &CvConfig,
    seed: u64,
) -> Result<f64> {
    if lambda_grid.is_empty() {
        return Err(LsciError::InvalidConfig("empty bandwidth grid".into()));
    }
    if lambda_grid.len() == 1 {
        return Ok(lambda_grid[0]);
    }
    let n = f_cal.len();
    if n != residuals_cal.len() {
        return Err(LsciError::ShapeMismatch(format!(
            "{n} inputs vs {} residuals",
            residuals_cal.len()
        )));
    }
    let folds = cv.folds.max(2).min(n);
    let grid = f_cal.grid().clone();
    let zero = FunctionSample::zero(grid);

    let mut best: Option<(f64, f64, f64)> = None; // (lambda, coverage, width)
    let mut lambdas: Vec<f64> = lambda_grid.to_vec();
    lambdas.sort_by(f64::total_cmp);
    for &lambda in &lambdas {
        let mut covered = 0usize;
        let mut evaluated = 0usize;
        let mut width_sum = 0.0;
        for fold in 0..folds {
            let eval_idx: Vec<usize> = (0..n).filter(|i| i % folds == fold).collect();
            let keep_idx: Vec<usize> = (0..n).filter(|i| i % folds != fold).collect();
            let f_keep = FunctionSet::new(
                f_cal.grid().clone(),
                keep_idx.iter().map(|&i| f_cal.sample(i).clone()).collect(),
            )?;
            let r_keep = FunctionSet::new(
                residuals_cal.grid().clone(),
                keep_idx
                    .iter()
                    .map(|&i| residuals_cal.sample(i).clone())
                    .collect(),
            )?;
            let stride = (eval_idx.len() / cv.max_eval_per_fold.max(1)).max(1);
            for (j, &i) in eval_idx.iter().step_by(stride).enumerate() {
                let mut cfg = base.clone();
                cfg.localizer = LocalizerKind::new(kernel, lambda)?;
                cfg.alpha = alpha;
                cfg.seed = derive_seed2(seed, fold as u64, j as u64);
                let pred = calibrate(&r_keep, &f_keep, f_cal.sample(i), &zero, &cfg)?;
                if pred.contains(residuals_cal.sample(i))? {
                    covered += 1;
                }
                let sampler_cfg = SamplerConfig {
                    n_samples: cv.n_samples,
                    ..SamplerConfig::default()
                };
                let ens = sample_ensemble(&pred, &r_keep, &sampler_cfg, cfg.seed)?;
                width_sum += crate::eval::width(&ens.to_band()?);
                evaluated += 1;
            }
        }
        let coverage = covered as f64 / evaluated as f64;
        let width = width_sum / evaluated as f64;
        let ok = coverage >= 1.0 - alpha - cv.coverage_slack;
        best = match best {
            None => Some((lambda, coverage, width)),
            Some((bl, bc, bw)) => {
                let best_ok = bc >= 1.0 - alpha - cv.coverage_slack;
                let better = match (ok, best_ok) {
                    (true, true) => width < bw,
                    (true, false) => true,
                    (false, true) => false,
                    (false, false) => coverage > bc,
                };
                if better {
                    Some((lambda, coverage, width))
                } else {
                    Some((bl, bc, bw))
                }
            }
        };
    }
    Ok(best.expect("nonempty grid").0)
}
