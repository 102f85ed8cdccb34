//! Pluggable base predictors that turn paired data into residuals: a
//! convolution-kernel ridge operator for 1D regression tasks, a persistence
//! predictor for autoregressive tasks, and row-aligned external predictions
//! loaded from file.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LsciError, Result};
use crate::function::{FunctionSample, FunctionSet};
use crate::grid::{check_same_grid, GridKind};

/// Base predictor configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    /// Convolution-kernel ridge regression with kernel half-width `h` and
    /// penalty `rho`.
    FunctionalRidge { h: usize, rho: f64 },
    /// Predict the input itself (autoregressive tasks).
    Persistence,
    /// Predictions supplied externally, row-aligned with the inputs.
    External,
}

/// Sliding-window convolution with zero-padded ends:
/// `out[i] = Σ_j taps[j] · values[i + j - h]`.
pub fn convolve_window(values: &[f64], taps: &[f64]) -> Vec<f64> {
    let h = taps.len() / 2;
    let p = values.len();
    let mut out = vec![0.0; p];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, tap) in taps.iter().enumerate() {
            let idx = i as isize + j as isize - h as isize;
            if idx >= 0 && (idx as usize) < p {
                acc += tap * values[idx as usize];
            }
        }
        *o = acc;
    }
    out
}

/// A fitted base predictor.
#[derive(Debug, Clone)]
pub enum BasePredictor {
    Persistence,
    Ridge(RidgeOperator),
    External(FunctionSet),
}

/// Fitted convolution-kernel ridge operator: a `(2h+1)`-tap kernel plus a
/// bias function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RidgeOperator {
    taps: Vec<f64>,
    bias: Vec<f64>,
}

impl RidgeOperator {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

/// Fit the convolution ridge operator by normal equations on centered data:
/// minimizes `Σ_t ||g_t - bias - taps * f_t||² + rho ||taps||²`.
pub fn fit_ridge(
    train_inputs: &FunctionSet,
    train_outputs: &FunctionSet,
    h: usize,
    rho: f64,
) -> Result<BasePredictor> {
    check_same_grid(train_inputs.grid(), train_outputs.grid(), "fit_ridge")?;
    if train_inputs.grid().kind() != GridKind::Interval1D {
        return Err(LsciError::Unsupported(
            "ridge base model is defined for 1D grids; use persistence or external for 2D".into(),
        ));
    }
    let n = train_inputs.len();
    if n != train_outputs.len() {
        return Err(LsciError::ShapeMismatch(format!(
            "{n} inputs vs {} outputs",
            train_outputs.len()
        )));
    }
    let needed = 2 * h + 2;
    if n < needed {
        return Err(LsciError::InsufficientCalibration { needed, got: n });
    }
    if rho < 0.0 {
        return Err(LsciError::InvalidConfig("ridge penalty must be >= 0".into()));
    }
    let p = train_inputs.grid().len();
    let k = 2 * h + 1;

    // column means
    let mut f_mean = vec![0.0; p];
    let mut g_mean = vec![0.0; p];
    for t in 0..n {
        for i in 0..p {
            f_mean[i] += train_inputs.sample(t).values()[i] / n as f64;
            g_mean[i] += train_outputs.sample(t).values()[i] / n as f64;
        }
    }

    // accumulate normal equations over all (sample, grid point) rows
    let mut ata = DMatrix::<f64>::zeros(k, k);
    let mut atb = DVector::<f64>::zeros(k);
    let mut feat = vec![0.0; k];
    for t in 0..n {
        let f = train_inputs.sample(t).values();
        let g = train_outputs.sample(t).values();
        for i in 0..p {
            for (j, fv) in feat.iter_mut().enumerate() {
                let idx = i as isize + j as isize - h as isize;
                *fv = if idx >= 0 && (idx as usize) < p {
                    f[idx as usize] - f_mean[idx as usize]
                } else {
                    0.0
                };
            }
            let y = g[i] - g_mean[i];
            for a in 0..k {
                for b in a..k {
                    ata[(a, b)] += feat[a] * feat[b];
                }
                atb[a] += feat[a] * y;
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            ata[(a, b)] = ata[(b, a)];
        }
        ata[(a, a)] += rho;
    }

    let taps = match ata.clone().lu().solve(&atb) {
        Some(t) => t,
        None => return Err(LsciError::SingularSystem),
    };
    // guard against a silently ill-conditioned solve when rho = 0
    if rho == 0.0 {
        let resid = (&ata * &taps - &atb).norm();
        if !resid.is_finite() || resid > 1e-6 * (atb.norm() + 1.0) {
            return Err(LsciError::SingularSystem);
        }
    }
    let taps: Vec<f64> = taps.iter().copied().collect();
    let conv_mean = convolve_window(&f_mean, &taps);
    let bias: Vec<f64> = g_mean
        .iter()
        .zip(&conv_mean)
        .map(|(g, c)| g - c)
        .collect();
    Ok(BasePredictor::Ridge(RidgeOperator { taps, bias }))
}

impl BasePredictor {
    /// Wrap externally produced predictions (row-aligned with the inputs
    /// they answer for).
    pub fn external(predictions: FunctionSet) -> Self {
        BasePredictor::External(predictions)
    }

    /// Predict the output function for one input.
    pub fn predict(&self, f: &FunctionSample) -> Result<FunctionSample> {
        match self {
            BasePredictor::Persistence => Ok(f.clone()),
            BasePredictor::Ridge(op) => {
                if op.bias.len() != f.len() {
                    return Err(LsciError::GridMismatch(format!(
                        "ridge fitted on {} points, input has {}",
                        op.bias.len(),
                        f.len()
                    )));
                }
                let conv = convolve_window(f.values(), &op.taps);
                let values = conv.iter().zip(&op.bias).map(|(c, b)| c + b).collect();
                FunctionSample::new(f.grid().clone(), values)
            }
            BasePredictor::External(_) => Err(LsciError::Unsupported(
                "external predictions are looked up by sample index; use predict_at".into(),
            )),
        }
    }

    /// Predict for the sample at position `index` of a set (external
    /// predictions are a row lookup; fitted models ignore the index).
    pub fn predict_at(&self, f: &FunctionSample, index: usize) -> Result<FunctionSample> {
        match self {
            BasePredictor::External(preds) => {
                if index >= preds.len() {
                    return Err(LsciError::ShapeMismatch(format!(
                        "prediction row {index} out of {} rows",
                        preds.len()
                    )));
                }
                check_same_grid(preds.grid(), f.grid(), "external prediction")?;
                Ok(preds.sample(index).clone())
            }
            _ => self.predict(f),
        }
    }

    /// Residuals `g_t - predict(f_t)` over paired sets.
    pub fn residuals(
        &self,
        inputs: &FunctionSet,
        outputs: &FunctionSet,
    ) -> Result<FunctionSet> {
        check_same_grid(inputs.grid(), outputs.grid(), "residuals")?;
        if inputs.len() != outputs.len() {
            return Err(LsciError::ShapeMismatch(format!(
                "{} inputs vs {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        if let BasePredictor::External(preds) = self {
            if preds.len() != inputs.len() {
                return Err(LsciError::ShapeMismatch(format!(
                    "{} external predictions for {} pairs",
                    preds.len(),
                    inputs.len()
                )));
            }
        }
        let samples: Result<Vec<FunctionSample>> = (0..inputs.len())
            .map(|t| {
                let pred = self.predict_at(inputs.sample(t), t)?;
                outputs.sample(t).subtract(&pred)
            })
            .collect();
        FunctionSet::new(inputs.grid().clone(), samples?)
    }
}
