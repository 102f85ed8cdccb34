//! Discretized function containers and the norms/inner products built on
//! quadrature weights.

use serde::{Deserialize, Serialize};

use crate::error::{LsciError, Result};
use crate::grid::{check_same_grid, SharedGrid};

/// One function sampled on a grid: a real value per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSample {
    #[serde(with = "crate::io::grid_serde")]
    grid: SharedGrid,
    values: Vec<f64>,
}

impl FunctionSample {
    pub fn new(grid: SharedGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LsciError::ShapeMismatch(format!(
                "{} values on a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LsciError::InvalidConfig(
                "function values must be finite".into(),
            ));
        }
        Ok(FunctionSample { grid, values })
    }

    pub fn zero(grid: SharedGrid) -> Self {
        let n = grid.len();
        FunctionSample {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &SharedGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Weighted L2 norm `sqrt(Σ_i w_i v_i²)`.
    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Sup norm `max_i |v_i|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Pointwise difference `self - other` on the shared grid.
    pub fn subtract(&self, other: &FunctionSample) -> Result<FunctionSample> {
        check_same_grid(&self.grid, &other.grid, "subtract")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(FunctionSample {
            grid: self.grid.clone(),
            values,
        })
    }

    /// Pointwise sum on the shared grid.
    pub fn add(&self, other: &FunctionSample) -> Result<FunctionSample> {
        check_same_grid(&self.grid, &other.grid, "add")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(FunctionSample {
            grid: self.grid.clone(),
            values,
        })
    }

    /// Weighted L2 distance to another sample.
    pub fn l2_distance(&self, other: &FunctionSample) -> Result<f64> {
        check_same_grid(&self.grid, &other.grid, "l2_distance")?;
        let d = self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.grid.weights())
            .map(|((a, b), w)| w * (a - b) * (a - b))
            .sum::<f64>();
        Ok(d.sqrt())
    }

    /// Sup distance to another sample.
    pub fn sup_distance(&self, other: &FunctionSample) -> Result<f64> {
        check_same_grid(&self.grid, &other.grid, "sup_distance")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }
}

/// Weighted inner product `Σ_i w_i a_i b_i` of two value slices on a grid.
pub fn weighted_dot(weights: &[f64], a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), a.len());
    debug_assert_eq!(weights.len(), b.len());
    let mut acc = 0.0;
    for i in 0..weights.len() {
        acc += weights[i] * a[i] * b[i];
    }
    acc
}

/// An ordered collection of samples sharing one grid, with optional scalar
/// indices `t` (e.g. the time stamp each sample was drawn at).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSet {
    #[serde(with = "crate::io::grid_serde")]
    grid: SharedGrid,
    samples: Vec<FunctionSample>,
    index_labels: Option<Vec<f64>>,
}

impl FunctionSet {
    pub fn new(grid: SharedGrid, samples: Vec<FunctionSample>) -> Result<Self> {
        for s in &samples {
            check_same_grid(&grid, s.grid(), "function set")?;
        }
        Ok(FunctionSet {
            grid,
            samples,
            index_labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != self.samples.len() {
            return Err(LsciError::ShapeMismatch(format!(
                "{} labels for {} samples",
                labels.len(),
                self.samples.len()
            )));
        }
        self.index_labels = Some(labels);
        Ok(self)
    }

    pub fn grid(&self) -> &SharedGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &FunctionSample {
        &self.samples[i]
    }

    pub fn samples(&self) -> &[FunctionSample] {
        &self.samples
    }

    pub fn index_labels(&self) -> Option<&[f64]> {
        self.index_labels.as_deref()
    }

    /// Pooled standard deviation of all values in the set.
    pub fn pooled_std(&self) -> f64 {
        let n: usize = self.samples.iter().map(|s| s.len()).sum();
        if n == 0 {
            return 0.0;
        }
        let mean: f64 = self
            .samples
            .iter()
            .flat_map(|s| s.values())
            .sum::<f64>()
            / n as f64;
        let var: f64 = self
            .samples
            .iter()
            .flat_map(|s| s.values())
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n as f64;
        var.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn sample(values: Vec<f64>) -> FunctionSample {
        let grid = Grid::uniform_1d(values.len());
        FunctionSample::new(grid, values).unwrap()
    }

    #[test]
    fn l2_norm_of_unit_constant_is_one() {
        let f = sample(vec![1.0; 50]);
        assert!((f.l2_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l2_norm_of_zero_is_zero() {
        let f = sample(vec![0.0; 10]);
        assert_eq!(f.l2_norm(), 0.0);
    }

    #[test]
    fn l2_norm_hand_quadrature() {
        // values (3,4) with weights (0.5,0.5) -> sqrt(0.5*9 + 0.5*16) = sqrt(12.5)
        let grid = Grid::from_points_1d(vec![0.25, 0.75], vec![0.5, 0.5]).unwrap();
        let f = FunctionSample::new(grid, vec![3.0, 4.0]).unwrap();
        assert!((f.l2_norm() - 12.5_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sup_norm_is_max_abs() {
        assert_eq!(sample(vec![-2.0, 1.0, 0.0]).sup_norm(), 2.0);
        assert_eq!(sample(vec![0.0, 0.0]).sup_norm(), 0.0);
        assert_eq!(sample(vec![0.3, -0.7]).sup_norm(), 0.7);
    }

    #[test]
    fn subtract_self_is_zero() {
        let f = sample(vec![1.0, 2.0, 3.0]);
        let d = f.subtract(&f).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn subtract_pointwise() {
        let a = sample(vec![1.0, 2.0]);
        let b = FunctionSample::new(a.grid().clone(), vec![0.0, 1.0]).unwrap();
        assert_eq!(a.subtract(&b).unwrap().values(), &[1.0, 1.0]);
    }

    #[test]
    fn subtract_rejects_mismatched_grids() {
        let a = sample(vec![0.0; 64]);
        let b = sample(vec![0.0; 65]);
        assert!(matches!(
            a.subtract(&b),
            Err(LsciError::GridMismatch(_))
        ));
    }

    #[test]
    fn constant_norm_scales_with_domain_measure() {
        let grid = Grid::from_points_1d(vec![0.0, 1.0, 2.0], vec![1.0, 1.5, 0.5]).unwrap();
        let c = 3.0;
        let f = FunctionSample::new(grid.clone(), vec![c; 3]).unwrap();
        assert!((f.l2_norm() - c.abs() * grid.measure().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonfinite_values() {
        let grid = Grid::uniform_1d(2);
        assert!(FunctionSample::new(grid, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn set_rejects_foreign_grid() {
        let g8 = Grid::uniform_1d(8);
        let s = sample(vec![0.0; 9]);
        assert!(FunctionSet::new(g8, vec![s]).is_err());
    }
}
