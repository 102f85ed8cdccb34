//! Weighted univariate depths and the projection-infimum depth built on them.
//!
//! A [`LocalMeasure`] is a weighted empirical distribution on the real line
//! with a reserved probability mass at infinity (the test point's slot in the
//! localized calibration measure). Depths score how central a value is under
//! that measure; the functional depth of a residual is the infimum of its
//! univariate depths across a projection family.

use serde::{Deserialize, Serialize};

use crate::error::{LsciError, Result};
use crate::function::FunctionSample;
use crate::projections::ProjectionFamily;

/// Univariate depth notion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthKind {
    /// Halfspace depth `min(F(x), 1 - F(x⁻))`.
    Tukey,
    /// `1 / (1 + |x - median|)`.
    NormInf,
    /// `1 / (1 + (x - μ)² / σ²)`.
    Mahalanobis,
}

impl DepthKind {
    pub fn name(&self) -> &'static str {
        match self {
            DepthKind::Tukey => "tukey",
            DepthKind::NormInf => "norm_inf",
            DepthKind::Mahalanobis => "mahalanobis",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tukey" => Ok(DepthKind::Tukey),
            "norm_inf" => Ok(DepthKind::NormInf),
            "mahalanobis" => Ok(DepthKind::Mahalanobis),
            other => Err(LsciError::InvalidConfig(format!(
                "unknown depth kind {other:?}"
            ))),
        }
    }
}

/// Where the reserved infinity mass sits.
///
/// The localized empirical measure reserves the test slot's weight at
/// infinity. `Upper` puts all of it at +∞ (the literal construction);
/// `Split` halves it across ±∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InfinityMass {
    #[default]
    Upper,
    Split,
}

/// A weighted empirical measure on the line plus mass at infinity.
///
/// Atoms are kept sorted with prefix sums so CDF queries are `O(log n)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalMeasure {
    locs: Vec<f64>,
    weights: Vec<f64>,
    inf_lower: f64,
    inf_upper: f64,
    #[serde(skip)]
    cache: MeasureCache,
}

#[derive(Debug, Clone, Default)]
struct MeasureCache {
    cum: Vec<f64>,
    /// Right-to-left partial sums: `suffix[i] = Σ weights[i..]`.
    suffix: Vec<f64>,
    finite_mass: f64,
    median: f64,
    mean: f64,
    var: f64,
    ready: bool,
}

impl LocalMeasure {
    /// Build from `(location, weight)` atoms and a mass reserved at infinity.
    /// Weights plus `inf_mass` must sum to 1 (within 1e-9).
    pub fn from_atoms(
        mut atoms: Vec<(f64, f64)>,
        inf_mass: f64,
        placement: InfinityMass,
    ) -> Result<Self> {
        if atoms.iter().any(|(l, w)| !l.is_finite() || *w < 0.0) || inf_mass < 0.0 {
            return Err(LsciError::InvalidConfig(
                "measure atoms must be finite with nonnegative weights".into(),
            ));
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum::<f64>() + inf_mass;
        if (total - 1.0).abs() > 1e-9 {
            return Err(LsciError::InvalidConfig(format!(
                "measure mass sums to {total}, expected 1"
            )));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (locs, weights): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
        let (inf_lower, inf_upper) = match placement {
            InfinityMass::Upper => (0.0, inf_mass),
            InfinityMass::Split => (inf_mass / 2.0, inf_mass / 2.0),
        };
        let mut m = LocalMeasure {
            locs,
            weights,
            inf_lower,
            inf_upper,
            cache: MeasureCache::default(),
        };
        m.rebuild_cache();
        Ok(m)
    }

    fn rebuild_cache(&mut self) {
        let mut cum = Vec::with_capacity(self.weights.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cum.push(acc);
        }
        let finite_mass = acc;
        let mut suffix = vec![0.0; self.weights.len()];
        let mut tail = 0.0;
        for (i, w) in self.weights.iter().enumerate().rev() {
            tail += w;
            suffix[i] = tail;
        }
        let (median, mean, var) = if finite_mass > 0.0 {
            let half = 0.5 * finite_mass;
            let idx = cum.partition_point(|&c| c < half);
            let median = self.locs[idx.min(self.locs.len() - 1)];
            let mut mean = 0.0;
            for (l, w) in self.locs.iter().zip(&self.weights) {
                mean += l * w;
            }
            mean /= finite_mass;
            let mut var = 0.0;
            for (l, w) in self.locs.iter().zip(&self.weights) {
                var += w * (l - mean) * (l - mean);
            }
            var /= finite_mass;
            (median, mean, var)
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        self.cache = MeasureCache {
            cum,
            suffix,
            finite_mass,
            median,
            mean,
            var,
            ready: true,
        };
    }

    fn cache(&self) -> &MeasureCache {
        debug_assert!(self.cache.ready, "measure cache not rebuilt");
        &self.cache
    }

    /// Restore derived state after deserialization.
    pub fn ensure_cache(&mut self) {
        if !self.cache.ready {
            self.rebuild_cache();
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.locs.len()
    }

    pub fn inf_mass(&self) -> f64 {
        self.inf_lower + self.inf_upper
    }

    /// Sorted atom locations.
    pub fn locations(&self) -> &[f64] {
        &self.locs
    }

    pub fn atom_weights(&self) -> &[f64] {
        &self.weights
    }

    fn has_finite(&self) -> bool {
        !self.locs.is_empty() && self.cache().finite_mass > 0.0
    }

    /// Right-continuous CDF: mass at or below `x` (including any −∞ mass).
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.locs.partition_point(|&l| l <= x);
        self.inf_lower + if k == 0 { 0.0 } else { self.cache().cum[k - 1] }
    }

    /// Left limit of the CDF: mass strictly below `x`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let k = self.locs.partition_point(|&l| l < x);
        self.inf_lower + if k == 0 { 0.0 } else { self.cache().cum[k - 1] }
    }

    /// Upper-tail mass at or above `x`, including any +∞ mass. Computed as
    /// a direct suffix sum so it matches tail enumeration bit for bit.
    pub fn upper_tail(&self, x: f64) -> f64 {
        let k = self.locs.partition_point(|&l| l < x);
        self.inf_upper
            + if k == self.locs.len() {
                0.0
            } else {
                self.cache().suffix[k]
            }
    }

    /// Generalized inverse over the finite atoms (weights renormalized to
    /// sum 1, infinity mass excluded): smallest location with `F(x) >= u`.
    pub fn finite_quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(LsciError::InvalidU(u));
        }
        if !self.has_finite() {
            return Err(LsciError::EmptyMeasure);
        }
        let c = self.cache();
        let target = u * c.finite_mass;
        // first index with cum >= target; guard the top edge against roundoff
        let idx = c.cum.partition_point(|&cw| cw < target);
        Ok(self.locs[idx.min(self.locs.len() - 1)])
    }

    /// Weighted median of the finite atoms.
    pub fn finite_median(&self) -> Result<f64> {
        if !self.has_finite() {
            return Err(LsciError::EmptyMeasure);
        }
        Ok(self.cache().median)
    }

    /// Weighted mean and variance of the finite atoms.
    pub fn finite_moments(&self) -> Result<(f64, f64)> {
        if !self.has_finite() {
            return Err(LsciError::EmptyMeasure);
        }
        let c = self.cache();
        Ok((c.mean, c.var))
    }

    /// Finite-atom mass at or below `x` (reserved mass excluded).
    fn finite_cdf(&self, x: f64) -> f64 {
        let k = self.locs.partition_point(|&l| l <= x);
        if k == 0 {
            0.0
        } else {
            self.cache().cum[k - 1]
        }
    }

    /// Finite-atom mass at or above `x` (reserved mass excluded).
    fn finite_tail(&self, x: f64) -> f64 {
        let k = self.locs.partition_point(|&l| l < x);
        if k == self.locs.len() {
            0.0
        } else {
            self.cache().suffix[k]
        }
    }

    /// Weighted median of the finite atoms plus an extra atom `(x, m)`.
    fn median_with_atom(&self, x: f64, m: f64) -> f64 {
        let c = self.cache();
        let target = 0.5 * (c.finite_mass + m);
        let j = self.locs.partition_point(|&l| l < x);
        // atoms strictly below x carry no extra mass yet
        let i = c.cum[..j].partition_point(|&cw| cw < target);
        if i < j {
            return self.locs[i];
        }
        if self.finite_cdf(x) + m >= target {
            return x;
        }
        let i = c.cum[j..].partition_point(|&cw| cw + m < target);
        self.locs[(j + i).min(self.locs.len() - 1)]
    }

    /// Weighted mean and variance of the finite atoms plus an extra atom
    /// `(x, m)`.
    fn moments_with_atom(&self, x: f64, m: f64) -> (f64, f64) {
        let c = self.cache();
        let total = c.finite_mass + m;
        let mean = (c.finite_mass * c.mean + m * x) / total;
        let second = c.finite_mass * (c.var + c.mean * c.mean) + m * x * x;
        let var = (second / total - mean * mean).max(0.0);
        (mean, var)
    }
}

/// Depth of a scalar under a local measure.
pub fn univariate_depth(x: f64, m: &LocalMeasure, kind: DepthKind) -> Result<f64> {
    if !m.has_finite() {
        return Err(LsciError::EmptyMeasure);
    }
    let d = match kind {
        DepthKind::Tukey => m.cdf(x).min(m.upper_tail(x)),
        DepthKind::NormInf => 1.0 / (1.0 + (x - m.finite_median()?).abs()),
        DepthKind::Mahalanobis => {
            let (mean, var) = m.finite_moments()?;
            let var = var.max(1e-12);
            1.0 / (1.0 + (x - mean) * (x - mean) / var)
        }
    };
    Ok(d)
}

/// Depth of a *candidate* test value: the reserved test-slot mass is
/// relocated from infinity to the candidate's own value, mirroring how each
/// calibration score sees its own atom inside the measure.
pub fn univariate_depth_self_slot(x: f64, m: &LocalMeasure, kind: DepthKind) -> Result<f64> {
    if !m.has_finite() {
        return Err(LsciError::EmptyMeasure);
    }
    let slot = m.inf_mass();
    let d = match kind {
        DepthKind::Tukey => (m.finite_cdf(x) + slot).min(m.finite_tail(x) + slot),
        DepthKind::NormInf => 1.0 / (1.0 + (x - m.median_with_atom(x, slot)).abs()),
        DepthKind::Mahalanobis => {
            let (mean, var) = m.moments_with_atom(x, slot);
            let var = var.max(1e-12);
            1.0 / (1.0 + (x - mean) * (x - mean) / var)
        }
    };
    Ok(d)
}

/// Infimum of [`univariate_depth_self_slot`] over projection scores.
pub fn depth_of_scores_self_slot(
    scores: &[f64],
    measures: &[LocalMeasure],
    kind: DepthKind,
) -> Result<f64> {
    if scores.len() != measures.len() {
        return Err(LsciError::ShapeMismatch(format!(
            "{} scores for {} measures",
            scores.len(),
            measures.len()
        )));
    }
    let mut depth = f64::INFINITY;
    for (x, m) in scores.iter().zip(measures) {
        depth = depth.min(univariate_depth_self_slot(*x, m, kind)?);
    }
    Ok(depth)
}

/// Infimum of univariate depths over precomputed projection scores.
pub fn depth_of_scores(scores: &[f64], measures: &[LocalMeasure], kind: DepthKind) -> Result<f64> {
    if scores.len() != measures.len() {
        return Err(LsciError::ShapeMismatch(format!(
            "{} scores for {} measures",
            scores.len(),
            measures.len()
        )));
    }
    let mut depth = f64::INFINITY;
    for (x, m) in scores.iter().zip(measures) {
        depth = depth.min(univariate_depth(*x, m, kind)?);
    }
    Ok(depth)
}

/// Depth of a residual function: project along every direction of `family`
/// and take the minimum univariate depth.
pub fn phi_depth(
    r: &FunctionSample,
    family: &ProjectionFamily,
    measures: &[LocalMeasure],
    kind: DepthKind,
) -> Result<f64> {
    if measures.len() != family.n_phi() {
        return Err(LsciError::ShapeMismatch(format!(
            "{} measures for {} projections",
            measures.len(),
            family.n_phi()
        )));
    }
    let scores = family.project_sample(r)?;
    depth_of_scores(&scores, measures, kind)
}
