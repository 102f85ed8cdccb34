//! Rejection sampling of the prediction set: inverse-transform proposals
//! along locally weighted principal directions, accepted when the shifted
//! candidate lands inside the calibrated depth region. Accepted members form
//! an ensemble that reduces to a pointwise band.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{build_measures, CalibratedPredictor};
use crate::depth::{InfinityMass, LocalMeasure};
use crate::error::{LsciError, Result};
use crate::function::{FunctionSample, FunctionSet};
use crate::localize::LocalWeights;
use crate::projections::{build_fpca_up_to, ProjectionFamily, ProjectionKind};
use crate::seeding::derive_seed2;

/// Which family generates proposal coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProposalFamily {
    /// Fresh locally weighted FPCA of the calibration residuals.
    #[default]
    LocalFpca,
    /// Reuse the scoring family (requires an FPCA scoring family).
    Scoring,
}

/// Sampler controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Number of principal directions proposals are drawn along.
    pub m_components: usize,
    /// Accepted ensemble size to aim for.
    pub n_samples: usize,
    /// Proposal budget; `None` means `100 * n_samples`.
    pub max_proposals: Option<usize>,
    pub proposal_family: ProposalFamily,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            m_components: 20,
            n_samples: 500,
            max_proposals: None,
            proposal_family: ProposalFamily::LocalFpca,
        }
    }
}

impl SamplerConfig {
    pub fn resolved_max_proposals(&self) -> usize {
        self.max_proposals
            .unwrap_or_else(|| self.n_samples.saturating_mul(100))
    }
}

/// Proposal basis: directions, their local quantile measures, and the local
/// weighted mean the coefficients are recentered about.
#[derive(Debug, Clone)]
pub struct SamplingBasis {
    family: ProjectionFamily,
    measures: Vec<LocalMeasure>,
    mean: FunctionSample,
    mean_scores: Vec<f64>,
}

impl SamplingBasis {
    /// Locally weighted FPCA basis of the calibration residuals, truncated
    /// at the numerical rank (a fully degenerate spread yields a mean-only
    /// basis with zero directions).
    pub fn local_fpca(
        residuals_cal: &FunctionSet,
        weights: &LocalWeights,
        m_components: usize,
        placement: InfinityMass,
    ) -> Result<Self> {
        let m_cap = m_components.min(residuals_cal.grid().len());
        let fpca = build_fpca_up_to(residuals_cal, weights.calibration_weights(), m_cap)?;
        let family = fpca.family;
        let measures = if family.n_phi() > 0 {
            let proj = family.project(residuals_cal)?;
            build_measures(&proj, weights, placement)?
        } else {
            Vec::new()
        };
        let mean_scores = family.project_sample(&fpca.mean)?;
        Ok(SamplingBasis {
            family,
            measures,
            mean: fpca.mean,
            mean_scores,
        })
    }

    /// Reuse a calibrated FPCA scoring family as the proposal basis.
    pub fn from_scoring(
        pred: &CalibratedPredictor,
        residuals_cal: &FunctionSet,
        weights: &LocalWeights,
    ) -> Result<Self> {
        if pred.family().kind() != ProjectionKind::Fpca {
            return Err(LsciError::Unsupported(
                "scoring-family proposals require an FPCA scoring family".into(),
            ));
        }
        // local weighted mean of the calibration residuals
        let p = residuals_cal.grid().len();
        let cal_w = weights.calibration_weights();
        let wsum: f64 = cal_w.iter().sum();
        let mut mean = vec![0.0; p];
        for (s, &wt) in residuals_cal.samples().iter().zip(cal_w) {
            for (m, v) in mean.iter_mut().zip(s.values()) {
                *m += wt / wsum * v;
            }
        }
        let mean = FunctionSample::new(residuals_cal.grid().clone(), mean)?;
        let mean_scores = pred.family().project_sample(&mean)?;
        Ok(SamplingBasis {
            family: pred.family().clone(),
            measures: pred.measures().to_vec(),
            mean,
            mean_scores,
        })
    }

    pub fn n_components(&self) -> usize {
        self.family.n_phi()
    }

    pub fn family(&self) -> &ProjectionFamily {
        &self.family
    }

    pub fn measures(&self) -> &[LocalMeasure] {
        &self.measures
    }

    pub fn mean(&self) -> &FunctionSample {
        &self.mean
    }

    /// Inverse-transform draw: coefficient `c_k` is the weighted empirical
    /// quantile of the k-th projected measure at `u_k` (finite atoms only),
    /// applied about the local weighted mean:
    /// `r̃ = μ̄ + Σ_k (c_k - φ_k(μ̄)) d_k`.
    pub fn inverse_transform_sample(&self, u: &[f64]) -> Result<FunctionSample> {
        if u.len() != self.family.n_phi() {
            return Err(LsciError::ShapeMismatch(format!(
                "{} quantile levels for {} components",
                u.len(),
                self.family.n_phi()
            )));
        }
        let mut values = self.mean.values().to_vec();
        for (k, &uk) in u.iter().enumerate() {
            if !(uk > 0.0 && uk < 1.0) {
                return Err(LsciError::InvalidU(uk));
            }
            let c = self.measures[k].finite_quantile(uk)?;
            let coeff = c - self.mean_scores[k];
            for (v, d) in values.iter_mut().zip(self.family.direction(k)) {
                *v += coeff * d;
            }
        }
        FunctionSample::new(self.mean.grid().clone(), values)
    }
}

/// Accepted prediction functions `g̃ = prediction + r̃` plus proposal counts.
#[derive(Debug, Clone)]
pub struct PredictionEnsemble {
    members: Vec<FunctionSample>,
    n_proposed: usize,
}

impl PredictionEnsemble {
    pub fn members(&self) -> &[FunctionSample] {
        &self.members
    }

    pub fn n_accepted(&self) -> usize {
        self.members.len()
    }

    pub fn n_proposed(&self) -> usize {
        self.n_proposed
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.n_proposed == 0 {
            0.0
        } else {
            self.members.len() as f64 / self.n_proposed as f64
        }
    }

    /// Pointwise min/max envelope of the members.
    pub fn to_band(&self) -> Result<PredictionBand> {
        let first = self.members.first().ok_or(LsciError::EmptyEnsemble)?;
        let mut lower = first.values().to_vec();
        let mut upper = first.values().to_vec();
        for m in &self.members[1..] {
            for (i, v) in m.values().iter().enumerate() {
                if *v < lower[i] {
                    lower[i] = *v;
                }
                if *v > upper[i] {
                    upper[i] = *v;
                }
            }
        }
        let grid = first.grid().clone();
        Ok(PredictionBand {
            lower: FunctionSample::new(grid.clone(), lower)?,
            upper: FunctionSample::new(grid, upper)?,
        })
    }
}

/// Pointwise lower/upper envelope.
#[derive(Debug, Clone)]
pub struct PredictionBand {
    pub lower: FunctionSample,
    pub upper: FunctionSample,
}

impl PredictionBand {
    /// Quadrature-weighted fraction of `target` lying inside the band.
    pub fn inside_fraction(&self, target: &FunctionSample) -> Result<f64> {
        crate::grid::check_same_grid(self.lower.grid(), target.grid(), "inside_fraction")?;
        let w = self.lower.grid().weights();
        let mut inside = 0.0;
        let mut total = 0.0;
        for i in 0..target.len() {
            let v = target.values()[i];
            if v >= self.lower.values()[i] && v <= self.upper.values()[i] {
                inside += w[i];
            }
            total += w[i];
        }
        Ok(inside / total)
    }
}

/// Draw proposals until `n_samples` are accepted or the budget is spent.
/// Proposals come from a fixed-order stream seeded per index, so the
/// accepted set does not depend on thread count.
pub fn sample_ensemble(
    pred: &CalibratedPredictor,
    residuals_cal: &FunctionSet,
    cfg: &SamplerConfig,
    seed: u64,
) -> Result<PredictionEnsemble> {
    if cfg.m_components == 0 || cfg.n_samples == 0 {
        return Err(LsciError::InvalidConfig(
            "sampler needs m_components >= 1 and n_samples >= 1".into(),
        ));
    }
    let basis = match cfg.proposal_family {
        ProposalFamily::LocalFpca => SamplingBasis::local_fpca(
            residuals_cal,
            pred.weights(),
            cfg.m_components,
            pred.infinity_mass(),
        )?,
        ProposalFamily::Scoring => {
            SamplingBasis::from_scoring(pred, residuals_cal, pred.weights())?
        }
    };
    let m = basis.n_components();
    let max_proposals = cfg.resolved_max_proposals();
    let chunk = 128usize;
    let mut members = Vec::with_capacity(cfg.n_samples.min(max_proposals));
    let mut n_proposed = 0usize;

    let mut start = 0usize;
    'outer: while start < max_proposals && members.len() < cfg.n_samples {
        let end = (start + chunk).min(max_proposals);
        let evaluated: Vec<Result<(FunctionSample, bool)>> = (start..end)
            .into_par_iter()
            .map(|j| {
                let mut rng = ChaCha12Rng::seed_from_u64(derive_seed2(seed, 0x5a3717, j as u64));
                let u: Vec<f64> = (0..m)
                    .map(|_| loop {
                        let v: f64 = rng.random();
                        if v > 0.0 {
                            break v;
                        }
                    })
                    .collect();
                let r = basis.inverse_transform_sample(&u)?;
                let g = pred.prediction().add(&r)?;
                let accept = pred.contains(&g)?;
                Ok((g, accept))
            })
            .collect();
        for item in evaluated {
            let (g, accept) = item?;
            n_proposed += 1;
            if accept {
                members.push(g);
                if members.len() == cfg.n_samples {
                    break 'outer;
                }
            }
        }
        start = end;
    }

    if members.is_empty() {
        return Err(LsciError::AcceptanceStalled {
            accepted: 0,
            proposed: n_proposed,
            rate: 0.0,
        });
    }
    Ok(PredictionEnsemble {
        members,
        n_proposed,
    })
}
