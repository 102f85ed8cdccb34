//! Run configuration: one JSON document drives dataset generation,
//! calibration, sampling, and benchmarking. Command-line flags override
//! individual fields.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conformal::{CalibrationConfig, ThresholdRank};
use crate::datagen::{GenSizes, SynthTask};
use crate::depth::{DepthKind, InfinityMass};
use crate::error::{LsciError, Result};
use crate::localize::{CvConfig, LocalizerKernel, LocalizerKind};
use crate::projections::ProjectionKind;
use crate::sampler::{ProposalFamily, SamplerConfig};

/// Prediction-set method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    /// The localized depth-region method.
    Lsci,
    /// Split conformal on L2 residual norms, rendered as a constant band.
    Conf1,
    /// Standard-deviation-modulated conformal band.
    Conf2,
    /// Split conformal on sup-norm residuals (constant band).
    Supr,
}

impl MethodKind {
    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::Lsci => "lsci",
            MethodKind::Conf1 => "conf1",
            MethodKind::Conf2 => "conf2",
            MethodKind::Supr => "supr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lsci" => Ok(MethodKind::Lsci),
            "conf1" => Ok(MethodKind::Conf1),
            "conf2" => Ok(MethodKind::Conf2),
            "supr" => Ok(MethodKind::Supr),
            other => Err(LsciError::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// Benchmark sweep shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Evaluate the single configured cell.
    #[default]
    None,
    /// All projection families crossed with all depth kinds.
    ProjectionsDepths,
    /// All localizer kernels crossed with the bandwidth grid.
    LocalizersLambdas,
}

/// Full run configuration with benchmark-scale defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub task: SynthTask,
    pub methods: Vec<MethodKind>,
    pub alpha: f64,
    pub delta: f64,
    pub projection: ProjectionKind,
    pub n_phi: usize,
    pub depth: DepthKind,
    pub localizer: LocalizerKernel,
    pub lambda: f64,
    pub lambda_grid: Option<Vec<f64>>,
    /// Choose the bandwidth by cross validation before evaluating.
    pub select_lambda: bool,
    pub m_components: usize,
    pub n_samples: usize,
    pub max_proposals: Option<usize>,
    pub proposal_family: ProposalFamily,
    pub knockoff_scale: Option<f64>,
    pub threshold_rank: ThresholdRank,
    pub infinity_mass: InfinityMass,
    pub n_train: Option<usize>,
    pub n_cal: Option<usize>,
    pub n_test: Option<usize>,
    pub grid_points: usize,
    pub n_lat: usize,
    pub n_lon: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
    /// Sample ensembles and report band metrics (width, risk, dCR, dCW).
    pub compute_bands: bool,
    /// Cap on evaluated test points per replicate (strided subsample).
    pub max_eval_test: Option<usize>,
    pub sweep: SweepKind,
    pub cv: CvConfig,
    pub ridge_half_width: usize,
    pub ridge_penalty: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: SynthTask::Reg1D,
            methods: vec![MethodKind::Lsci],
            alpha: 0.1,
            delta: 0.01,
            projection: ProjectionKind::Rand,
            n_phi: 20,
            depth: DepthKind::Tukey,
            localizer: LocalizerKernel::L2,
            lambda: 3.0,
            lambda_grid: None,
            select_lambda: false,
            m_components: 20,
            n_samples: 500,
            max_proposals: None,
            proposal_family: ProposalFamily::LocalFpca,
            knockoff_scale: None,
            threshold_rank: ThresholdRank::Coverage,
            infinity_mass: InfinityMass::Upper,
            n_train: None,
            n_cal: None,
            n_test: None,
            grid_points: 64,
            n_lat: 32,
            n_lon: 64,
            replicates: 20,
            seed: 7,
            threads: 0,
            compute_bands: false,
            max_eval_test: None,
            sweep: SweepKind::None,
            cv: CvConfig::default(),
            ridge_half_width: 2,
            ridge_penalty: 1e-8,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(LsciError::InvalidConfig(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return Err(LsciError::InvalidConfig(format!(
                "delta must lie in [0,1), got {}",
                self.delta
            )));
        }
        if self.n_phi == 0 || self.m_components == 0 || self.n_samples == 0 {
            return Err(LsciError::InvalidConfig(
                "n_phi, m_components and n_samples must be >= 1".into(),
            ));
        }
        if self.lambda < 0.0 {
            return Err(LsciError::InvalidConfig("lambda must be >= 0".into()));
        }
        if self.methods.is_empty() {
            return Err(LsciError::InvalidConfig("no methods requested".into()));
        }
        Ok(())
    }

    pub fn gen_sizes(&self) -> GenSizes {
        GenSizes {
            n_train: self.n_train,
            n_cal: self.n_cal,
            n_test: self.n_test,
            grid_points: self.grid_points,
            n_lat: self.n_lat,
            n_lon: self.n_lon,
        }
    }

    /// Calibration settings for one test point.
    pub fn calibration_config(&self, seed: u64) -> CalibrationConfig {
        CalibrationConfig {
            projection: self.projection,
            n_phi: self.n_phi,
            depth: self.depth,
            localizer: LocalizerKind {
                kernel: self.localizer,
                lambda: self.lambda,
            },
            alpha: self.alpha,
            knockoff_scale: self.knockoff_scale,
            seed,
            threshold_rank: self.threshold_rank,
            infinity_mass: self.infinity_mass,
        }
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            m_components: self.m_components,
            n_samples: self.n_samples,
            max_proposals: self.max_proposals,
            proposal_family: self.proposal_family,
        }
    }

    /// Bandwidth candidates for sweeps and cross validation.
    pub fn lambda_candidates(&self) -> Vec<f64> {
        self.lambda_grid
            .clone()
            .unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0, 5.0])
    }
}
