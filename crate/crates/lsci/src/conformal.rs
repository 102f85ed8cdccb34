//! Localized conformal calibration: build per-projection weighted measures,
//! score the calibration residuals by their projection-infimum depth, pick
//! the depth threshold, and answer membership queries for candidate outputs.

use serde::{Deserialize, Serialize};

use crate::depth::{
    depth_of_scores_self_slot, univariate_depth, DepthKind, InfinityMass, LocalMeasure,
};
use crate::error::{LsciError, Result};
use crate::function::{FunctionSample, FunctionSet};
use crate::grid::check_same_grid;
use crate::localize::{
    coverage_gap_bound, knockoff, local_weights, LocalWeights, LocalizerKernel, LocalizerKind,
};
use crate::projections::{build_fpca, ProjectedScores, ProjectionFamily, ProjectionKind};
use crate::seeding::derive_seed;

/// Which order statistic of the calibration depths becomes the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRank {
    /// `⌊α(n+1)⌋`-th smallest depth: the lower-α depth quantile, which leaves
    /// at least `1-α` of the calibration mass at or above the threshold.
    #[default]
    Coverage,
    /// `⌈(1-α)(n+1)⌉`-th smallest depth: keeps only the most central α-core.
    PaperLiteral,
}

/// Everything `calibrate` needs besides the data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub projection: ProjectionKind,
    pub n_phi: usize,
    pub depth: DepthKind,
    pub localizer: LocalizerKind,
    pub alpha: f64,
    /// Knock-off noise standard deviation; `None` uses 5% of the pooled
    /// standard deviation of the calibration inputs.
    pub knockoff_scale: Option<f64>,
    pub seed: u64,
    pub threshold_rank: ThresholdRank,
    pub infinity_mass: InfinityMass,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            projection: ProjectionKind::Rand,
            n_phi: 20,
            depth: DepthKind::Tukey,
            localizer: LocalizerKind {
                kernel: LocalizerKernel::L2,
                lambda: 3.0,
            },
            alpha: 0.1,
            knockoff_scale: None,
            seed: 0,
            threshold_rank: ThresholdRank::Coverage,
            infinity_mass: InfinityMass::Upper,
        }
    }
}

/// Per-projection weighted empirical measures of the calibration scores:
/// atoms `(φ_k(r_t), w_t)` plus the test slot's mass at infinity.
pub fn build_measures(
    proj_cal: &ProjectedScores,
    w: &LocalWeights,
    placement: InfinityMass,
) -> Result<Vec<LocalMeasure>> {
    let n = proj_cal.n_samples();
    if w.n_calibration() != n {
        return Err(LsciError::ShapeMismatch(format!(
            "{} weights for {n} projected samples",
            w.n_calibration()
        )));
    }
    let cal_w = w.calibration_weights();
    (0..proj_cal.n_phi())
        .map(|k| {
            let atoms = proj_cal
                .row(k)
                .iter()
                .zip(cal_w)
                .map(|(&x, &wt)| (x, wt))
                .collect();
            LocalMeasure::from_atoms(atoms, w.test_mass(), placement)
        })
        .collect()
}

/// Depth of each calibration residual under the local measures (computed
/// from already-projected scores).
pub fn calibration_scores_projected(
    proj_cal: &ProjectedScores,
    measures: &[LocalMeasure],
    kind: DepthKind,
) -> Result<Vec<f64>> {
    let n = proj_cal.n_samples();
    let n_phi = proj_cal.n_phi();
    if measures.len() != n_phi {
        return Err(LsciError::ShapeMismatch(format!(
            "{} measures for {n_phi} projections",
            measures.len()
        )));
    }
    let mut depths = vec![f64::INFINITY; n];
    for k in 0..n_phi {
        let row = proj_cal.row(k);
        let m = &measures[k];
        for (d, &x) in depths.iter_mut().zip(row) {
            let dk = univariate_depth(x, m, kind)?;
            if dk < *d {
                *d = dk;
            }
        }
    }
    Ok(depths)
}

/// Depth of each calibration residual under the local measures.
pub fn calibration_scores(
    residuals_cal: &FunctionSet,
    family: &ProjectionFamily,
    measures: &[LocalMeasure],
    kind: DepthKind,
) -> Result<Vec<f64>> {
    let proj = family.project(residuals_cal)?;
    calibration_scores_projected(&proj, measures, kind)
}

/// Depth threshold from the calibration depths at miscoverage level `alpha`.
pub fn threshold(scores: &[f64], alpha: f64, rank: ThresholdRank) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LsciError::InvalidConfig(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    let n = scores.len();
    if n == 0 {
        return Err(LsciError::EmptyCalibration);
    }
    let k = match rank {
        ThresholdRank::Coverage => {
            let k = (alpha * (n as f64 + 1.0) + 1e-9).floor() as usize;
            if k < 1 {
                return Ok(0.0);
            }
            k.min(n)
        }
        ThresholdRank::PaperLiteral => {
            let k = ((1.0 - alpha) * (n as f64 + 1.0) - 1e-9).ceil() as usize;
            k.clamp(1, n)
        }
    };
    let mut sorted = scores.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(sorted[k - 1])
}

/// Frozen output of a calibration run: projection family, local measures,
/// threshold, and the prediction the set is centered on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibratedPredictor {
    family: ProjectionFamily,
    measures: Vec<LocalMeasure>,
    depth_kind: DepthKind,
    q: f64,
    alpha: f64,
    prediction: FunctionSample,
    weights: LocalWeights,
    infinity_mass: InfinityMass,
}

impl CalibratedPredictor {
    /// Assemble a predictor from pre-built pieces (custom pipelines, FFI).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        family: ProjectionFamily,
        measures: Vec<LocalMeasure>,
        depth_kind: DepthKind,
        q: f64,
        alpha: f64,
        prediction: FunctionSample,
        weights: LocalWeights,
        infinity_mass: InfinityMass,
    ) -> Self {
        CalibratedPredictor {
            family,
            measures,
            depth_kind,
            q,
            alpha,
            prediction,
            weights,
            infinity_mass,
        }
    }

    pub fn family(&self) -> &ProjectionFamily {
        &self.family
    }

    pub fn measures(&self) -> &[LocalMeasure] {
        &self.measures
    }

    pub fn depth_kind(&self) -> DepthKind {
        self.depth_kind
    }

    /// Depth threshold defining the accepted region.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn prediction(&self) -> &FunctionSample {
        &self.prediction
    }

    pub fn weights(&self) -> &LocalWeights {
        &self.weights
    }

    pub fn infinity_mass(&self) -> InfinityMass {
        self.infinity_mass
    }

    /// Depth of a candidate output's residual under the local measures.
    ///
    /// The candidate is scored with the reserved test-slot mass placed at
    /// its own projected value (the hypothesis under test), which mirrors
    /// how every calibration residual sees its own atom inside the measure.
    pub fn residual_depth(&self, g_candidate: &FunctionSample) -> Result<f64> {
        check_same_grid(self.prediction.grid(), g_candidate.grid(), "contains")?;
        let r = g_candidate.subtract(&self.prediction)?;
        let scores = self.family.project_sample(&r)?;
        depth_of_scores_self_slot(&scores, &self.measures, self.depth_kind)
    }

    /// Membership test: `true` iff the candidate's residual depth reaches
    /// the threshold.
    pub fn contains(&self, g_candidate: &FunctionSample) -> Result<bool> {
        Ok(self.residual_depth(g_candidate)? >= self.q)
    }

    /// Proposition-style coverage-gap bound of the weights used here
    /// (exponential kernels only).
    pub fn gap_bound(&self) -> Result<f64> {
        coverage_gap_bound(&self.weights)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut p: CalibratedPredictor = serde_json::from_str(text)?;
        for m in &mut p.measures {
            m.ensure_cache();
        }
        Ok(p)
    }
}

/// Build the projection family a calibration run scores with. FPCA-based
/// families are weighted by the localization weights.
pub fn build_scoring_family(
    residuals_cal: &FunctionSet,
    w: &LocalWeights,
    config: &CalibrationConfig,
) -> Result<ProjectionFamily> {
    let grid = residuals_cal.grid().clone();
    let n_phi = config.n_phi;
    match config.projection {
        ProjectionKind::Rand => {
            ProjectionFamily::build_random(grid, n_phi, derive_seed(config.seed, 1))
        }
        ProjectionKind::Wave => ProjectionFamily::build_wavelet(grid, n_phi),
        ProjectionKind::Fpca => Ok(build_fpca(
            residuals_cal,
            w.calibration_weights(),
            n_phi,
        )?
        .family),
        ProjectionKind::RFpca => {
            let n_base = n_phi.div_ceil(2);
            let base = build_fpca(residuals_cal, w.calibration_weights(), n_base)?.family;
            ProjectionFamily::build_hybrid(&base, n_phi - n_base, derive_seed(config.seed, 1))
        }
        ProjectionKind::RWave => {
            let n_base = n_phi.div_ceil(2);
            let base = ProjectionFamily::build_wavelet(grid, n_base)?;
            ProjectionFamily::build_hybrid(&base, n_phi - n_base, derive_seed(config.seed, 1))
        }
    }
}

/// Run the full calibration pipeline for one test input: knock off the test
/// point, localize, build the scoring family and measures, score the
/// calibration residuals, and freeze the threshold.
pub fn calibrate(
    base_residuals: &FunctionSet,
    f_cal: &FunctionSet,
    f_test: &FunctionSample,
    prediction: &FunctionSample,
    config: &CalibrationConfig,
) -> Result<CalibratedPredictor> {
    if base_residuals.is_empty() || f_cal.is_empty() {
        return Err(LsciError::EmptyCalibration);
    }
    if base_residuals.len() != f_cal.len() {
        return Err(LsciError::ShapeMismatch(format!(
            "{} residuals vs {} calibration inputs",
            base_residuals.len(),
            f_cal.len()
        )));
    }
    check_same_grid(f_cal.grid(), f_test.grid(), "calibrate inputs")?;
    check_same_grid(base_residuals.grid(), prediction.grid(), "calibrate outputs")?;

    let scale = config
        .knockoff_scale
        .unwrap_or_else(|| 0.05 * f_cal.pooled_std());
    let knocked = knockoff(f_test, scale, derive_seed(config.seed, 0));
    let w = local_weights(f_cal, &knocked, config.localizer)?;
    let family = build_scoring_family(base_residuals, &w, config)?;
    let proj = family.project(base_residuals)?;
    let measures = build_measures(&proj, &w, config.infinity_mass)?;
    let depths = calibration_scores_projected(&proj, &measures, config.depth)?;
    let q = threshold(&depths, config.alpha, config.threshold_rank)?;
    Ok(CalibratedPredictor {
        family,
        measures,
        depth_kind: config.depth,
        q,
        alpha: config.alpha,
        prediction: prediction.clone(),
        weights: w,
        infinity_mass: config.infinity_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn gaussian_set(n: usize, p: usize, sd: f64, seed: u64) -> FunctionSet {
        let grid = Grid::uniform_1d(p);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| {
                let vals = (0..p)
                    .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                FunctionSample::new(grid.clone(), vals).unwrap()
            })
            .collect();
        FunctionSet::new(grid, samples).unwrap()
    }

    fn uniform_weights(n: usize) -> LocalWeights {
        let grid = Grid::uniform_1d(2);
        let samples = (0..n)
            .map(|_| FunctionSample::zero(grid.clone()))
            .collect();
        let cal = FunctionSet::new(grid.clone(), samples).unwrap();
        let test = FunctionSample::zero(grid);
        local_weights(
            &cal,
            &test,
            LocalizerKind::new(LocalizerKernel::L2, 0.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn measures_carry_weights_and_infinity_mass() {
        let set = gaussian_set(4, 6, 1.0, 1);
        let fam = ProjectionFamily::build_random(set.grid().clone(), 2, 0).unwrap();
        let proj = fam.project(&set).unwrap();
        let w = uniform_weights(4);
        let ms = build_measures(&proj, &w, InfinityMass::Upper).unwrap();
        assert_eq!(ms.len(), 2);
        for m in &ms {
            assert_eq!(m.n_atoms(), 4);
            assert!((m.inf_mass() - 0.2).abs() < 1e-12);
            for &aw in m.atom_weights() {
                assert!((aw - 0.2).abs() < 1e-12);
            }
        }
        // same weights, different atoms across projections
        assert_ne!(ms[0].locations(), ms[1].locations());
    }

    #[test]
    fn threshold_rank_arithmetic() {
        let scores: Vec<f64> = vec![0.9, 0.1, 0.5, 0.3, 0.8, 0.2, 0.7, 0.4, 0.6];
        // n=9, alpha=0.2 -> k = floor(0.2 * 10) = 2 -> second smallest
        let q = threshold(&scores, 0.2, ThresholdRank::Coverage).unwrap();
        assert_eq!(q, 0.2);
        // alpha small enough that k=0 -> q=0
        let q0 = threshold(&scores, 0.05, ThresholdRank::Coverage).unwrap();
        assert_eq!(q0, 0.0);
        // ties: all equal depths
        let q_tie = threshold(&[0.4; 9], 0.2, ThresholdRank::Coverage).unwrap();
        assert_eq!(q_tie, 0.4);
        // the literal rank keeps only the central core
        let q_lit = threshold(&scores, 0.2, ThresholdRank::PaperLiteral).unwrap();
        assert_eq!(q_lit, 0.8); // ceil(0.8 * 10) = 8th smallest
    }

    #[test]
    fn calibrate_rejects_empty_calibration() {
        let grid = Grid::uniform_1d(4);
        let empty = FunctionSet::new(grid.clone(), vec![]).unwrap();
        let f = FunctionSample::zero(grid);
        let cfg = CalibrationConfig::default();
        assert!(matches!(
            calibrate(&empty, &empty, &f, &f, &cfg),
            Err(LsciError::EmptyCalibration)
        ));
    }

    #[test]
    fn calibrate_is_deterministic_per_seed() {
        let residuals = gaussian_set(40, 8, 1.0, 3);
        let inputs = gaussian_set(40, 8, 1.0, 4);
        let f_test = FunctionSample::zero(inputs.grid().clone());
        let pred = FunctionSample::zero(residuals.grid().clone());
        let mut cfg = CalibrationConfig::default();
        cfg.n_phi = 5;
        cfg.seed = 11;
        let a = calibrate(&residuals, &inputs, &f_test, &pred, &cfg).unwrap();
        let b = calibrate(&residuals, &inputs, &f_test, &pred, &cfg).unwrap();
        assert_eq!(a.q(), b.q());
        cfg.seed = 12;
        let c = calibrate(&residuals, &inputs, &f_test, &pred, &cfg).unwrap();
        // different knockoff and family; q may coincide but weights differ
        assert_ne!(a.weights().weights(), c.weights().weights());
    }

    #[test]
    fn central_residual_is_deeper_than_extremes() {
        let n = 30;
        let grid = Grid::uniform_1d(8);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut samples: Vec<FunctionSample> = (0..n)
            .map(|_| {
                let vals = (0..8).map(|_| rng.sample(StandardNormal)).collect();
                FunctionSample::new(grid.clone(), vals).unwrap()
            })
            .collect();
        // append an extreme residual
        samples.push(FunctionSample::new(grid.clone(), vec![25.0; 8]).unwrap());
        let residuals = FunctionSet::new(grid.clone(), samples).unwrap();
        let fam = ProjectionFamily::build_random(grid.clone(), 6, 2).unwrap();
        let w = uniform_weights(n + 1);
        let proj = fam.project(&residuals).unwrap();
        let measures = build_measures(&proj, &w, InfinityMass::Upper).unwrap();
        let depths =
            calibration_scores_projected(&proj, &measures, DepthKind::Tukey).unwrap();

        // weighted pointwise median of the calibration set
        let mut median_vals = vec![0.0; 8];
        for (j, mv) in median_vals.iter_mut().enumerate() {
            let mut col: Vec<f64> = residuals.samples().iter().map(|s| s.values()[j]).collect();
            col.sort_by(f64::total_cmp);
            *mv = col[col.len() / 2];
        }
        let median = FunctionSample::new(grid, median_vals).unwrap();
        let med_depth = crate::depth::phi_depth(&median, &fam, &measures, DepthKind::Tukey).unwrap();
        let extreme_depth = depths[n];
        assert!(
            med_depth >= extreme_depth,
            "median depth {med_depth} below extreme depth {extreme_depth}"
        );
    }

    #[test]
    fn duplicate_residuals_share_scores() {
        let grid = Grid::uniform_1d(6);
        let a = FunctionSample::new(grid.clone(), vec![1.0, -1.0, 0.5, 0.0, 2.0, -0.5]).unwrap();
        let b = FunctionSample::new(grid.clone(), vec![0.2; 6]).unwrap();
        let set = FunctionSet::new(grid.clone(), vec![a.clone(), b, a.clone(), a]).unwrap();
        let fam = ProjectionFamily::build_random(grid, 3, 1).unwrap();
        let proj = fam.project(&set).unwrap();
        let w = uniform_weights(4);
        let ms = build_measures(&proj, &w, InfinityMass::Upper).unwrap();
        let depths = calibration_scores_projected(&proj, &ms, DepthKind::Tukey).unwrap();
        assert_eq!(depths[0], depths[2]);
        assert_eq!(depths[0], depths[3]);
    }

    #[test]
    fn contains_boundary_semantics() {
        let residuals = gaussian_set(25, 8, 0.5, 9);
        let inputs = gaussian_set(25, 8, 1.0, 10);
        let f_test = FunctionSample::zero(inputs.grid().clone());
        let pred = FunctionSample::zero(residuals.grid().clone());
        let mut cfg = CalibrationConfig::default();
        cfg.n_phi = 4;
        // alpha so small the threshold degenerates to zero: accept anything
        cfg.alpha = 0.01;
        let p = calibrate(&residuals, &inputs, &f_test, &pred, &cfg).unwrap();
        assert_eq!(p.q(), 0.0);
        let wild = FunctionSample::new(residuals.grid().clone(), vec![1e6; 8]).unwrap();
        assert!(p.contains(&wild).unwrap());
    }

    #[test]
    fn outlier_along_fpca_axis_is_rejected() {
        let residuals = gaussian_set(60, 8, 0.5, 13);
        let inputs = gaussian_set(60, 8, 1.0, 14);
        let f_test = FunctionSample::zero(inputs.grid().clone());
        let pred = FunctionSample::zero(residuals.grid().clone());
        let mut cfg = CalibrationConfig::default();
        cfg.projection = ProjectionKind::Fpca;
        cfg.n_phi = 4;
        cfg.alpha = 0.2;
        // mild localization keeps the threshold above the test slot's mass,
        // so remote candidates cannot ride the infinity atom into the set
        cfg.localizer = LocalizerKind::new(LocalizerKernel::L2, 0.2).unwrap();
        let p = calibrate(&residuals, &inputs, &f_test, &pred, &cfg).unwrap();
        assert!(p.q() > 0.0);
        let magnitude = residuals
            .samples()
            .iter()
            .map(|s| s.sup_norm())
            .fold(0.0, f64::max);
        let outlier = FunctionSample::new(
            residuals.grid().clone(),
            p.family().direction(0).iter().map(|d| 10.0 * magnitude * d).collect(),
        )
        .unwrap();
        assert!(!p.contains(&outlier).unwrap());
    }

    #[test]
    fn contains_is_shift_invariant() {
        let residuals = gaussian_set(30, 8, 1.0, 21);
        let inputs = gaussian_set(30, 8, 1.0, 22);
        let f_test = FunctionSample::zero(inputs.grid().clone());
        let grid = residuals.grid().clone();
        let shift = FunctionSample::new(grid.clone(), (0..8).map(|i| i as f64).collect()).unwrap();
        let zero = FunctionSample::zero(grid.clone());
        let mut cfg = CalibrationConfig::default();
        cfg.n_phi = 5;
        let p0 = calibrate(&residuals, &inputs, &f_test, &zero, &cfg).unwrap();
        let p1 = calibrate(&residuals, &inputs, &f_test, &shift, &cfg).unwrap();
        let candidate = residuals.sample(3).clone();
        let shifted = candidate.add(&shift).unwrap();
        assert_eq!(
            p0.contains(&candidate).unwrap(),
            p1.contains(&shifted).unwrap()
        );
        assert_eq!(p0.q(), p1.q());
    }

    #[test]
    fn nested_thresholds_and_sets() {
        let residuals = gaussian_set(50, 8, 1.0, 31);
        let inputs = gaussian_set(50, 8, 1.0, 32);
        let f_test = FunctionSample::zero(inputs.grid().clone());
        let pred = FunctionSample::zero(residuals.grid().clone());
        let mut cfg = CalibrationConfig::default();
        cfg.n_phi = 5;
        cfg.alpha = 0.05;
        let p_inner = calibrate(&residuals, &inputs, &f_test, &pred, &cfg).unwrap();
        cfg.alpha = 0.2;
        let p_outer = calibrate(&residuals, &inputs, &f_test, &pred, &cfg).unwrap();
        assert!(p_inner.q() <= p_outer.q());
        // anything accepted at alpha=0.2 is accepted at alpha=0.05
        for s in residuals.samples().iter().take(20) {
            if p_outer.contains(s).unwrap() {
                assert!(p_inner.contains(s).unwrap());
            }
        }
    }

    #[test]
    fn exchangeable_coverage_near_nominal() {
        // homoskedastic, fully exchangeable residuals: empirical coverage of
        // the depth region should concentrate near 1 - alpha
        let alpha = 0.1;
        let n_cal = 400;
        let n_test = 10;
        let replicates = 100;
        let mut hits = 0usize;
        let mut total = 0usize;
        for rep in 0..replicates {
            let residuals = gaussian_set(n_cal, 8, 1.0, 1000 + rep);
            let inputs = gaussian_set(n_cal, 8, 1.0, 5000 + rep);
            let test_r = gaussian_set(n_test, 8, 1.0, 9000 + rep);
            let test_f = gaussian_set(n_test, 8, 1.0, 13000 + rep);
            let pred = FunctionSample::zero(residuals.grid().clone());
            let mut cfg = CalibrationConfig::default();
            cfg.n_phi = 10;
            cfg.alpha = alpha;
            cfg.localizer = LocalizerKind::new(LocalizerKernel::L2, 1.0).unwrap();
            for i in 0..n_test {
                cfg.seed = derive_seed(rep as u64, i as u64);
                let p = calibrate(&residuals, &inputs, test_f.sample(i), &pred, &cfg).unwrap();
                if p.contains(test_r.sample(i)).unwrap() {
                    hits += 1;
                }
                total += 1;
            }
        }
        let coverage = hits as f64 / total as f64;
        assert!(
            coverage > 0.88 && coverage < 0.96,
            "coverage {coverage} far from nominal 0.9"
        );
    }

    #[test]
    fn predictor_json_round_trip() {
        let residuals = gaussian_set(20, 6, 1.0, 41);
        let inputs = gaussian_set(20, 6, 1.0, 42);
        let f_test = FunctionSample::zero(inputs.grid().clone());
        let pred = FunctionSample::zero(residuals.grid().clone());
        let mut cfg = CalibrationConfig::default();
        cfg.n_phi = 3;
        let p = calibrate(&residuals, &inputs, &f_test, &pred, &cfg).unwrap();
        let json = p.to_json().unwrap();
        let back = CalibratedPredictor::from_json(&json).unwrap();
        assert_eq!(p.q(), back.q());
        let candidate = residuals.sample(0);
        assert_eq!(
            p.residual_depth(candidate).unwrap(),
            back.residual_depth(candidate).unwrap()
        );
    }
}
