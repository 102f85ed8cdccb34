//! Projection families: the linear functionals that slice function-valued
//! residuals down to scalars.
//!
//! A family holds `n_phi` direction vectors, each with unit norm under the
//! grid's weighted inner product. Projecting a sample is the weighted dot
//! product `Σ_i w_i d_i v_i`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LsciError, Result};
use crate::function::{weighted_dot, FunctionSample, FunctionSet};
use crate::grid::{check_same_grid, GridKind, SharedGrid};

/// How a family's directions were built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    Rand,
    Fpca,
    Wave,
    RFpca,
    RWave,
}

/// A finite family of unit-norm projection directions on one grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionFamily {
    #[serde(with = "crate::io::grid_serde")]
    grid: SharedGrid,
    kind: ProjectionKind,
    seed: Option<u64>,
    directions: Vec<Vec<f64>>,
}

/// Projected scores, one row per direction and one column per sample.
#[derive(Debug, Clone)]
pub struct ProjectedScores {
    rows: Vec<Vec<f64>>,
}

impl ProjectedScores {
    pub fn n_phi(&self) -> usize {
        self.rows.len()
    }

    pub fn n_samples(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    /// Scores of all samples along direction `k`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }
}

/// Scale to unit weighted norm and make the entry of largest magnitude
/// positive (reproducible sign).
fn normalize_direction(weights: &[f64], dir: &mut [f64]) {
    let norm = weighted_dot(weights, dir, dir).sqrt();
    if norm > 0.0 {
        for d in dir.iter_mut() {
            *d /= norm;
        }
    }
    let mut max_idx = 0;
    let mut max_abs = 0.0;
    for (i, d) in dir.iter().enumerate() {
        if d.abs() > max_abs {
            max_abs = d.abs();
            max_idx = i;
        }
    }
    if dir[max_idx] < 0.0 {
        for d in dir.iter_mut() {
            *d = -*d;
        }
    }
}

impl ProjectionKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProjectionKind::Rand => "rand",
            ProjectionKind::Fpca => "fpca",
            ProjectionKind::Wave => "wave",
            ProjectionKind::RFpca => "rfpca",
            ProjectionKind::RWave => "rwave",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rand" => Ok(ProjectionKind::Rand),
            "fpca" => Ok(ProjectionKind::Fpca),
            "wave" => Ok(ProjectionKind::Wave),
            "rfpca" => Ok(ProjectionKind::RFpca),
            "rwave" => Ok(ProjectionKind::RWave),
            other => Err(LsciError::InvalidConfig(format!(
                "unknown projection kind {other:?}"
            ))),
        }
    }
}

impl ProjectionFamily {
    pub fn grid(&self) -> &SharedGrid {
        &self.grid
    }

    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    pub fn n_phi(&self) -> usize {
        self.directions.len()
    }

    pub fn direction(&self, k: usize) -> &[f64] {
        &self.directions[k]
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    /// i.i.d. isotropic Gaussian directions, normalized; deterministic per seed.
    pub fn build_random(grid: SharedGrid, n_phi: usize, seed: u64) -> Result<Self> {
        if n_phi == 0 {
            return Err(LsciError::InvalidConfig("n_phi must be >= 1".into()));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let p = grid.len();
        let directions = (0..n_phi)
            .map(|_| {
                let mut d: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
                normalize_direction(grid.weights(), &mut d);
                d
            })
            .collect();
        Ok(ProjectionFamily {
            grid,
            kind: ProjectionKind::Rand,
            seed: Some(seed),
            directions,
        })
    }

    /// First `n_phi` Haar basis vectors: the scaling function, then wavelets
    /// coarse-to-fine and left-to-right, each normalized to unit weighted
    /// norm. 1D grids only.
    pub fn build_wavelet(grid: SharedGrid, n_phi: usize) -> Result<Self> {
        if grid.kind() != GridKind::Interval1D {
            return Err(LsciError::Unsupported(
                "wavelet projections are defined for 1D grids only".into(),
            ));
        }
        let p = grid.len();
        if n_phi == 0 || n_phi > p {
            return Err(LsciError::InvalidConfig(format!(
                "n_phi must be in 1..={p} for a {p}-point grid"
            )));
        }
        let mut directions: Vec<Vec<f64>> = Vec::with_capacity(n_phi);
        let mut scaling = vec![1.0; p];
        normalize_direction(grid.weights(), &mut scaling);
        directions.push(scaling);
        // breadth-first over dyadic index ranges: coarse-to-fine, left-to-right
        let mut ranges = std::collections::VecDeque::new();
        ranges.push_back((0usize, p));
        while directions.len() < n_phi {
            let (a, b) = ranges
                .pop_front()
                .expect("a p-point grid admits p Haar vectors");
            if b - a < 2 {
                continue;
            }
            let mid = (a + b) / 2;
            let mut d = vec![0.0; p];
            for v in &mut d[a..mid] {
                *v = 1.0;
            }
            for v in &mut d[mid..b] {
                *v = -1.0;
            }
            normalize_direction(grid.weights(), &mut d);
            directions.push(d);
            ranges.push_back((a, mid));
            ranges.push_back((mid, b));
        }
        Ok(ProjectionFamily {
            grid,
            kind: ProjectionKind::Wave,
            seed: None,
            directions,
        })
    }

    /// Concatenate `base` with `n_rand` fresh random unit directions.
    pub fn build_hybrid(base: &ProjectionFamily, n_rand: usize, seed: u64) -> Result<Self> {
        if n_rand == 0 {
            return Ok(base.clone());
        }
        let rand = ProjectionFamily::build_random(base.grid.clone(), n_rand, seed)?;
        let mut directions = base.directions.clone();
        directions.extend(rand.directions);
        let kind = match base.kind {
            ProjectionKind::Fpca | ProjectionKind::RFpca => ProjectionKind::RFpca,
            ProjectionKind::Wave | ProjectionKind::RWave => ProjectionKind::RWave,
            ProjectionKind::Rand => ProjectionKind::Rand,
        };
        Ok(ProjectionFamily {
            grid: base.grid.clone(),
            kind,
            seed: Some(seed),
            directions,
        })
    }

    /// Project every sample of a set: entry `(k, t) = Σ_i w_i d_k[i] v_t[i]`.
    pub fn project(&self, set: &FunctionSet) -> Result<ProjectedScores> {
        check_same_grid(&self.grid, set.grid(), "project")?;
        let w = self.grid.weights();
        let rows = self
            .directions
            .iter()
            .map(|d| {
                set.samples()
                    .iter()
                    .map(|s| weighted_dot(w, d, s.values()))
                    .collect()
            })
            .collect();
        Ok(ProjectedScores { rows })
    }

    /// Project a single sample along every direction.
    pub fn project_sample(&self, sample: &FunctionSample) -> Result<Vec<f64>> {
        check_same_grid(&self.grid, sample.grid(), "project")?;
        let w = self.grid.weights();
        Ok(self
            .directions
            .iter()
            .map(|d| weighted_dot(w, d, sample.values()))
            .collect())
    }
}

/// Output of a weighted FPCA build: the family plus its spectrum and the
/// weighted mean it was centered on.
#[derive(Debug, Clone)]
pub struct FpcaResult {
    pub family: ProjectionFamily,
    /// Descending eigenvalues of the weighted covariance operator.
    pub eigenvalues: Vec<f64>,
    /// Weighted mean of the input residuals.
    pub mean: FunctionSample,
}

/// Top-`n_phi` eigendirections of the weighted covariance operator
/// `C = Σ_t w̃_t (r_t - μ̄)(r_t - μ̄)ᵀ W`, each with unit weighted norm,
/// ordered by descending eigenvalue.
pub fn build_fpca(residuals: &FunctionSet, weights: &[f64], n_phi: usize) -> Result<FpcaResult> {
    let p = residuals.grid().len();
    if n_phi == 0 || n_phi > p {
        return Err(LsciError::InvalidConfig(format!(
            "n_phi must be in 1..={p} for a {p}-point grid"
        )));
    }
    let res = fpca_impl(residuals, weights, n_phi, None, auto_route(residuals))?;
    if res.family.n_phi() < n_phi {
        return Err(LsciError::DegenerateCovariance(format!(
            "requested {n_phi} components but numerical rank is {}",
            res.family.n_phi()
        )));
    }
    Ok(res)
}

/// Like [`build_fpca`], but truncates at the numerical rank instead of
/// erroring; a fully degenerate spread yields a mean-only result with zero
/// directions.
pub fn build_fpca_up_to(
    residuals: &FunctionSet,
    weights: &[f64],
    max_components: usize,
) -> Result<FpcaResult> {
    let want = max_components.min(residuals.grid().len());
    fpca_impl(residuals, weights, want, Some(1e-10), auto_route(residuals))
}

#[derive(Clone, Copy)]
enum FpcaRoute {
    /// Eigendecompose the p x p operator directly.
    Dense,
    /// Eigendecompose the n x n Gram matrix (for n < p).
    Snapshot,
}

/// The dense route is exact and cheap whenever the operator is small.
fn auto_route(residuals: &FunctionSet) -> FpcaRoute {
    let n = residuals.len();
    let p = residuals.grid().len();
    if p <= n.max(128) {
        FpcaRoute::Dense
    } else {
        FpcaRoute::Snapshot
    }
}

/// Shared FPCA core. With `truncate_rel = Some(tol)` components whose
/// eigenvalue falls below `tol * λ_max` are dropped; with `None` the dense
/// route returns exactly `want` components and the snapshot route stops at
/// the numerical rank (the strict wrapper turns that into an error).
fn fpca_impl(
    residuals: &FunctionSet,
    weights: &[f64],
    want: usize,
    truncate_rel: Option<f64>,
    route: FpcaRoute,
) -> Result<FpcaResult> {
    let n = residuals.len();
    let p = residuals.grid().len();
    let grid = residuals.grid().clone();
    if n == 0 {
        return Err(LsciError::EmptyCalibration);
    }
    if weights.len() != n {
        return Err(LsciError::ShapeMismatch(format!(
            "{} weights for {n} residuals",
            weights.len()
        )));
    }
    let wsum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0) || wsum <= 0.0 {
        return Err(LsciError::InvalidConfig(
            "fpca weights must be nonnegative with positive sum".into(),
        ));
    }

    // weighted mean
    let mut mean = vec![0.0; p];
    for (s, &wt) in residuals.samples().iter().zip(weights) {
        let wn = wt / wsum;
        for (m, v) in mean.iter_mut().zip(s.values()) {
            *m += wn * v;
        }
    }

    // Z[t][i] = sqrt(w̃_t) * (r_t[i] - μ̄[i]) * sqrt(w_grid[i]); the weighted
    // covariance operator is similar to ZᵀZ under the W^{1/2} change of basis
    let sqrt_gw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let z = DMatrix::from_fn(n, p, |t, i| {
        (weights[t] / wsum).sqrt() * (residuals.sample(t).values()[i] - mean[i]) * sqrt_gw[i]
    });

    let total_var: f64 = z.iter().map(|v| v * v).sum();
    let mean = FunctionSample::new(grid.clone(), mean)?;
    if total_var <= 1e-24 {
        if truncate_rel.is_some() {
            return Ok(FpcaResult {
                family: ProjectionFamily {
                    grid,
                    kind: ProjectionKind::Fpca,
                    seed: None,
                    directions: Vec::new(),
                },
                eigenvalues: Vec::new(),
                mean,
            });
        }
        return Err(LsciError::DegenerateCovariance(
            "all residuals equal the weighted mean".into(),
        ));
    }

    let mut eigenvalues = Vec::with_capacity(want);
    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(want);
    match route {
        FpcaRoute::Dense => {
            let a = z.tr_mul(&z); // p x p
            let eig = a.symmetric_eigen();
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
            let lam_max = eig.eigenvalues[order[0]].max(0.0);
            for &i in order.iter().take(want) {
                let lam = eig.eigenvalues[i].max(0.0);
                if let Some(tol) = truncate_rel {
                    if lam <= tol * lam_max {
                        break;
                    }
                }
                let col = eig.eigenvectors.column(i);
                eigenvalues.push(lam);
                directions.push((0..p).map(|j| col[j] / sqrt_gw[j]).collect());
            }
        }
        FpcaRoute::Snapshot => {
            let g = &z * z.transpose(); // n x n
            let eig = g.symmetric_eigen();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
            let lam_max = eig.eigenvalues[order[0]].max(0.0);
            let floor = truncate_rel.unwrap_or(1e-12) * lam_max.max(1e-300);
            for &i in order.iter().take(want) {
                let lam = eig.eigenvalues[i];
                if lam <= floor {
                    break; // beyond the numerical rank
                }
                let a = DVector::from_column_slice(eig.eigenvectors.column(i).as_slice());
                let u = z.tr_mul(&a) / lam.sqrt();
                eigenvalues.push(lam);
                directions.push((0..p).map(|j| u[j] / sqrt_gw[j]).collect());
            }
        }
    }

    for d in &mut directions {
        normalize_direction(grid.weights(), d);
    }
    Ok(FpcaResult {
        family: ProjectionFamily {
            grid,
            kind: ProjectionKind::Fpca,
            seed: None,
            directions,
        },
        eigenvalues,
        mean,
    })
}
