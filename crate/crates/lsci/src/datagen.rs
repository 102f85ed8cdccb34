//! Synthetic data: 1D functional regression, 1D autoregression, and a 2D
//! spherical autoregression, each with heteroskedastic Gaussian-process
//! noise and the true per-sample noise scale recorded for adaptivity
//! metrics.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basemodel::convolve_window;
use crate::error::{LsciError, Result};
use crate::function::{FunctionSample, FunctionSet};
use crate::grid::{Grid, SharedGrid};
use crate::io;
use crate::seeding::derive_seed2;

/// Convolution taps linking input to output in the 1D regression task.
pub const REG1D_TAPS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

/// Number of Fourier basis functions in the 1D noise process.
pub const N_FOURIER: usize = 21;

/// Synthetic task family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SynthTask {
    #[serde(rename = "reg1d")]
    Reg1D,
    #[serde(rename = "ar1d")]
    Ar1D,
    #[serde(rename = "arsphere2d")]
    ArSphere2D,
}

impl SynthTask {
    pub fn name(&self) -> &'static str {
        match self {
            SynthTask::Reg1D => "reg1d",
            SynthTask::Ar1D => "ar1d",
            SynthTask::ArSphere2D => "arsphere2d",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "reg1d" => Ok(SynthTask::Reg1D),
            "ar1d" => Ok(SynthTask::Ar1D),
            "arsphere2d" => Ok(SynthTask::ArSphere2D),
            other => Err(LsciError::InvalidConfig(format!("unknown task {other:?}"))),
        }
    }
}

/// Paired inputs/outputs plus the true noise scale of each output.
#[derive(Debug, Clone)]
pub struct PairedSet {
    pub inputs: FunctionSet,
    pub outputs: FunctionSet,
    pub sigma: Vec<f64>,
}

impl PairedSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// The three splits of one synthetic experiment.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub task: SynthTask,
    pub grid: SharedGrid,
    pub train: PairedSet,
    pub cal: PairedSet,
    pub test: PairedSet,
}

/// Sizes for dataset generation; `None` falls back to the task defaults
/// (1000 pairs per split).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GenSizes {
    pub n_train: Option<usize>,
    pub n_cal: Option<usize>,
    pub n_test: Option<usize>,
    pub grid_points: usize,
    pub n_lat: usize,
    pub n_lon: usize,
}

impl Default for GenSizes {
    fn default() -> Self {
        GenSizes {
            n_train: None,
            n_cal: None,
            n_test: None,
            grid_points: 64,
            n_lat: 32,
            n_lon: 64,
        }
    }
}

/// Time-varying noise scale `σ_t = 0.1 (1.25 + sin t)`.
pub fn sigma_t(t: f64) -> f64 {
    0.1 * (1.25 + t.sin())
}

/// Mean curve `μ_t(x) = 2 sin(t) sin(2πx)` on a 1D grid.
pub(crate) fn mean_curve_1d(t: f64, grid: &SharedGrid) -> Vec<f64> {
    grid.coords()
        .iter()
        .map(|x| 2.0 * t.sin() * (2.0 * std::f64::consts::PI * x).sin())
        .collect()
}

/// Orthonormal Fourier basis on `[0, 1]`: constant, then sin/cos pairs by
/// frequency. Returns `n_basis` rows of grid evaluations.
pub(crate) fn fourier_basis_1d(grid: &SharedGrid, n_basis: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    (0..n_basis)
        .map(|k| {
            grid.coords()
                .iter()
                .map(|x| {
                    if k == 0 {
                        1.0
                    } else {
                        let freq = k.div_ceil(2) as f64;
                        if k % 2 == 1 {
                            2f64.sqrt() * (2.0 * PI * freq * x).sin()
                        } else {
                            2f64.sqrt() * (2.0 * PI * freq * x).cos()
                        }
                    }
                })
                .collect()
        })
        .collect()
}

fn gp_noise_1d_with(basis: &[Vec<f64>], rng: &mut ChaCha12Rng, out: &mut [f64]) {
    out.fill(0.0);
    for (k, b) in basis.iter().enumerate() {
        // coefficient variance 1/k by basis index
        let sd = 1.0 / ((k + 1) as f64).sqrt();
        let c: f64 = sd * rng.sample::<f64, _>(StandardNormal);
        for (o, bv) in out.iter_mut().zip(b) {
            *o += c * bv;
        }
    }
}

/// One mean-zero Gaussian-process draw on a 1D grid: 21 Fourier basis
/// functions with `N(0, 1/k)` coefficients.
pub fn gen_gp_noise_1d(grid: &SharedGrid, seed: u64) -> FunctionSample {
    let basis = fourier_basis_1d(grid, N_FOURIER);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut values = vec![0.0; grid.len()];
    gp_noise_1d_with(&basis, &mut rng, &mut values);
    FunctionSample::new(grid.clone(), values).expect("finite draw")
}

/// 1D regression pairs: `f_t = μ_t + 0.1 GP`, `g_t = (f_t * β) + σ_t GP`
/// with `t ~ U(-2π, 2π)` per sample.
pub fn gen_reg1d(sizes: &GenSizes, seed: u64) -> Result<SynthDataset> {
    let grid = Grid::uniform_1d(sizes.grid_points);
    let basis = fourier_basis_1d(&grid, N_FOURIER);
    let two_pi = 2.0 * std::f64::consts::PI;
    let gen_split = |split: u64, n: usize| -> Result<PairedSet> {
        let mut inputs = Vec::with_capacity(n);
        let mut outputs = Vec::with_capacity(n);
        let mut sigma = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut noise = vec![0.0; grid.len()];
        for s in 0..n {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed2(seed, split, s as u64));
            let t = rng.random::<f64>() * 2.0 * two_pi - two_pi;
            let mut f = mean_curve_1d(t, &grid);
            gp_noise_1d_with(&basis, &mut rng, &mut noise);
            for (fv, nv) in f.iter_mut().zip(&noise) {
                *fv += 0.1 * nv;
            }
            let mut g = convolve_window(&f, &REG1D_TAPS);
            let st = sigma_t(t);
            gp_noise_1d_with(&basis, &mut rng, &mut noise);
            for (gv, nv) in g.iter_mut().zip(&noise) {
                *gv += st * nv;
            }
            inputs.push(FunctionSample::new(grid.clone(), f)?);
            outputs.push(FunctionSample::new(grid.clone(), g)?);
            sigma.push(st);
            labels.push(t);
        }
        Ok(PairedSet {
            inputs: FunctionSet::new(grid.clone(), inputs)?.with_labels(labels.clone())?,
            outputs: FunctionSet::new(grid.clone(), outputs)?.with_labels(labels)?,
            sigma,
        })
    };
    Ok(SynthDataset {
        task: SynthTask::Reg1D,
        grid: grid.clone(),
        train: gen_split(0, sizes.n_train.unwrap_or(1000))?,
        cal: gen_split(1, sizes.n_cal.unwrap_or(1000))?,
        test: gen_split(2, sizes.n_test.unwrap_or(1000))?,
    })
}

/// One draw of the 1D autoregressive curve at time `t`.
pub(crate) fn ar1d_sample(
    t: f64,
    grid: &SharedGrid,
    basis: &[Vec<f64>],
    rng: &mut ChaCha12Rng,
) -> Vec<f64> {
    let mut g = mean_curve_1d(t, grid);
    let mut noise = vec![0.0; grid.len()];
    gp_noise_1d_with(basis, rng, &mut noise);
    let st = sigma_t(t);
    for (gv, nv) in g.iter_mut().zip(&noise) {
        *gv += st * nv;
    }
    g
}

/// 1D autoregression: a functional time series `g_t = μ_t + σ_t GP` over
/// equispaced `t ∈ [-2π, 2π]`, paired as `(g_{t-1}, g_t)`. Each split is an
/// independent sequence of `n+1` observations yielding `n` pairs.
pub fn gen_ar1d(sizes: &GenSizes, seed: u64) -> Result<SynthDataset> {
    let grid = Grid::uniform_1d(sizes.grid_points);
    let basis = fourier_basis_1d(&grid, N_FOURIER);
    let two_pi = 2.0 * std::f64::consts::PI;
    let gen_split = |split: u64, n_pairs: usize| -> Result<PairedSet> {
        let n_obs = n_pairs + 1;
        if n_obs < 3 {
            return Err(LsciError::InvalidConfig(
                "autoregressive splits need at least 3 observations".into(),
            ));
        }
        let mut series = Vec::with_capacity(n_obs);
        let mut ts = Vec::with_capacity(n_obs);
        for s in 0..n_obs {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed2(seed, split, s as u64));
            let t = -two_pi + 2.0 * two_pi * s as f64 / (n_obs as f64 - 1.0);
            series.push(FunctionSample::new(
                grid.clone(),
                ar1d_sample(t, &grid, &basis, &mut rng),
            )?);
            ts.push(t);
        }
        let inputs = series[..n_obs - 1].to_vec();
        let outputs = series[1..].to_vec();
        let out_ts: Vec<f64> = ts[1..].to_vec();
        let sigma: Vec<f64> = out_ts.iter().map(|&t| sigma_t(t)).collect();
        Ok(PairedSet {
            inputs: FunctionSet::new(grid.clone(), inputs)?.with_labels(out_ts.clone())?,
            outputs: FunctionSet::new(grid.clone(), outputs)?.with_labels(out_ts)?,
            sigma,
        })
    };
    Ok(SynthDataset {
        task: SynthTask::Ar1D,
        grid: grid.clone(),
        train: gen_split(0, sizes.n_train.unwrap_or(1000))?,
        cal: gen_split(1, sizes.n_cal.unwrap_or(1000))?,
        test: gen_split(2, sizes.n_test.unwrap_or(1000))?,
    })
}

/// Smooth random-field basis on the lat/lon grid: separable latitudinal
/// cosine modes times longitudinal sin/cos modes, with a `sin θ` taper on
/// every longitude-dependent mode so all longitudes agree at the poles.
/// Mode `(l, m)` has total degree `ℓ = l + μ(m)` and coefficient standard
/// deviation `(1+ℓ)⁻²`; the steep decay keeps the per-degree energy
/// summable despite the growing mode multiplicity, so the field is smooth
/// and a modest number of principal directions carries almost all of its
/// variance.
pub(crate) struct SphereBasis {
    rows: Vec<Vec<f64>>,
    coeff_sd: Vec<f64>,
}

pub(crate) fn sphere_basis(grid: &SharedGrid, n_lat_modes: usize, n_lon_modes: usize) -> SphereBasis {
    let p = grid.len();
    let mut rows = Vec::with_capacity(n_lat_modes * n_lon_modes);
    let mut coeff_sd = Vec::with_capacity(n_lat_modes * n_lon_modes);
    for l in 0..n_lat_modes {
        for m in 0..n_lon_modes {
            let mu = m.div_ceil(2);
            let mut row = Vec::with_capacity(p);
            for i in 0..p {
                let pt = grid.point(i);
                let theta = (90.0 - pt[0]).to_radians(); // colatitude
                let phi = pt[1].to_radians();
                let lat_part = (l as f64 * theta).cos();
                let lon_part = if m == 0 {
                    1.0
                } else if m % 2 == 1 {
                    (mu as f64 * phi).sin()
                } else {
                    (mu as f64 * phi).cos()
                };
                let taper = if mu >= 1 { theta.sin() } else { 1.0 };
                row.push(lat_part * lon_part * taper);
            }
            rows.push(row);
            let degree = (l + mu) as f64;
            coeff_sd.push(1.0 / ((1.0 + degree) * (1.0 + degree)));
        }
    }
    SphereBasis { rows, coeff_sd }
}

/// Mean field at time `t`: latitude-only `2 sin(t) sin(2θ)`, zero at poles
/// and antisymmetric across the equator.
pub(crate) fn mean_field_sphere(t: f64, grid: &SharedGrid) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let theta = (90.0 - grid.point(i)[0]).to_radians();
            2.0 * t.sin() * (2.0 * theta).sin()
        })
        .collect()
}

pub(crate) fn sphere_sample(
    t: f64,
    grid: &SharedGrid,
    basis: &SphereBasis,
    rng: &mut ChaCha12Rng,
) -> Vec<f64> {
    let mut g = mean_field_sphere(t, grid);
    let st = sigma_t(t);
    for (row, sd) in basis.rows.iter().zip(&basis.coeff_sd) {
        let c: f64 = st * sd * rng.sample::<f64, _>(StandardNormal);
        for (gv, bv) in g.iter_mut().zip(row) {
            *gv += c * bv;
        }
    }
    g
}

/// 2D spherical autoregression on a lat/lon grid, paired as `(g_{t-1}, g_t)`
/// like the 1D case.
pub fn gen_ar_sphere2d(sizes: &GenSizes, seed: u64) -> Result<SynthDataset> {
    let grid = Grid::lat_lon(sizes.n_lat, sizes.n_lon);
    let basis = sphere_basis(&grid, 16, 32);
    let two_pi = 2.0 * std::f64::consts::PI;
    let gen_split = |split: u64, n_pairs: usize| -> Result<PairedSet> {
        let n_obs = n_pairs + 1;
        if n_obs < 3 {
            return Err(LsciError::InvalidConfig(
                "autoregressive splits need at least 3 observations".into(),
            ));
        }
        let mut series = Vec::with_capacity(n_obs);
        let mut ts = Vec::with_capacity(n_obs);
        for s in 0..n_obs {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed2(seed, split, s as u64));
            let t = -two_pi + 2.0 * two_pi * s as f64 / (n_obs as f64 - 1.0);
            series.push(FunctionSample::new(
                grid.clone(),
                sphere_sample(t, &grid, &basis, &mut rng),
            )?);
            ts.push(t);
        }
        let inputs = series[..n_obs - 1].to_vec();
        let outputs = series[1..].to_vec();
        let out_ts: Vec<f64> = ts[1..].to_vec();
        let sigma: Vec<f64> = out_ts.iter().map(|&t| sigma_t(t)).collect();
        Ok(PairedSet {
            inputs: FunctionSet::new(grid.clone(), inputs)?.with_labels(out_ts.clone())?,
            outputs: FunctionSet::new(grid.clone(), outputs)?.with_labels(out_ts)?,
            sigma,
        })
    };
    Ok(SynthDataset {
        task: SynthTask::ArSphere2D,
        grid: grid.clone(),
        train: gen_split(0, sizes.n_train.unwrap_or(1000))?,
        cal: gen_split(1, sizes.n_cal.unwrap_or(1000))?,
        test: gen_split(2, sizes.n_test.unwrap_or(1000))?,
    })
}

/// Generate the dataset for a task.
pub fn generate(task: SynthTask, sizes: &GenSizes, seed: u64) -> Result<SynthDataset> {
    match task {
        SynthTask::Reg1D => gen_reg1d(sizes, seed),
        SynthTask::Ar1D => gen_ar1d(sizes, seed),
        SynthTask::ArSphere2D => gen_ar_sphere2d(sizes, seed),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetMeta {
    task: String,
    seed: u64,
    n_train: usize,
    n_cal: usize,
    n_test: usize,
}

/// Write a dataset directory: grid header, per-split input/output CSVs,
/// per-split noise scales, and a metadata file.
pub fn write_dataset(dir: &Path, ds: &SynthDataset, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    io::write_grid_json(&dir.join("grid.json"), &ds.grid)?;
    for (name, split) in [("train", &ds.train), ("cal", &ds.cal), ("test", &ds.test)] {
        io::write_function_set_csv(&dir.join(format!("{name}_inputs.csv")), &split.inputs)?;
        io::write_function_set_csv(&dir.join(format!("{name}_outputs.csv")), &split.outputs)?;
        io::write_scalar_csv(
            &dir.join(format!("sigma_{name}.csv")),
            "true_sigma",
            &split.sigma,
        )?;
    }
    let meta = DatasetMeta {
        task: ds.task.name().to_string(),
        seed,
        n_train: ds.train.len(),
        n_cal: ds.cal.len(),
        n_test: ds.test.len(),
    };
    let text = serde_json::to_string_pretty(&meta)?;
    std::fs::write(dir.join("meta.json"), text + "\n")?;
    Ok(())
}

/// Read a dataset directory written by [`write_dataset`].
pub fn read_dataset(dir: &Path) -> Result<SynthDataset> {
    let grid = io::read_grid_json(&dir.join("grid.json"))?;
    let meta: DatasetMeta =
        serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
    let task = SynthTask::parse(&meta.task)?;
    let read_split = |name: &str| -> Result<PairedSet> {
        let inputs =
            io::read_function_set_csv(&dir.join(format!("{name}_inputs.csv")), grid.clone())?;
        let outputs =
            io::read_function_set_csv(&dir.join(format!("{name}_outputs.csv")), grid.clone())?;
        let sigma = io::read_scalar_csv(&dir.join(format!("sigma_{name}.csv")))?;
        if inputs.len() != outputs.len() || inputs.len() != sigma.len() {
            return Err(LsciError::ShapeMismatch(format!(
                "split {name}: {} inputs, {} outputs, {} sigmas",
                inputs.len(),
                outputs.len(),
                sigma.len()
            )));
        }
        Ok(PairedSet {
            inputs,
            outputs,
            sigma,
        })
    };
    let train = read_split("train")?;
    let cal = read_split("cal")?;
    let test = read_split("test")?;
    Ok(SynthDataset {
        task,
        grid,
        train,
        cal,
        test,
    })
}
