//! Discretization grids with quadrature weights.
//!
//! Every function in this crate lives on a fixed [`Grid`]: an ordered list of
//! domain points plus per-point quadrature weights that sum to the measure of
//! the domain. Weighted sums over grid values stand in for integrals.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{LsciError, Result};

/// Domain kind of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Points on the unit interval `[0, 1]`.
    Interval1D,
    /// Latitude/longitude pairs in degrees, row-major latitude-then-longitude.
    LatLon2D,
}

impl GridKind {
    /// Coordinates per point.
    pub fn dim(self) -> usize {
        match self {
            GridKind::Interval1D => 1,
            GridKind::LatLon2D => 2,
        }
    }
}

/// A fixed discretization of the domain.
///
/// Invariants: 1D points strictly increasing, weights all positive, and
/// `|points| == |cell_weights|`. Grids are immutable and shared via
/// [`SharedGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    kind: GridKind,
    /// Flattened coordinates, `dim` entries per point.
    coords: Vec<f64>,
    cell_weights: Vec<f64>,
}

/// Grids are shared by handle; all containers referencing the same grid hold
/// the same `Arc`.
pub type SharedGrid = Arc<Grid>;

impl Grid {
    /// Uniform midpoint grid of `n` points on `[0, 1]` with equal weights
    /// `1/n` (weights sum to the unit domain measure).
    pub fn uniform_1d(n: usize) -> SharedGrid {
        assert!(n > 0, "grid needs at least one point");
        let coords = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let w = 1.0 / n as f64;
        Arc::new(Grid {
            kind: GridKind::Interval1D,
            coords,
            cell_weights: vec![w; n],
        })
    }

    /// 1D grid from explicit points and weights.
    pub fn from_points_1d(points: Vec<f64>, cell_weights: Vec<f64>) -> Result<SharedGrid> {
        if points.is_empty() || points.len() != cell_weights.len() {
            return Err(LsciError::ShapeMismatch(format!(
                "{} points vs {} weights",
                points.len(),
                cell_weights.len()
            )));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LsciError::InvalidConfig(
                "1D grid points must be strictly increasing".into(),
            ));
        }
        if cell_weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(LsciError::InvalidConfig(
                "cell weights must be finite and positive".into(),
            ));
        }
        Ok(Arc::new(Grid {
            kind: GridKind::Interval1D,
            coords: points,
            cell_weights,
        }))
    }

    /// Equiangular latitude/longitude grid with midpoint rows (no exact
    /// poles) and weights proportional to `cos(latitude)`, normalized to
    /// sum to 1.
    pub fn lat_lon(n_lat: usize, n_lon: usize) -> SharedGrid {
        assert!(n_lat > 0 && n_lon > 0, "grid needs at least one point");
        let mut coords = Vec::with_capacity(2 * n_lat * n_lon);
        let mut weights = Vec::with_capacity(n_lat * n_lon);
        for i in 0..n_lat {
            let lat = -90.0 + (i as f64 + 0.5) * 180.0 / n_lat as f64;
            let w = lat.to_radians().cos();
            for j in 0..n_lon {
                let lon = -180.0 + (j as f64 + 0.5) * 360.0 / n_lon as f64;
                coords.push(lat);
                coords.push(lon);
                weights.push(w);
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Arc::new(Grid {
            kind: GridKind::LatLon2D,
            coords,
            cell_weights: weights,
        })
    }

    /// Rebuild a shared grid from parts (used by deserialization).
    pub fn from_parts(kind: GridKind, coords: Vec<f64>, cell_weights: Vec<f64>) -> Result<SharedGrid> {
        let dim = kind.dim();
        if coords.len() != cell_weights.len() * dim {
            return Err(LsciError::ShapeMismatch(format!(
                "{} coordinates vs {} weights (dim {})",
                coords.len(),
                cell_weights.len(),
                dim
            )));
        }
        if cell_weights.is_empty() {
            return Err(LsciError::InvalidConfig("empty grid".into()));
        }
        if cell_weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(LsciError::InvalidConfig(
                "cell weights must be finite and positive".into(),
            ));
        }
        Ok(Arc::new(Grid {
            kind,
            coords,
            cell_weights,
        }))
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.cell_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_weights.is_empty()
    }

    /// Coordinates of point `i` (`dim` entries).
    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.kind.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    /// Flattened coordinates, `dim` entries per point.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.cell_weights
    }

    /// Total measure of the domain (sum of cell weights).
    pub fn measure(&self) -> f64 {
        self.cell_weights.iter().sum()
    }

    /// Lattice shape for 2D grids: `(n_lat, n_lon)`.
    pub fn lat_lon_shape(&self) -> Option<(usize, usize)> {
        if self.kind != GridKind::LatLon2D {
            return None;
        }
        let first_lat = self.coords[0];
        let n_lon = (0..self.len())
            .take_while(|&i| self.point(i)[0] == first_lat)
            .count();
        Some((self.len() / n_lon, n_lon))
    }
}

/// Cheap compatibility check: same handle or structurally equal.
pub fn same_grid(a: &SharedGrid, b: &SharedGrid) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Error helper asserting two containers share a grid.
pub fn check_same_grid(a: &SharedGrid, b: &SharedGrid, what: &str) -> Result<()> {
    if same_grid(a, b) {
        Ok(())
    } else {
        Err(LsciError::GridMismatch(format!(
            "{what}: {} vs {} points",
            a.len(),
            b.len()
        )))
    }
}
