//! Uniform space-time meshes, cell-averaged density fields and the standard
//! initial traffic profiles.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Slack used when snapping floating-point ratios onto integer grid indices.
pub(crate) const SNAP_EPS: f64 = 1e-9;

/// Uniform finite-volume mesh on `[x_min, x_max]` with constant time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub n_cells: usize,
    pub dt: f64,
    pub t_end: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, dx: f64, dt: f64, t_end: f64) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(invalid(format!("empty domain [{x_min}, {x_max}]")));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(invalid(format!("cell width must be positive, got {dx}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(invalid(format!("final time must be non-negative, got {t_end}")));
        }
        let n_cells = ((x_max - x_min) / dx).round() as usize;
        if n_cells < 1 {
            return Err(invalid("domain shorter than one cell"));
        }
        Ok(Self { x_min, x_max, dx, n_cells, dt, t_end })
    }

    /// Builds a grid whose time step is the largest `dt <= max_ratio * dx` that
    /// divides `t_end` into a whole number of steps.
    pub fn with_max_ratio(x_min: f64, x_max: f64, dx: f64, t_end: f64, max_ratio: f64) -> Result<Self> {
        if !(max_ratio > 0.0) {
            return Err(invalid(format!("max ratio must be positive, got {max_ratio}")));
        }
        let dt_max = max_ratio * dx;
        let dt = if t_end > 0.0 { t_end / (t_end / dt_max - SNAP_EPS).ceil().max(1.0) } else { dt_max };
        Self::new(x_min, x_max, dx, dt, t_end)
    }

    /// Returns a copy with a different time step.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(self.x_min, self.x_max, self.dx, dt, self.t_end)
    }

    /// Returns a copy with a different final time.
    pub fn with_t_end(&self, t_end: f64) -> Result<Self> {
        Self::new(self.x_min, self.x_max, self.dx, self.dt, t_end)
    }

    pub fn lambda(&self) -> f64 {
        self.dt / self.dx
    }

    /// Number of time steps `N_T = floor(T / dt)`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt + SNAP_EPS).floor() as usize
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Index of the grid time nearest to `t`, clamped to `[0, N_T]`.
    pub fn snap_time(&self, t: f64) -> usize {
        let n = (t / self.dt).round();
        if n <= 0.0 {
            0
        } else {
            (n as usize).min(self.n_steps())
        }
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|j| self.center(j)).collect()
    }

    /// Right end of the last cell (may differ from `x_max` by rounding of `n_cells`).
    pub fn x_right(&self) -> f64 {
        self.x_min + self.n_cells as f64 * self.dx
    }

    pub(crate) fn same_space(&self, other: &Grid1D) -> bool {
        self.n_cells == other.n_cells && self.dx == other.dx && self.x_min == other.x_min
    }
}

/// Cell-averaged density at one time instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DensityField {
    pub fn new(grid: Grid1D, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_cells {
            return Err(Error::GridMismatch(format!("{} values for {} cells", values.len(), grid.n_cells)));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite density value {bad}")));
        }
        Ok(Self { grid, values, time })
    }

    pub fn constant(grid: Grid1D, value: f64) -> Self {
        Self { grid, values: vec![value; grid.n_cells], time: 0.0 }
    }

    /// Discrete L¹ norm `Σ |ρ_j| dx`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.dx
    }

    /// Total mass `Σ ρ_j dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx
    }

    /// Total variation `Σ |ρ_{j+1} − ρ_j|`.
    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn l1_distance(&self, other: &DensityField) -> Result<f64> {
        if !self.grid.same_space(&other.grid) {
            return Err(Error::GridMismatch("fields live on different meshes".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.grid.dx)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True iff every value lies in `[0, rho_max]`.
    pub fn within_bounds(&self, rho_max: f64) -> bool {
        self.values.iter().all(|&v| (0.0..=rho_max).contains(&v))
    }
}

/// Initial density profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialProfile {
    /// 0.5 on [1/3, 2/3], 0.2 elsewhere.
    RhoLow,
    /// 0.9 on [0, 2], 0.2 elsewhere.
    RhoHigh,
    Constant(f64),
    /// Piecewise-constant blocks `(a, b, value)` over a background level.
    Blocks {
        background: f64,
        blocks: Vec<(f64, f64, f64)>,
    },
    /// Point samples `(x, rho)`, interpolated linearly at cell centres.
    Samples {
        x: Vec<f64>,
        rho: Vec<f64>,
    },
}

/// `(from, to, value)` piece on top of a background level.
type Block = (f64, f64, f64);

impl InitialProfile {
    fn as_blocks(&self) -> Option<(f64, Vec<Block>)> {
        match self {
            InitialProfile::RhoLow => Some((0.2, vec![(1.0 / 3.0, 2.0 / 3.0, 0.5)])),
            InitialProfile::RhoHigh => Some((0.2, vec![(0.0, 2.0, 0.9)])),
            InitialProfile::Constant(c) => Some((*c, vec![])),
            InitialProfile::Blocks { background, blocks } => Some((*background, blocks.clone())),
            InitialProfile::Samples { .. } => None,
        }
    }

    /// Pointwise evaluation (right-continuous at block edges).
    pub fn value_at(&self, x: f64) -> f64 {
        match self.as_blocks() {
            Some((background, blocks)) => {
                blocks.iter().rev().find(|(a, b, _)| x >= *a && x < *b).map_or(background, |b| b.2)
            }
            None => match self {
                InitialProfile::Samples { x: xs, rho } => interpolate(xs, rho, x),
                _ => unreachable!(),
            },
        }
    }

    /// Cell averages on `grid`; exact for block profiles.
    pub fn discretize(&self, grid: &Grid1D) -> Result<DensityField> {
        let values = match self.as_blocks() {
            Some((background, blocks)) => (0..grid.n_cells)
                .map(|j| {
                    let lo = grid.x_min + j as f64 * grid.dx;
                    let hi = lo + grid.dx;
                    // blocks are assumed disjoint
                    let mut partial = 0.0;
                    let mut full = None;
                    for &(a, b, value) in &blocks {
                        if lo >= a && hi <= b {
                            full = Some(value);
                            continue;
                        }
                        let overlap = (hi.min(b) - lo.max(a)).max(0.0);
                        if overlap > 0.0 {
                            partial += (overlap / grid.dx).min(1.0) * (value - background);
                        }
                    }
                    full.unwrap_or(background + partial)
                })
                .collect(),
            None => grid.centers().into_iter().map(|x| self.value_at(x)).collect(),
        };
        DensityField::new(*grid, values, 0.0)
    }

    /// Default simulation window for the named profiles.
    pub fn default_domain(&self) -> (f64, f64) {
        match self {
            InitialProfile::RhoLow => (-0.5, 2.5),
            InitialProfile::RhoHigh => (-1.0, 5.0),
            InitialProfile::Samples { x, .. } if x.len() >= 2 => (x[0], x[x.len() - 1]),
            _ => (0.0, 1.0),
        }
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let i = xs.partition_point(|&p| p <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let s = (x - x0) / (x1 - x0);
    ys[i - 1] + s * (ys[i] - ys[i - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_count_rounds() {
        let g = Grid1D::new(0.0, 1.0, 0.1, 0.05, 1.0).unwrap();
        assert_eq!(g.n_cells, 10);
        assert_eq!(g.n_steps(), 20);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid1D::new(0.0, 1.0, 0.0, 0.1, 1.0).is_err());
        assert!(Grid1D::new(0.0, 1.0, 0.1, -0.1, 1.0).is_err());
        assert!(Grid1D::new(1.0, 0.0, 0.1, 0.1, 1.0).is_err());
        assert!(Grid1D::new(0.0, 0.01, 0.1, 0.1, 1.0).is_err());
    }

    #[test]
    fn max_ratio_divides_final_time() {
        let g = Grid1D::with_max_ratio(0.0, 1.0, 0.01, 1.0, 0.6).unwrap();
        assert!(g.lambda() <= 0.6);
        assert_eq!(g.n_steps(), 167);
        assert!((g.time(g.n_steps()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rho_low_cell_averages() {
        let g = Grid1D::new(0.0, 1.0, 0.1, 0.01, 1.0).unwrap();
        let f = InitialProfile::RhoLow.discretize(&g).unwrap();
        // cell [0.3, 0.4) overlaps [1/3, 2/3] over 0.4 - 1/3
        let expected = 0.2 + (0.4 - 1.0 / 3.0) / 0.1 * 0.3;
        assert!((f.values[3] - expected).abs() < 1e-14);
        assert_eq!(f.values[4], 0.5);
        assert_eq!(f.values[0], 0.2);
        let exact_mass = 0.2 * 1.0 + 0.3 / 3.0;
        assert!((f.mass() - exact_mass).abs() < 1e-14);
    }

    #[test]
    fn norms() {
        let g = Grid1D::new(0.0, 0.4, 0.1, 0.01, 1.0).unwrap();
        let f = DensityField::new(g, vec![0.0, 1.0, 0.5, 0.5], 0.0).unwrap();
        assert!((f.total_variation() - 1.5).abs() < 1e-15);
        assert!((f.l1_norm() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn samples_interpolate() {
        let p = InitialProfile::Samples { x: vec![0.0, 1.0], rho: vec![0.0, 1.0] };
        assert!((p.value_at(0.25) - 0.25).abs() < 1e-15);
        assert_eq!(p.value_at(-3.0), 0.0);
        assert_eq!(p.value_at(3.0), 1.0);
    }
}
