//! Forward propagation of the noise distribution on a Chebyshev grid over
//! `[−τ, τ]` and the expected-velocity quadrature built on it.
//!
//! The continuous density solves the Fokker–Planck equation
//! `∂ₜf = α∂ₐ(af) + ½σ²∂²ₐ((τ²−a²)f)`; we never discretise that PDE directly.
//! Instead each step pushes the grid density through the conditionally
//! Gaussian proposal of the acceptance-rejection Euler chain, renormalised
//! onto the grid so that rejected mass is redistributed inside `[−τ, τ]`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise::{NoiseKind, NoiseParams};
use crate::velocity::VelocityModel;

/// Default node count.
pub const DEFAULT_NODES: usize = 601;

/// Gaussian tails beyond this many standard deviations are dropped from the
/// transition kernel (their weight is below 1e-31).
const KERNEL_CUTOFF_SIGMAS: f64 = 12.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDensityGrid {
    pub tau: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub density: Vec<f64>,
    pub time_index: usize,
}

/// Chebyshev–Gauss–Lobatto nodes `a_j = −τ cos(πj/(M−1))` with midpoint cell
/// widths (half cells at the ends). `m` must be odd so that 0 is a node.
pub fn build_chebyshev_grid(tau: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    if m < 3 || m.is_multiple_of(2) {
        return Err(invalid(format!("node count must be odd and >= 3, got {m}")));
    }
    let mid = (m - 1) / 2;
    let mut nodes = vec![0.0; m];
    for j in 0..mid {
        // −τ cos(πj/(M−1)) written as a sine so the grid is exactly antisymmetric
        let a = -tau * (PI * (mid - j) as f64 / (m - 1) as f64).sin();
        nodes[j] = a;
        nodes[m - 1 - j] = -a;
    }
    nodes[0] = -tau;
    nodes[m - 1] = tau;

    let mut weights = vec![0.0; m];
    weights[0] = 0.5 * (nodes[1] - nodes[0]);
    weights[m - 1] = 0.5 * (nodes[m - 1] - nodes[m - 2]);
    for j in 1..m - 1 {
        weights[j] = 0.5 * (nodes[j + 1] - nodes[j - 1]);
    }
    Ok((nodes, weights))
}

impl NoiseDensityGrid {
    /// Grid with zero density; see [`init_density`].
    pub fn new(tau: f64, m: usize) -> Result<Self> {
        let (nodes, weights) = build_chebyshev_grid(tau, m)?;
        Ok(Self { tau, density: vec![0.0; m], nodes, weights, time_index: 0 })
    }

    /// Grid carrying the uniform density `1/(2τ)`.
    pub fn uniform(tau: f64, m: usize) -> Result<Self> {
        let mut g = Self::new(tau, m)?;
        g.density.fill(1.0 / (2.0 * tau));
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn zero_index(&self) -> usize {
        (self.nodes.len() - 1) / 2
    }

    pub fn mass(&self) -> f64 {
        self.density.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }

    /// `Σ a_j^p f_j w_j`.
    pub fn moment(&self, p: i32) -> f64 {
        self.nodes.iter().zip(&self.density).zip(&self.weights).map(|((a, f), w)| a.powi(p) * f * w).sum()
    }

    /// Cell boundaries: midpoints between nodes, with `±τ` at the ends.
    pub fn cell_edges(&self) -> Vec<f64> {
        let m = self.nodes.len();
        let mut edges = Vec::with_capacity(m + 1);
        edges.push(self.nodes[0]);
        for j in 0..m - 1 {
            edges.push(0.5 * (self.nodes[j] + self.nodes[j + 1]));
        }
        edges.push(self.nodes[m - 1]);
        edges
    }

    fn nearest_node(&self, a: f64) -> usize {
        let i = self.nodes.partition_point(|&x| x < a);
        if i == 0 {
            0
        } else if i == self.nodes.len() || a - self.nodes[i - 1] <= self.nodes[i] - a {
            i - 1
        } else {
            i
        }
    }

    /// Writes `a_j, w_j, f̂(a_j)` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a_j", "w_j", "f_hat"])?;
        for ((a, wt), f) in self.nodes.iter().zip(&self.weights).zip(&self.density) {
            w.write_record([a.to_string(), wt.to_string(), f.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Puts unit mass on the cell around `a = 0`.
pub fn init_density(grid: &NoiseDensityGrid) -> NoiseDensityGrid {
    let mut g = grid.clone();
    g.density.fill(0.0);
    let j0 = g.zero_index();
    g.density[j0] = 1.0 / g.weights[j0];
    g.time_index = 0;
    g
}

/// Sparse transition operator of one acceptance-rejection Euler step on the
/// grid. Row `i` holds `w_i φ(a_j; μ_i, σ_i²) / Σ_k φ(a_k; μ_i, σ_i²) w_k` for
/// `j` in a window around `μ_i`.
#[derive(Debug, Clone)]
pub struct DensityPropagator {
    rows: Vec<(usize, Vec<f64>)>,
    dt: f64,
}

impl DensityPropagator {
    pub fn new(grid: &NoiseDensityGrid, params: &NoiseParams, dt: f64) -> Result<Self> {
        let (alpha, sigma) = match params.kind {
            NoiseKind::Jacobi { alpha, sigma } => (alpha, sigma),
            NoiseKind::WhiteNoise => return Err(invalid("density propagation requires Jacobi parameters")),
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        let tau = grid.tau;
        let nodes = &grid.nodes;
        let weights = &grid.weights;
        let rows = nodes
            .iter()
            .zip(weights)
            .map(|(&a, &w_src)| {
                let mu = a * (1.0 - alpha * dt);
                let var = sigma * sigma * (tau * tau - a * a).max(0.0) * dt;
                let point_mass = |target: usize| (target, vec![w_src / weights[target]]);
                if var <= 0.0 {
                    return point_mass(grid.nearest_node(mu));
                }
                let sd = var.sqrt();
                let lo = nodes.partition_point(|&x| x < mu - KERNEL_CUTOFF_SIGMAS * sd);
                let hi = nodes.partition_point(|&x| x <= mu + KERNEL_CUTOFF_SIGMAS * sd);
                let phi: Vec<f64> = nodes[lo..hi].iter().map(|&x| (-(x - mu) * (x - mu) / (2.0 * var)).exp()).collect();
                let norm: f64 = phi.iter().zip(&weights[lo..hi]).map(|(p, w)| p * w).sum();
                if !(norm > 0.0 && norm.is_finite()) {
                    return point_mass(grid.nearest_node(mu));
                }
                (lo, phi.into_iter().map(|p| w_src * p / norm).collect())
            })
            .collect();
        Ok(Self { rows, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `f̂_{n+1}(a_j) = Σ_i f̂_n(a_i) T_ij`, accumulated in source order.
    pub fn step(&self, grid: &NoiseDensityGrid) -> NoiseDensityGrid {
        let mut next = vec![0.0; grid.density.len()];
        for (&f, (lo, row)) in grid.density.iter().zip(&self.rows) {
            if f == 0.0 {
                continue;
            }
            for (target, coeff) in next[*lo..*lo + row.len()].iter_mut().zip(row) {
                *target += f * coeff;
            }
        }
        NoiseDensityGrid {
            tau: grid.tau,
            nodes: grid.nodes.clone(),
            weights: grid.weights.clone(),
            density: next,
            time_index: grid.time_index + 1,
        }
    }
}

/// One propagation step of the grid density with time step `dt`.
pub fn propagate_density(grid: &NoiseDensityGrid, params: &NoiseParams, dt: f64) -> Result<NoiseDensityGrid> {
    Ok(DensityPropagator::new(grid, params, dt)?.step(grid))
}

/// Densities at steps `0..=steps` starting from the point mass at zero.
pub fn density_evolution(params: &NoiseParams, m: usize, dt: f64, steps: usize) -> Result<Vec<NoiseDensityGrid>> {
    let mut grid = init_density(&NoiseDensityGrid::new(params.tau, m)?);
    let prop = DensityPropagator::new(&grid, params, dt)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(grid.clone());
    for _ in 0..steps {
        grid = prop.step(&grid);
        out.push(grid.clone());
    }
    Ok(out)
}

/// `v̄(ρ) ≈ Σ_j max(0, v(ρ) + a_j) f̂(a_j) w_j`.
pub fn expected_velocity(grid: &NoiseDensityGrid, rho: f64, vm: &VelocityModel) -> f64 {
    let v = vm.speed(rho);
    grid.nodes.iter().zip(&grid.density).zip(&grid.weights).map(|((a, f), w)| (v + a).max(0.0) * f * w).sum()
}

/// Closed form of `E[max(0, v(ρ) + U)]`, `U ~ Uniform(−τ, τ)`:
/// `((τ+v)² − max(0, v−τ)²) / (4τ)`, which reduces to `v` when `v ≥ τ`.
pub fn expected_velocity_whitenoise_closed_form(rho: f64, tau: f64, vm: &VelocityModel) -> f64 {
    let v = vm.speed(rho);
    if v >= tau {
        return v;
    }
    let s = tau + v;
    s * s / (4.0 * tau)
}

/// Exact evaluator of the grid quadrature `u ↦ Σ_j max(0, u + a_j) f_j w_j`
/// through suffix sums, so that each evaluation costs one binary search.
#[derive(Debug, Clone)]
pub struct ExpectedVelocityLookup {
    nodes: Vec<f64>,
    /// `Σ_{i≥j} f_i w_i`
    mass_tail: Vec<f64>,
    /// `Σ_{i≥j} a_i f_i w_i`
    moment_tail: Vec<f64>,
}

impl ExpectedVelocityLookup {
    pub fn new(grid: &NoiseDensityGrid) -> Self {
        let m = grid.nodes.len();
        let mut mass_tail = vec![0.0; m + 1];
        let mut moment_tail = vec![0.0; m + 1];
        for j in (0..m).rev() {
            let p = grid.density[j] * grid.weights[j];
            mass_tail[j] = mass_tail[j + 1] + p;
            moment_tail[j] = moment_tail[j + 1] + grid.nodes[j] * p;
        }
        Self { nodes: grid.nodes.clone(), mass_tail, moment_tail }
    }

    /// Quadrature value at base speed `u`.
    #[inline]
    pub fn at_speed(&self, u: f64) -> f64 {
        // nodes with u + a_j > 0
        let j = self.nodes.partition_point(|&a| a <= -u);
        (u * self.mass_tail[j] + self.moment_tail[j]).max(0.0)
    }

    pub fn at_density(&self, rho: f64, vm: &VelocityModel) -> f64 {
        self.at_speed(vm.speed(rho))
    }
}
