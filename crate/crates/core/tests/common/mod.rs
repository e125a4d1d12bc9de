#![allow(dead_code)]

use snv_core::godunov::cfl_limit;
use snv_core::{discretize_kernel, DensityField, Grid1D, InitialProfile, Kernel, NoiseParams, Solver, VelocityModel};

/// Solver on the profile's default domain at the largest admissible step.
pub fn setup(profile: &InitialProfile, dx: f64, t_end: f64, tau: f64, eta: f64) -> (Solver, DensityField) {
    let (a, b) = profile.default_domain();
    let vm = VelocityModel::default();
    let weights = discretize_kernel(&Kernel::concave(eta).unwrap(), dx).unwrap();
    let c = cfl_limit(&weights, &vm, tau);
    let grid = Grid1D::with_max_ratio(a, b, dx, t_end, c).unwrap();
    let rho0 = profile.discretize(&grid).unwrap();
    (Solver::new(grid, weights, vm, tau).unwrap(), rho0)
}

pub fn jacobi(delta_r: f64) -> NoiseParams {
    NoiseParams::jacobi(0.5, 4.0, 1.0, delta_r).unwrap()
}

pub fn sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs
}

/// Nearest-rank quantile of an ascending slice.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let k = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}
