//! Upwind Godunov schemes for the nonlocal traffic model: the stochastic sNV
//! scheme, its deterministic NV special case, the EsNV mean-value scheme and
//! the local solution operators `S_t^a`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::KernelWeights;
use crate::mesh::{DensityField, Grid1D, SNAP_EPS};
use crate::noise::{evaluate_noise_at_step, NoiseParams, NoiseRealization};
use crate::noise_density::{
    expected_velocity_whitenoise_closed_form, init_density, DensityPropagator, ExpectedVelocityLookup, NoiseDensityGrid,
};
use crate::velocity::{lookahead_velocity_ext, VelocityModel};

/// Relative slack on `λ ≤ c_det`, so that `dt = c_det · dx` itself is admissible.
const CFL_SLACK: f64 = 1e-12;

/// Deterministic CFL bound `c_det = 1/(γ₀ ‖v′‖ ρ_max + v_max + τ)` together
/// with the ratio `λ = dt/dx` actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CflBound {
    pub c_det: f64,
    pub lambda: f64,
}

impl CflBound {
    pub fn new(weights: &KernelWeights, vm: &VelocityModel, tau: f64, lambda: f64) -> Self {
        Self { c_det: cfl_limit(weights, vm, tau), lambda }
    }

    pub fn is_admissible(&self) -> bool {
        self.lambda <= self.c_det * (1.0 + CFL_SLACK)
    }

    pub fn check(&self, dx: f64) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(Error::Cfl { lambda: self.lambda, bound: self.c_det, admissible_dt: self.c_det * dx })
        }
    }
}

/// `c_det` for the discretised kernel.
pub fn cfl_limit(weights: &KernelWeights, vm: &VelocityModel, tau: f64) -> f64 {
    1.0 / (weights.gamma0() * vm.lip_v * vm.rho_max + vm.v_max + tau.abs())
}

/// Boundary fluxes of one time step: `F_in = ρ₀ V₋₁` through the left edge and
/// `F_out = ρ_{n−1} V_{n−1}` through the right edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxRecord {
    pub f_in: f64,
    pub f_out: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Snapshot times, snapped to the nearest grid time. Empty means `{0, T}`.
    pub output_times: Vec<f64>,
    /// Keep the cell velocities `V^n_j` of every step.
    pub record_velocity: bool,
    /// Keep a snapshot after every step (overrides `output_times`).
    pub all_steps: bool,
}

impl SolveOptions {
    pub fn at_times(times: &[f64]) -> Self {
        Self { output_times: times.to_vec(), ..Self::default() }
    }

    pub fn every_step() -> Self {
        Self { all_steps: true, ..Self::default() }
    }

    pub fn with_velocity(mut self) -> Self {
        self.record_velocity = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub grid: Grid1D,
    pub cfl: CflBound,
    pub snapshots: Vec<DensityField>,
    /// Step index of each snapshot.
    pub snapshot_steps: Vec<usize>,
    pub noise: Option<NoiseRealization>,
    /// `ε^n` used in step `n` (empty for EsNV).
    pub eps_used: Vec<f64>,
    pub mass_ledger: Vec<FluxRecord>,
    /// `Σ_j ρ^n_j dx` for `n = 0..=N_T`.
    pub mass: Vec<f64>,
    /// `V^n_j` for `n = 0..N_T`, if requested.
    pub velocities: Option<Vec<Vec<f64>>>,
}

impl SolveResult {
    pub fn final_snapshot(&self) -> &DensityField {
        self.snapshots.last().expect("a solve always records at least one snapshot")
    }

    pub fn n_steps(&self) -> usize {
        self.mass_ledger.len()
    }

    /// Snapshot recorded at the grid time nearest to `t`.
    pub fn snapshot_at(&self, t: f64) -> Option<&DensityField> {
        let n = self.grid.snap_time(t);
        self.snapshot_steps.iter().position(|&s| s == n).map(|i| &self.snapshots[i])
    }

    pub fn velocity_at_step(&self, n: usize) -> Result<&[f64]> {
        let v = self.velocities.as_ref().ok_or(Error::MissingVelocity)?;
        v.get(n).map(Vec::as_slice).ok_or_else(|| invalid(format!("no velocity field for step {n}")))
    }
}

/// One update `ρ_j − λ(ρ_j V_j − ρ_{j−1} V_{j−1})` given the velocities
/// `ext[0] = V₋₁, ext[j+1] = V_j`. Returns the new values and boundary fluxes.
fn upwind_update(values: &[f64], ext: &[f64], lambda: f64) -> (Vec<f64>, FluxRecord) {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    let mut flux_left = values[0] * ext[0];
    let f_in = flux_left;
    for j in 0..n {
        let flux_right = values[j] * ext[j + 1];
        out.push(values[j] - lambda * (flux_right - flux_left));
        flux_left = flux_right;
    }
    (out, FluxRecord { f_in, f_out: flux_left })
}

/// One sNV step with constant noise value `eps_n`. No CFL check is made here.
pub fn step_snv(
    rho: &DensityField,
    weights: &KernelWeights,
    eps_n: f64,
    vm: &VelocityModel,
    lambda: f64,
) -> DensityField {
    let ext = lookahead_velocity_ext(&rho.values, weights, |r| vm.perturbed_speed(r, eps_n));
    let (values, _) = upwind_update(&rho.values, &ext, lambda);
    DensityField { grid: rho.grid, values, time: rho.time + lambda * rho.grid.dx }
}

/// Source of the expected velocity `v̄(·, tⁿ)` in the EsNV scheme.
#[derive(Debug, Clone)]
pub enum MeanVelocity {
    /// Uniform noise on `[−τ, τ]`; uses the closed form at every step.
    WhiteNoise { tau: f64 },
    /// Jacobi noise; the density is propagated with step `δ_R` on `m` nodes.
    Jacobi { params: NoiseParams, m: usize },
    /// Precomputed densities `f̂_k` at times `k δ_R`.
    Densities { grids: Vec<NoiseDensityGrid>, delta_r: f64 },
}

impl MeanVelocity {
    pub fn tau(&self) -> f64 {
        match self {
            MeanVelocity::WhiteNoise { tau } => *tau,
            MeanVelocity::Jacobi { params, .. } => params.tau,
            MeanVelocity::Densities { grids, .. } => grids.first().map_or(0.0, |g| g.tau),
        }
    }
}

/// Density index `k_n = floor(tⁿ/δ_R)` in effect during step `n`.
fn density_index(n: usize, dt: f64, delta_r: f64) -> usize {
    (n as f64 * dt / delta_r + SNAP_EPS).floor() as usize
}

/// Finite-volume solver bound to a grid, a discretised kernel and a velocity
/// law. Construction enforces `λ ≤ c_det` for the noise bound `tau`.
#[derive(Debug, Clone)]
pub struct Solver {
    pub grid: Grid1D,
    pub weights: KernelWeights,
    pub vm: VelocityModel,
    pub tau: f64,
    pub cfl: CflBound,
}

impl Solver {
    pub fn new(grid: Grid1D, weights: KernelWeights, vm: VelocityModel, tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(invalid(format!("noise bound must be non-negative, got {tau}")));
        }
        if (weights.dx - grid.dx).abs() > SNAP_EPS * grid.dx {
            return Err(Error::GridMismatch(format!(
                "kernel weights built for dx = {} but grid has dx = {}",
                weights.dx, grid.dx
            )));
        }
        let cfl = CflBound::new(&weights, &vm, tau, grid.lambda());
        cfl.check(grid.dx)?;
        Ok(Self { grid, weights, vm, tau, cfl })
    }

    fn check_initial(&self, rho0: &DensityField) -> Result<()> {
        if !rho0.grid.same_space(&self.grid) {
            return Err(Error::GridMismatch("initial data lives on a different spatial grid".into()));
        }
        if !rho0.within_bounds(self.vm.rho_max) {
            return Err(invalid(format!(
                "initial data leaves [0, {}]: min {}, max {}",
                self.vm.rho_max,
                rho0.min(),
                rho0.max()
            )));
        }
        Ok(())
    }

    fn snapshot_steps(&self, opts: &SolveOptions, n_steps: usize) -> Result<Vec<usize>> {
        if opts.all_steps {
            return Ok((0..=n_steps).collect());
        }
        if opts.output_times.is_empty() {
            return Ok(if n_steps == 0 { vec![0] } else { vec![0, n_steps] });
        }
        let t_end = n_steps as f64 * self.grid.dt;
        let mut steps = Vec::with_capacity(opts.output_times.len());
        for &t in &opts.output_times {
            if !(t >= -SNAP_EPS && t <= t_end + 0.5 * self.grid.dt) {
                return Err(invalid(format!("output time {t} outside [0, {t_end}]")));
            }
            steps.push(((t / self.grid.dt).round().max(0.0) as usize).min(n_steps));
        }
        steps.sort_unstable();
        steps.dedup();
        Ok(steps)
    }

    /// Runs `n_steps` updates; `velocity(n, values)` returns `[V₋₁, V₀, …]`.
    fn march<F>(&self, rho0: &DensityField, n_steps: usize, opts: &SolveOptions, mut velocity: F) -> Result<SolveResult>
    where
        F: FnMut(usize, &[f64]) -> Result<Vec<f64>>,
    {
        self.check_initial(rho0)?;
        let steps = self.snapshot_steps(opts, n_steps)?;
        let dx = self.grid.dx;
        let lambda = self.grid.lambda();
        let t0 = rho0.time;
        let mut values = rho0.values.clone();
        let mut snapshots = Vec::with_capacity(steps.len());
        let mut next_snap = 0;
        let mut mass_ledger = Vec::with_capacity(n_steps);
        let mut mass = Vec::with_capacity(n_steps + 1);
        let mut velocities = opts.record_velocity.then(|| Vec::with_capacity(n_steps));
        let mass_of = |v: &[f64]| v.iter().sum::<f64>() * dx;

        mass.push(mass_of(&values));
        for n in 0..=n_steps {
            if next_snap < steps.len() && steps[next_snap] == n {
                snapshots.push(DensityField { grid: self.grid, values: values.clone(), time: t0 + self.grid.time(n) });
                next_snap += 1;
            }
            if n == n_steps {
                break;
            }
            let ext = velocity(n, &values)?;
            let (next, flux) = upwind_update(&values, &ext, lambda);
            if let Some(v) = velocities.as_mut() {
                v.push(ext[1..].to_vec());
            }
            values = next;
            mass_ledger.push(flux);
            mass.push(mass_of(&values));
        }
        Ok(SolveResult {
            grid: self.grid,
            cfl: self.cfl,
            snapshots,
            snapshot_steps: steps,
            noise: None,
            eps_used: Vec::new(),
            mass_ledger,
            mass,
            velocities,
        })
    }

    /// Deterministic NV scheme (`ε ≡ 0`).
    pub fn solve_nv(&self, rho0: &DensityField, opts: &SolveOptions) -> Result<SolveResult> {
        let vm = &self.vm;
        let w = &self.weights;
        let mut res = self.march(rho0, self.grid.n_steps(), opts, |_, v| {
            Ok(lookahead_velocity_ext(v, w, |r| vm.perturbed_speed(r, 0.0)))
        })?;
        res.eps_used = vec![0.0; res.n_steps()];
        Ok(res)
    }

    /// sNV scheme driven by `ε^n = noise(tⁿ)`.
    pub fn solve_snv(&self, rho0: &DensityField, noise: &NoiseRealization, opts: &SolveOptions) -> Result<SolveResult> {
        let bound = self.tau * (1.0 + CFL_SLACK);
        if noise.max_abs() > bound {
            return Err(invalid(format!(
                "noise path reaches |ε| = {} beyond the solver bound tau = {}",
                noise.max_abs(),
                self.tau
            )));
        }
        let n_steps = self.grid.n_steps();
        let eps: Vec<f64> =
            (0..n_steps).map(|n| evaluate_noise_at_step(noise, n, self.grid.dt)).collect::<Result<_>>()?;
        let vm = &self.vm;
        let w = &self.weights;
        let mut res = self.march(rho0, n_steps, opts, |n, v| {
            let e = eps[n];
            Ok(lookahead_velocity_ext(v, w, |r| vm.perturbed_speed(r, e)))
        })?;
        res.eps_used = eps;
        res.noise = Some(noise.clone());
        Ok(res)
    }

    /// EsNV scheme with `V̄_j = Σ_k γ_k v̄(ρ_{j+k+1}, tⁿ)`.
    pub fn solve_esnv(&self, rho0: &DensityField, mean: &MeanVelocity, opts: &SolveOptions) -> Result<SolveResult> {
        if mean.tau() > self.tau * (1.0 + CFL_SLACK) {
            return Err(invalid(format!("noise bound {} exceeds the solver bound {}", mean.tau(), self.tau)));
        }
        let vm = &self.vm;
        let w = &self.weights;
        let dt = self.grid.dt;
        let n_steps = self.grid.n_steps();
        match mean {
            MeanVelocity::WhiteNoise { tau } => {
                let tau = *tau;
                if !(tau > 0.0) {
                    return Err(invalid(format!("noise bound must be positive, got {tau}")));
                }
                self.march(rho0, n_steps, opts, |_, v| {
                    Ok(lookahead_velocity_ext(v, w, |r| expected_velocity_whitenoise_closed_form(r, tau, vm)))
                })
            }
            MeanVelocity::Jacobi { params, m } => {
                params.validate()?;
                let mut density = init_density(&NoiseDensityGrid::new(params.tau, *m)?);
                let prop = DensityPropagator::new(&density, params, params.delta_r)?;
                let mut lookup = ExpectedVelocityLookup::new(&density);
                self.march(rho0, n_steps, opts, |n, v| {
                    let k = density_index(n, dt, params.delta_r);
                    if density.time_index < k {
                        while density.time_index < k {
                            density = prop.step(&density);
                        }
                        lookup = ExpectedVelocityLookup::new(&density);
                    }
                    Ok(lookahead_velocity_ext(v, w, |r| lookup.at_density(r, vm)))
                })
            }
            MeanVelocity::Densities { grids, delta_r } => {
                let mut cached: Option<(usize, ExpectedVelocityLookup)> = None;
                self.march(rho0, n_steps, opts, |n, v| {
                    let k = density_index(n, dt, *delta_r);
                    if cached.as_ref().map(|c| c.0) != Some(k) {
                        let g = grids.get(k).ok_or(Error::MissingDensity(k))?;
                        cached = Some((k, ExpectedVelocityLookup::new(g)));
                    }
                    let lookup = &cached.as_ref().expect("set above").1;
                    Ok(lookahead_velocity_ext(v, w, |r| lookup.at_density(r, vm)))
                })
            }
        }
    }

    /// `S_t^a[ξ]`: evolution of `ξ` for duration `t` under the constant noise
    /// value `a`. `t` must be a whole number of time steps.
    pub fn local_solution_operator(&self, xi0: &DensityField, a: f64, t: f64) -> Result<DensityField> {
        if !(a.abs() <= self.vm.v_max) {
            return Err(invalid(format!("|a| = {} exceeds v_max = {}", a.abs(), self.vm.v_max)));
        }
        let cfl = CflBound::new(&self.weights, &self.vm, a, self.grid.lambda());
        cfl.check(self.grid.dx)?;
        let ratio = t / self.grid.dt;
        let n_steps = ratio.round();
        if !(t >= 0.0) || (ratio - n_steps).abs() > 1e-6 {
            return Err(invalid(format!("duration {t} is not a multiple of dt = {}", self.grid.dt)));
        }
        let vm = &self.vm;
        let w = &self.weights;
        let res = self.march(xi0, n_steps as usize, &SolveOptions::default(), |_, v| {
            Ok(lookahead_velocity_ext(v, w, |r| vm.perturbed_speed(r, a)))
        })?;
        Ok(res.final_snapshot().clone())
    }
}
