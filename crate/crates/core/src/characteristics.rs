//! Forward characteristics `dX/dt = V(t, X)` of sNV and EsNV solutions,
//! characteristic Monte Carlo averages and the ℓ¹-bias study.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::godunov::{cfl_limit, MeanVelocity, SolveOptions, SolveResult, Solver};
use crate::kernel::{discretize_kernel, Kernel};
use crate::mesh::{Grid1D, InitialProfile};
use crate::montecarlo::par_map_indexed;
use crate::noise::{sample_noise, steps_to_cover, NoiseKind, NoiseParams};
use crate::rng::SeedRecord;
use crate::velocity::VelocityModel;

/// Relative tolerance when matching time stamps.
const STAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicPath {
    pub t0: f64,
    pub x0: f64,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// Set when the particle left the grid before the final time.
    pub truncated: bool,
}

impl CharacteristicPath {
    pub fn final_position(&self) -> f64 {
        *self.positions.last().expect("a path holds at least its start point")
    }

    fn stamp_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= STAMP_TOL * t.abs().max(1.0))
    }

    fn same_stamps(&self, other: &CharacteristicPath) -> bool {
        self.t0 == other.t0 && self.x0 == other.x0 && self.times == other.times
    }
}

/// `V(x)` from cell-centre velocities by linear interpolation, held constant
/// beyond the outermost centres.
pub fn interpolate_velocity(grid: &Grid1D, v: &[f64], x: f64) -> f64 {
    let s = (x - grid.x_min) / grid.dx - 0.5;
    let last = v.len() - 1;
    if s <= 0.0 {
        return v[0];
    }
    if s >= last as f64 {
        return v[last];
    }
    let j = s.floor() as usize;
    let theta = s - j as f64;
    (1.0 - theta) * v[j] + theta * v[j + 1]
}

/// Explicit Euler trace `X^{n+1} = X^n + Δt V(tⁿ, Xⁿ)` through the velocity
/// fields recorded by a solve. `t0` is snapped to the solver's time grid.
pub fn trace_characteristic(result: &SolveResult, t0: f64, x0: f64) -> Result<CharacteristicPath> {
    let velocities = result.velocities.as_ref().ok_or(Error::MissingVelocity)?;
    let grid = &result.grid;
    let n_steps = velocities.len();
    let t_end = n_steps as f64 * grid.dt;
    if !(t0 >= -STAMP_TOL && t0 <= t_end + 0.5 * grid.dt) {
        return Err(invalid(format!("start time {t0} outside [0, {t_end}]")));
    }
    if !(x0 >= grid.x_min && x0 <= grid.x_right()) {
        return Err(invalid(format!("start point {x0} outside [{}, {}]", grid.x_min, grid.x_right())));
    }
    let n0 = ((t0 / grid.dt).round().max(0.0) as usize).min(n_steps);
    let mut times = vec![grid.time(n0)];
    let mut positions = vec![x0];
    let mut x = x0;
    let mut truncated = false;
    for (n, v) in velocities.iter().enumerate().skip(n0) {
        x += grid.dt * interpolate_velocity(grid, v, x);
        if x > grid.x_right() {
            truncated = true;
            break;
        }
        times.push(grid.time(n + 1));
        positions.push(x);
    }
    Ok(CharacteristicPath { t0: grid.time(n0), x0, times, positions, truncated })
}

/// Pointwise mean `X̄^M = (1/M) Σ X^{(k)}` in the given order.
pub fn mc_characteristic_average(paths: &[CharacteristicPath]) -> Result<CharacteristicPath> {
    let first = paths.first().ok_or_else(|| invalid("no paths to average"))?;
    if let Some(bad) = paths.iter().position(|p| !p.same_stamps(first)) {
        return Err(Error::StampMismatch(format!("path {bad} differs in start point or time stamps from path 0")));
    }
    let mut sum = vec![0.0; first.positions.len()];
    for p in paths {
        for (s, x) in sum.iter_mut().zip(&p.positions) {
            *s += x;
        }
    }
    let m = paths.len() as f64;
    Ok(CharacteristicPath {
        t0: first.t0,
        x0: first.x0,
        times: first.times.clone(),
        positions: sum.into_iter().map(|s| s / m).collect(),
        truncated: paths.iter().any(|p| p.truncated),
    })
}

/// `|X̄^M(t) − X_{m̄}(t)|` at the shared stamp `t_eval`.
pub fn l1_bias(avg: &CharacteristicPath, esnv_path: &CharacteristicPath, t_eval: f64) -> Result<f64> {
    if !avg.same_stamps(esnv_path) {
        return Err(Error::StampMismatch("average and EsNV path differ in start point or time stamps".into()));
    }
    let i = avg.stamp_index(t_eval).ok_or_else(|| Error::StampMismatch(format!("no time stamp at t = {t_eval}")))?;
    Ok((avg.positions[i] - esnv_path.positions[i]).abs())
}

/// Configuration of the ℓ¹-bias study over sample counts `M` and time steps
/// `Δt_i = Δt₀ / 2^i`, where `Δt₀` is the largest CFL step dividing `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasStudyConfig {
    pub profile: InitialProfile,
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub t_end: f64,
    pub eta: f64,
    pub tau: f64,
    pub alpha: f64,
    pub sigma: f64,
    /// Nested sample counts, increasing.
    pub m_values: Vec<usize>,
    /// Number of halvings of `Δt₀`; `3` gives `Δt₀, Δt₀/2, Δt₀/4`.
    pub dt_levels: usize,
    /// `(t₀, x₀)` start points.
    pub start_points: Vec<(f64, f64)>,
    pub density_nodes: usize,
    pub master_seed: u64,
    pub threads: Option<usize>,
}

impl BiasStudyConfig {
    /// `ρ_high`, concave kernel, Jacobi noise (α = 4, σ = 1, τ = 0.5) at
    /// `dx = 1e−2`, `T = 2`, with 15 start points at `t₀ = 0`.
    pub fn desk(eta: f64) -> Self {
        let profile = InitialProfile::RhoHigh;
        let (x_min, x_max) = profile.default_domain();
        Self {
            profile,
            x_min,
            x_max,
            dx: 1e-2,
            t_end: 2.0,
            eta,
            tau: 0.5,
            alpha: 4.0,
            sigma: 1.0,
            m_values: vec![50, 200, 800],
            dt_levels: 3,
            start_points: default_start_points(),
            density_nodes: crate::noise_density::DEFAULT_NODES,
            master_seed: 2024,
            threads: None,
        }
    }
}

/// Fifteen equally spaced `x₀ ∈ [−0.8, 2]` at `t₀ = 0`, spanning the jam.
pub fn default_start_points() -> Vec<(f64, f64)> {
    (0..15).map(|i| (0.0, -0.8 + 0.2 * i as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasEntry {
    pub m: usize,
    pub dt: f64,
    pub t0: f64,
    pub x0: f64,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasStudyResult {
    pub m_values: Vec<usize>,
    pub dt_values: Vec<f64>,
    pub start_points: Vec<(f64, f64)>,
    pub t_eval: f64,
    pub entries: Vec<BiasEntry>,
    /// `terminal[i][s][k]`: `X^{(k)}(t_eval)` at step size `i`, start point `s`.
    pub terminal: Vec<Vec<Vec<f64>>>,
    /// `esnv_terminal[i][s]`: `X_{m̄}(t_eval)`.
    pub esnv_terminal: Vec<Vec<f64>>,
}

impl BiasStudyResult {
    /// Bias averaged over start points, using realizations `indices`.
    pub fn mean_bias_over(&self, dt_index: usize, indices: &[usize]) -> f64 {
        let per_start = &self.terminal[dt_index];
        let m = indices.len() as f64;
        let total: f64 = per_start
            .iter()
            .zip(&self.esnv_terminal[dt_index])
            .map(|(xs, esnv)| (indices.iter().map(|&k| xs[k]).sum::<f64>() / m - esnv).abs())
            .sum();
        total / per_start.len() as f64
    }

    /// Bias averaged over start points for the first `m` realizations.
    pub fn mean_bias(&self, dt_index: usize, m: usize) -> f64 {
        let idx: Vec<usize> = (0..m).collect();
        self.mean_bias_over(dt_index, &idx)
    }

    /// Standard error of the Monte Carlo mean position, averaged over start
    /// points, for the first `m` realizations.
    pub fn mean_standard_error(&self, dt_index: usize, m: usize) -> f64 {
        let per_start = &self.terminal[dt_index];
        let mf = m as f64;
        let total: f64 = per_start
            .iter()
            .map(|xs| {
                let mean = xs[..m].iter().sum::<f64>() / mf;
                let var = xs[..m].iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (mf - 1.0);
                (var / mf).sqrt()
            })
            .sum();
        total / per_start.len() as f64
    }

    /// `mean_bias` for every `(Δt, M)` pair; rows follow `dt_values`.
    pub fn bias_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.dt_values.len()).map(|i| self.m_values.iter().map(|&m| self.mean_bias(i, m)).collect()).collect()
    }
}

/// Paired bootstrap of `bias(M_hi) − bias(M_lo)` at step size `dt_index`.
/// Each replicate resamples `M_hi` realization indices with replacement and
/// uses its first `M_lo` draws for the smaller sample, preserving nesting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn bootstrap_m_difference(
    result: &BiasStudyResult,
    dt_index: usize,
    m_lo: usize,
    m_hi: usize,
    replicates: usize,
    seed: SeedRecord,
) -> Result<BootstrapInterval> {
    if !(m_lo < m_hi) || replicates < 2 {
        return Err(invalid("bootstrap needs m_lo < m_hi and at least two replicates"));
    }
    let estimate = result.mean_bias(dt_index, m_hi) - result.mean_bias(dt_index, m_lo);
    let mut rng = seed.rng();
    let mut diffs: Vec<f64> = (0..replicates)
        .map(|_| {
            let idx: Vec<usize> = (0..m_hi).map(|_| rng.random_range(0..m_hi)).collect();
            result.mean_bias_over(dt_index, &idx) - result.mean_bias_over(dt_index, &idx[..m_lo])
        })
        .collect();
    diffs.sort_by(f64::total_cmp);
    let q = |p: f64| diffs[((p * replicates as f64).ceil() as usize).clamp(1, replicates) - 1];
    Ok(BootstrapInterval { estimate, lower: q(0.025), upper: q(0.975) })
}

/// Runs the full `(M, Δt)` study. Every step size reuses the same noise path
/// per realization, sampled with `δ_R` equal to the finest step; the EsNV
/// reference uses the noise density propagated on that same chain.
pub fn bias_study(config: &BiasStudyConfig) -> Result<BiasStudyResult> {
    let m_values = config.m_values.clone();
    if m_values.is_empty() || m_values.windows(2).any(|w| w[0] >= w[1]) || m_values[0] == 0 {
        return Err(invalid("m_values must be positive and strictly increasing"));
    }
    if config.dt_levels == 0 || config.start_points.is_empty() {
        return Err(invalid("need at least one step size and one start point"));
    }
    let m_max = *m_values.last().expect("checked non-empty");
    let vm = VelocityModel::default();
    let weights = discretize_kernel(&Kernel::concave(config.eta)?, config.dx)?;
    let c_det = cfl_limit(&weights, &vm, config.tau);
    let base = Grid1D::with_max_ratio(config.x_min, config.x_max, config.dx, config.t_end, c_det)?;
    let dt_values: Vec<f64> = (0..config.dt_levels).map(|i| base.dt / (1u64 << i) as f64).collect();
    let dt_fine = *dt_values.last().expect("checked non-empty");
    let noise_params = NoiseParams {
        tau: config.tau,
        kind: NoiseKind::Jacobi { alpha: config.alpha, sigma: config.sigma },
        delta_r: dt_fine,
    };
    noise_params.validate()?;
    let solvers: Vec<Solver> = dt_values
        .iter()
        .map(|&dt| Solver::new(base.with_dt(dt)?, weights.clone(), vm.clone(), config.tau))
        .collect::<Result<_>>()?;
    let rho0 = config.profile.discretize(&base)?;
    let t_eval = base.n_steps() as f64 * base.dt;
    let opts = SolveOptions::default().with_velocity();

    let trace_all = |res: &SolveResult| -> Result<Vec<f64>> {
        config
            .start_points
            .iter()
            .map(|&(t0, x0)| {
                let path = trace_characteristic(res, t0, x0)?;
                if path.truncated {
                    return Err(invalid(format!("characteristic from ({t0}, {x0}) left the domain")));
                }
                Ok(path.final_position())
            })
            .collect()
    };

    let esnv_terminal: Vec<Vec<f64>> = solvers
        .iter()
        .map(|s| {
            let mean = MeanVelocity::Jacobi { params: noise_params, m: config.density_nodes };
            trace_all(&s.solve_esnv(&rho0, &mean, &opts)?)
        })
        .collect::<Result<_>>()?;

    let r_t = steps_to_cover(t_eval, dt_fine);
    // per realization: [dt level][start point]
    let per_realization: Vec<Vec<Vec<f64>>> = par_map_indexed(m_max, config.threads, |k| {
        let noise = sample_noise(&noise_params, r_t, SeedRecord::new(config.master_seed, k as u64))?;
        solvers.iter().map(|s| trace_all(&s.solve_snv(&rho0, &noise, &opts)?)).collect()
    })?;

    let n_starts = config.start_points.len();
    let terminal: Vec<Vec<Vec<f64>>> = (0..dt_values.len())
        .map(|i| (0..n_starts).map(|s| per_realization.iter().map(|r| r[i][s]).collect()).collect())
        .collect();

    let mut entries = Vec::with_capacity(dt_values.len() * m_values.len() * n_starts);
    for (i, &dt) in dt_values.iter().enumerate() {
        for &m in &m_values {
            for (s, &(t0, x0)) in config.start_points.iter().enumerate() {
                let mean = terminal[i][s][..m].iter().sum::<f64>() / m as f64;
                entries.push(BiasEntry { m, dt, t0, x0, bias: (mean - esnv_terminal[i][s]).abs() });
            }
        }
    }
    Ok(BiasStudyResult {
        m_values,
        dt_values,
        start_points: config.start_points.clone(),
        t_eval,
        entries,
        terminal,
        esnv_terminal,
    })
}
