//! Quantitative checks on computed solutions: the stability estimate with
//! constants taken from the realized solution, ensemble statistics, and the
//! smoothing probe for Monte Carlo density means.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::godunov::SolveResult;
use crate::kernel::Kernel;
use crate::mesh::DensityField;
use crate::noise::NoiseRealization;
use crate::velocity::VelocityModel;

/// Levels reported by [`ensemble_stats`].
pub const QUANTILE_LEVELS: [f64; 3] = [0.05, 0.5, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `‖ρ₁(T) − ρ₂(T)‖_{L¹}`.
    pub l1_distance: f64,
    pub bound: f64,
    pub k_t: f64,
    pub k_t_v: f64,
    /// `∫₀ᵀ |γ₁ − γ₂| dt`.
    pub noise_l1: f64,
    /// `‖ρ₁(0) − ρ₂(0)‖_{L¹}`.
    pub initial_l1: f64,
    pub t_end: f64,
    pub sup_l1: f64,
    pub sup_bv: f64,
    pub satisfied: bool,
    pub note: String,
}

/// `∫_a^b |γ₁ − γ₂| dt` for two piecewise-constant noise paths, summed
/// exactly over the merged breakpoints.
pub fn noise_l1_distance(noise1: &NoiseRealization, noise2: &NoiseRealization, a: f64, b: f64) -> Result<f64> {
    if !(b >= a) {
        return Err(invalid(format!("empty interval [{a}, {b}]")));
    }
    let tol = 1e-9 * b.abs().max(1.0);
    if noise1.t_max() + noise1.delta_r < b - tol || noise2.t_max() + noise2.delta_r < b - tol {
        return Err(Error::NoiseOutOfRange { t: b, t_max: noise1.t_max().min(noise2.t_max()) });
    }
    let value = |n: &NoiseRealization, k: usize| n.values[k.min(n.r_t())];
    let (mut k1, mut k2) = ((a / noise1.delta_r).floor() as usize, (a / noise2.delta_r).floor() as usize);
    let mut t = a;
    let mut total = 0.0;
    while t < b {
        let e1 = (k1 + 1) as f64 * noise1.delta_r;
        let e2 = (k2 + 1) as f64 * noise2.delta_r;
        let next = e1.min(e2).min(b);
        total += (next - t) * (value(noise1, k1) - value(noise2, k2)).abs();
        if e1 <= next {
            k1 += 1;
        }
        if e2 <= next {
            k2 += 1;
        }
        t = next;
    }
    Ok(total)
}

/// Compares two solves of the same grid and model with the estimate
/// `‖ρ₁(T) − ρ₂(T)‖ ≤ e^{T K_v} (‖ρ₁(0) − ρ₂(0)‖ + K ∫|γ₁ − γ₂|)`, where
/// `K_v = ‖v′‖ (W(0)(2 sup‖ρ₁‖_{L¹} + sup‖ρ₁‖_{BV}) + ‖W′‖ sup‖ρ₁‖_{L¹})` and
/// `K = K_v/‖v′‖`, with the suprema taken over the recorded snapshots of `ρ₁`.
pub fn check_stability(
    rho1_run: &SolveResult,
    rho2_run: &SolveResult,
    noise1: &NoiseRealization,
    noise2: &NoiseRealization,
    vm: &VelocityModel,
    kernel: &Kernel,
) -> Result<StabilityReport> {
    if !rho1_run.grid.same_space(&rho2_run.grid) || rho1_run.grid.dt != rho2_run.grid.dt {
        return Err(Error::GridMismatch("stability check needs runs on the same grid".into()));
    }
    if rho1_run.snapshot_steps.first() != Some(&0) || rho2_run.snapshot_steps.first() != Some(&0) {
        return Err(invalid("both runs must record the initial snapshot"));
    }
    if rho1_run.snapshot_steps.last() != rho2_run.snapshot_steps.last() {
        return Err(Error::StampMismatch("runs end at different times".into()));
    }
    let (first1, last1) = (&rho1_run.snapshots[0], rho1_run.final_snapshot());
    let (first2, last2) = (&rho2_run.snapshots[0], rho2_run.final_snapshot());
    let t_end = last1.time - first1.time;
    let sup_l1 = rho1_run.snapshots.iter().map(DensityField::l1_norm).fold(0.0, f64::max);
    let sup_bv = rho1_run.snapshots.iter().map(DensityField::total_variation).fold(0.0, f64::max);
    let k_t_v = vm.lip_v * (kernel.w_at_0 * (2.0 * sup_l1 + sup_bv) + kernel.lip_w * sup_l1);
    let k_t = k_t_v / vm.lip_v;
    let noise_l1 = noise_l1_distance(noise1, noise2, first1.time, last1.time)?;
    let initial_l1 = first1.l1_distance(first2)?;
    let l1_distance = last1.l1_distance(last2)?;
    let bound = (t_end * k_t_v).exp() * (initial_l1 + k_t * noise_l1);
    Ok(StabilityReport {
        l1_distance,
        bound,
        k_t,
        k_t_v,
        noise_l1,
        initial_l1,
        t_end,
        sup_l1,
        sup_bv,
        satisfied: l1_distance <= bound,
        note: "constants computed from the realized solution; the a-priori constant C1 is not available in closed form"
            .into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean: DensityField,
    /// `(level, field)` for each entry of [`QUANTILE_LEVELS`].
    pub quantiles: Vec<(f64, DensityField)>,
    pub m: usize,
    /// Cellwise sample standard deviation.
    pub std: Vec<f64>,
    pub std_spatial_avg: f64,
}

impl EnsembleStats {
    pub fn quantile(&self, level: f64) -> Option<&DensityField> {
        self.quantiles.iter().find(|(l, _)| *l == level).map(|(_, f)| f)
    }
}

/// Nearest-rank quantile `sorted[⌈pM⌉ − 1]` of an ascending slice.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    let rank = ((p * m as f64).ceil() as usize).clamp(1, m);
    sorted[rank - 1]
}

/// Cellwise mean, nearest-rank quantiles and sample standard deviation of an
/// ensemble sharing grid and time.
pub fn ensemble_stats(fields: &[DensityField]) -> Result<EnsembleStats> {
    if fields.len() < 2 {
        return Err(invalid("ensemble statistics need at least two fields"));
    }
    let first = &fields[0];
    for (k, f) in fields.iter().enumerate() {
        if !f.grid.same_space(&first.grid) {
            return Err(Error::GridMismatch(format!("field {k} lives on a different grid")));
        }
        if (f.time - first.time).abs() > 1e-12 * first.time.abs().max(1.0) {
            return Err(Error::StampMismatch(format!("field {k} at t = {} but field 0 at t = {}", f.time, first.time)));
        }
    }
    let m = fields.len();
    let n = first.values.len();
    let mut mean = vec![0.0; n];
    let mut std = vec![0.0; n];
    let mut quantiles: Vec<Vec<f64>> = vec![vec![0.0; n]; QUANTILE_LEVELS.len()];
    let mut column = vec![0.0; m];
    for j in 0..n {
        for (c, f) in column.iter_mut().zip(fields) {
            *c = f.values[j];
        }
        // shifted by the first sample, so identical samples give exact results
        let pivot = column[0];
        let d_mean = column.iter().map(|x| x - pivot).sum::<f64>() / m as f64;
        let var = column.iter().map(|x| (x - pivot - d_mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        mean[j] = pivot + d_mean;
        std[j] = var.sqrt();
        column.sort_by(f64::total_cmp);
        for (q, &p) in quantiles.iter_mut().zip(&QUANTILE_LEVELS) {
            q[j] = nearest_rank(&column, p);
        }
    }
    let field = |values: Vec<f64>| DensityField { grid: first.grid, values, time: first.time };
    let std_spatial_avg = std.iter().sum::<f64>() / n as f64;
    Ok(EnsembleStats {
        mean: field(mean),
        quantiles: QUANTILE_LEVELS.iter().zip(quantiles).map(|(&l, q)| (l, field(q))).collect(),
        m,
        std,
        std_spatial_avg,
    })
}

/// Cellwise mean of the first `m` fields.
pub fn prefix_mean(fields: &[DensityField], m: usize) -> Result<DensityField> {
    if m == 0 || m > fields.len() {
        return Err(invalid(format!("prefix length {m} not in 1..={}", fields.len())));
    }
    let first = &fields[0];
    let mut sum = vec![0.0; first.values.len()];
    for f in &fields[..m] {
        if !f.grid.same_space(&first.grid) {
            return Err(Error::GridMismatch("ensemble fields on different grids".into()));
        }
        for (s, v) in sum.iter_mut().zip(&f.values) {
            *s += v;
        }
    }
    Ok(DensityField { grid: first.grid, values: sum.into_iter().map(|s| s / m as f64).collect(), time: first.time })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEntry {
    pub m: usize,
    /// `max |mean_M − esnv|` over cells inside the shock window.
    pub shock_deviation: f64,
    /// `max |mean_M − esnv|` over cells inside the smooth window.
    pub smooth_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingProbe {
    pub entries: Vec<ProbeEntry>,
    /// Shock deviation at the largest `M` over that at the second largest.
    pub plateau_ratio: f64,
}

/// Tracks how far nested Monte Carlo means stay from the EsNV density near a
/// shock and in a smooth region as `M` grows.
pub fn mc_mean_smoothing_probe(
    means: &[(usize, DensityField)],
    esnv: &DensityField,
    shock_window: (f64, f64),
    smooth_window: (f64, f64),
) -> Result<SmoothingProbe> {
    if means.is_empty() {
        return Err(invalid("no ensemble means supplied"));
    }
    let centers = esnv.grid.centers();
    let max_dev = |mean: &DensityField, (a, b): (f64, f64)| {
        centers
            .iter()
            .zip(mean.values.iter().zip(&esnv.values))
            .filter(|(x, _)| **x >= a && **x <= b)
            .fold(0.0, |acc: f64, (_, (m, e))| acc.max((m - e).abs()))
    };
    let mut entries = Vec::with_capacity(means.len());
    for (m, mean) in means {
        if !mean.grid.same_space(&esnv.grid) {
            return Err(Error::GridMismatch("ensemble mean and EsNV field on different grids".into()));
        }
        entries.push(ProbeEntry {
            m: *m,
            shock_deviation: max_dev(mean, shock_window),
            smooth_deviation: max_dev(mean, smooth_window),
        });
    }
    let plateau_ratio = match entries.len() {
        0 | 1 => 1.0,
        k => {
            let prev = entries[k - 2].shock_deviation;
            let last = entries[k - 1].shock_deviation;
            if prev == 0.0 {
                if last == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                last / prev
            }
        }
    };
    Ok(SmoothingProbe { entries, plateau_ratio })
}
