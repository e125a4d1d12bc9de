//! Base velocity laws and the discrete nonlocal (look-ahead) velocity.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernel::KernelWeights;
use crate::mesh::DensityField;

type SpeedFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum VelocityShape {
    /// `v(ρ) = v_max (1 − (ρ/ρ_max)²)`
    Quadratic,
    /// `v(ρ) = v_max (1 − ρ/ρ_max)`
    Greenshields,
    Custom(SpeedFn),
}

impl fmt::Debug for VelocityShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityShape::Quadratic => write!(f, "Quadratic"),
            VelocityShape::Greenshields => write!(f, "Greenshields"),
            VelocityShape::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityKind {
    Quadratic,
    Greenshields,
}

/// Non-increasing speed law on `[0, ρ_max]` with an explicit Lipschitz bound.
#[derive(Debug, Clone)]
pub struct VelocityModel {
    pub shape: VelocityShape,
    pub v_max: f64,
    pub rho_max: f64,
    /// `‖v'‖∞` on `[0, ρ_max]`.
    pub lip_v: f64,
}

impl Default for VelocityModel {
    /// `v(ρ) = 1 − ρ²` on `[0, 1]`.
    fn default() -> Self {
        Self::quadratic(1.0, 1.0).expect("default velocity parameters are valid")
    }
}

impl VelocityModel {
    pub fn quadratic(v_max: f64, rho_max: f64) -> Result<Self> {
        check_scales(v_max, rho_max)?;
        Ok(Self { shape: VelocityShape::Quadratic, v_max, rho_max, lip_v: 2.0 * v_max / rho_max })
    }

    pub fn greenshields(v_max: f64, rho_max: f64) -> Result<Self> {
        check_scales(v_max, rho_max)?;
        Ok(Self { shape: VelocityShape::Greenshields, v_max, rho_max, lip_v: v_max / rho_max })
    }

    pub fn from_kind(kind: VelocityKind, v_max: f64, rho_max: f64) -> Result<Self> {
        match kind {
            VelocityKind::Quadratic => Self::quadratic(v_max, rho_max),
            VelocityKind::Greenshields => Self::greenshields(v_max, rho_max),
        }
    }

    /// Arbitrary speed law; `v_max` is taken as `v(0)`. The law is sampled to
    /// reject increasing or negative speeds.
    pub fn custom<F>(v: F, rho_max: f64, lip_v: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let v_max = v(0.0);
        check_scales(v_max, rho_max)?;
        if !(lip_v > 0.0 && lip_v.is_finite()) {
            return Err(invalid(format!("velocity Lipschitz bound must be positive, got {lip_v}")));
        }
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let s = v(rho_max * i as f64 / 1000.0);
            if !(s >= 0.0) || s > prev {
                return Err(invalid("velocity must be non-negative and non-increasing on [0, rho_max]"));
            }
            prev = s;
        }
        Ok(Self { shape: VelocityShape::Custom(Arc::new(v)), v_max, rho_max, lip_v })
    }

    #[inline]
    pub fn speed(&self, rho: f64) -> f64 {
        match &self.shape {
            VelocityShape::Quadratic => {
                let r = rho / self.rho_max;
                self.v_max * (1.0 - r * r)
            }
            VelocityShape::Greenshields => self.v_max * (1.0 - rho / self.rho_max),
            VelocityShape::Custom(v) => v(rho),
        }
    }

    /// Perturbed speed `max(0, v(ρ) + ε)`.
    #[inline]
    pub fn perturbed_speed(&self, rho: f64, eps: f64) -> f64 {
        (self.speed(rho) + eps).max(0.0)
    }

    pub fn kind_name(&self) -> &'static str {
        match self.shape {
            VelocityShape::Quadratic => "quadratic",
            VelocityShape::Greenshields => "greenshields",
            VelocityShape::Custom(_) => "custom",
        }
    }
}

fn check_scales(v_max: f64, rho_max: f64) -> Result<()> {
    if !(v_max > 0.0 && v_max.is_finite()) {
        return Err(invalid(format!("v_max must be positive, got {v_max}")));
    }
    if !(rho_max > 0.0 && rho_max.is_finite()) {
        return Err(invalid(format!("rho_max must be positive, got {rho_max}")));
    }
    Ok(())
}

/// Look-ahead velocities `V_j = Σ_k γ_k s(ρ_{j+k+1})` for `j = −1, …, n−1`
/// given a local speed law `s`. Entry 0 belongs to the upstream ghost cell.
///
/// Cells beyond either end of the grid repeat the boundary value. The sum over
/// `k` runs left to right in every cell.
pub fn lookahead_velocity_ext<S: Fn(f64) -> f64>(values: &[f64], weights: &KernelWeights, speed: S) -> Vec<f64> {
    let n = values.len();
    let speeds: Vec<f64> = values.iter().map(|&rho| speed(rho)).collect();
    let last = n - 1;
    let gamma = &weights.gamma;
    let mut out = Vec::with_capacity(n + 1);
    // cell j reads speeds[j+1 ..= j+n_eta]; the ghost (j = -1) reads speeds[0 .. n_eta]
    for first in 0..=n {
        let mut acc = 0.0;
        if first + gamma.len() <= n {
            for (g, s) in gamma.iter().zip(&speeds[first..first + gamma.len()]) {
                acc += g * s;
            }
        } else {
            for (k, g) in gamma.iter().enumerate() {
                acc += g * speeds[(first + k).min(last)];
            }
        }
        out.push(acc);
    }
    out
}

/// Discrete nonlocal velocity `V_j = Σ_k γ_k max(0, v(ρ_{j+k+1}) + ε)` on the
/// grid cells (ghost entry dropped).
pub fn nonlocal_velocity(rho: &DensityField, weights: &KernelWeights, eps_value: f64, vm: &VelocityModel) -> Vec<f64> {
    let mut v = lookahead_velocity_ext(&rho.values, weights, |r| vm.perturbed_speed(r, eps_value));
    v.remove(0);
    v
}
