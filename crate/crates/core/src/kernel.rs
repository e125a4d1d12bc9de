//! Look-ahead kernels `W_η` and their cell-integrated weights `γ_k`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mesh::SNAP_EPS;
use crate::quadrature;

type KernelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Shape of the look-ahead kernel on `[0, η]`.
#[derive(Clone)]
pub enum KernelShape {
    /// `W(x) = 3/(2η³)(η² − x²)`.
    Concave,
    /// `W(x) = 1/η`.
    Constant,
    /// `W(x) = 2(η − x)/η²`.
    Linear,
    /// User-supplied weight function with a caller-provided bound on `|W'|`.
    Custom { w: KernelFn, lip_w: f64 },
}

impl fmt::Debug for KernelShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelShape::Concave => write!(f, "Concave"),
            KernelShape::Constant => write!(f, "Constant"),
            KernelShape::Linear => write!(f, "Linear"),
            KernelShape::Custom { lip_w, .. } => write!(f, "Custom {{ lip_w: {lip_w} }}"),
        }
    }
}

/// Named kernel shapes usable from configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Concave,
    Constant,
    Linear,
}

/// A normalised, non-negative, non-increasing kernel on `[0, η]`.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub eta: f64,
    pub shape: KernelShape,
    /// `∫₀^η W`, verified to equal 1.
    pub w0: f64,
    pub w_at_0: f64,
    /// `‖W'‖∞`.
    pub lip_w: f64,
}

impl Kernel {
    pub fn concave(eta: f64) -> Result<Self> {
        Self::build(eta, KernelShape::Concave)
    }

    pub fn constant(eta: f64) -> Result<Self> {
        Self::build(eta, KernelShape::Constant)
    }

    pub fn linear(eta: f64) -> Result<Self> {
        Self::build(eta, KernelShape::Linear)
    }

    pub fn from_kind(kind: KernelKind, eta: f64) -> Result<Self> {
        match kind {
            KernelKind::Concave => Self::concave(eta),
            KernelKind::Constant => Self::constant(eta),
            KernelKind::Linear => Self::linear(eta),
        }
    }

    /// Wraps an arbitrary weight function. `lip_w` must bound `|W'|` on `[0, η]`.
    pub fn custom<F>(eta: f64, w: F, lip_w: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lip_w >= 0.0 && lip_w.is_finite()) {
            return Err(invalid(format!("kernel Lipschitz bound must be finite and >= 0, got {lip_w}")));
        }
        Self::build(eta, KernelShape::Custom { w: Arc::new(w), lip_w })
    }

    fn build(eta: f64, shape: KernelShape) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("look-ahead distance must be positive, got {eta}")));
        }
        let (w_at_0, lip_w) = match &shape {
            KernelShape::Concave => (1.5 / eta, 3.0 / (eta * eta)),
            KernelShape::Constant => (1.0 / eta, 0.0),
            KernelShape::Linear => (2.0 / eta, 2.0 / (eta * eta)),
            KernelShape::Custom { w, lip_w } => (w(0.0), *lip_w),
        };
        let mut kernel = Self { eta, shape, w0: 0.0, w_at_0, lip_w };

        // sampled check of non-negativity and monotonicity
        const SAMPLES: usize = 1000;
        let mut prev = f64::INFINITY;
        for i in 0..=SAMPLES {
            let x = eta * i as f64 / SAMPLES as f64;
            let w = kernel.weight(x);
            if !(w >= 0.0) || w > prev + 1e-12 * prev.abs().max(1.0) {
                return Err(invalid(format!("kernel must be non-negative and non-increasing (fails at x = {x})")));
            }
            prev = w;
        }

        kernel.w0 = quadrature::integrate(|x| kernel.weight(x), 0.0, eta, 1e-14);
        if (kernel.w0 - 1.0).abs() > 1e-12 {
            return Err(Error::KernelMass { mass: kernel.w0 });
        }
        Ok(kernel)
    }

    /// `W(x)` for `x ∈ [0, η]`, zero outside.
    pub fn weight(&self, x: f64) -> f64 {
        if !(0.0..=self.eta).contains(&x) {
            return 0.0;
        }
        let eta = self.eta;
        match &self.shape {
            KernelShape::Concave => 1.5 / (eta * eta * eta) * (eta * eta - x * x),
            KernelShape::Constant => 1.0 / eta,
            KernelShape::Linear => 2.0 * (eta - x) / (eta * eta),
            KernelShape::Custom { w, .. } => w(x),
        }
    }

    /// `∫_a^b W(x) dx` for `0 <= a <= b <= η`; closed form for built-in shapes.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let eta = self.eta;
        match &self.shape {
            KernelShape::Concave => {
                // 3/(2η³)[η²(b−a) − (b³−a³)/3]
                1.5 / (eta * eta * eta) * (eta * eta * (b - a) - (b * b * b - a * a * a) / 3.0)
            }
            KernelShape::Constant => (b - a) / eta,
            KernelShape::Linear => ((2.0 * eta * b - b * b) - (2.0 * eta * a - a * a)) / (eta * eta),
            KernelShape::Custom { .. } => quadrature::integrate(|x| self.weight(x), a, b, 1e-12),
        }
    }

    /// `∫_a^{a+w} W`, written so that built-in weights are monotone in `a`
    /// even after rounding.
    pub fn cell_integral(&self, a: f64, w: f64) -> f64 {
        let eta = self.eta;
        match &self.shape {
            KernelShape::Concave => {
                1.5 / (eta * eta * eta) * (eta * eta * w - w * (3.0 * a * a + 3.0 * a * w + w * w) / 3.0)
            }
            KernelShape::Constant => w / eta,
            KernelShape::Linear => w * (2.0 * eta - 2.0 * a - w) / (eta * eta),
            KernelShape::Custom { .. } => self.integral(a, a + w),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.shape {
            KernelShape::Concave => "concave",
            KernelShape::Constant => "constant",
            KernelShape::Linear => "linear",
            KernelShape::Custom { .. } => "custom",
        }
    }
}

/// Cell weights `γ_k = ∫_{kΔx}^{(k+1)Δx} W`, `k < N_η = floor(η/Δx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelWeights {
    pub gamma: Vec<f64>,
    pub n_eta: usize,
    pub dx: f64,
}

impl KernelWeights {
    pub fn gamma0(&self) -> f64 {
        self.gamma[0]
    }

    pub fn sum(&self) -> f64 {
        self.gamma.iter().sum()
    }
}

/// Integrates the kernel over each of the first `floor(η/Δx)` cells. The
/// partial tail cell is dropped, so `Σγ_k` may fall short of one.
pub fn discretize_kernel(kernel: &Kernel, dx: f64) -> Result<KernelWeights> {
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(invalid(format!("cell width must be positive, got {dx}")));
    }
    if dx > kernel.eta * (1.0 + SNAP_EPS) {
        return Err(invalid(format!(
            "cell width {dx} exceeds look-ahead distance {}; the kernel would have no support cell",
            kernel.eta
        )));
    }
    let n_eta = ((kernel.eta / dx + SNAP_EPS).floor() as usize).max(1);
    let gamma = (0..n_eta)
        .map(|k| {
            let a = k as f64 * dx;
            let width = dx.min(kernel.eta - a);
            kernel.cell_integral(a, width)
        })
        .collect();
    Ok(KernelWeights { gamma, n_eta, dx })
}
