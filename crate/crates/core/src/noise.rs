//! Bounded Markovian error processes: white noise and the acceptance-rejection
//! Euler discretisation of the symmetric Jacobi diffusion
//! `dε = −αε dt + σ √((ε+τ)(τ−ε)) dW`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mesh::SNAP_EPS;
use crate::rng::SeedRecord;

/// Redraw cap for a single acceptance-rejection step.
pub const MAX_REDRAWS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseKind {
    WhiteNoise,
    Jacobi { alpha: f64, sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub tau: f64,
    pub kind: NoiseKind,
    /// Step `δ_R` of the generating Markov chain.
    pub delta_r: f64,
}

impl NoiseParams {
    pub fn white(tau: f64, delta_r: f64) -> Result<Self> {
        let p = Self { tau, kind: NoiseKind::WhiteNoise, delta_r };
        p.validate()?;
        Ok(p)
    }

    pub fn jacobi(tau: f64, alpha: f64, sigma: f64, delta_r: f64) -> Result<Self> {
        let p = Self { tau, kind: NoiseKind::Jacobi { alpha, sigma }, delta_r };
        p.validate()?;
        Ok(p)
    }

    pub fn with_delta_r(&self, delta_r: f64) -> Result<Self> {
        let p = Self { delta_r, ..*self };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("noise bound tau must be positive, got {}", self.tau)));
        }
        if !(self.delta_r > 0.0 && self.delta_r.is_finite()) {
            return Err(invalid(format!("noise step delta_r must be positive, got {}", self.delta_r)));
        }
        if let NoiseKind::Jacobi { alpha, sigma } = self.kind {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(invalid(format!("mean reversion alpha must be positive, got {alpha}")));
            }
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(invalid(format!("volatility sigma must be positive, got {sigma}")));
            }
        }
        Ok(())
    }

    /// `τ ≤ v_max` keeps the noise from overwhelming the base speed.
    pub fn check_against_vmax(&self, v_max: f64) -> Result<()> {
        if self.tau > v_max {
            return Err(invalid(format!("noise bound tau = {} exceeds v_max = {v_max}", self.tau)));
        }
        Ok(())
    }

    /// Analytic mean of the continuous Jacobi process (identically zero).
    pub fn jacobi_mean(&self, _t: f64) -> f64 {
        0.0
    }

    /// `E[ε(t)²] = σ²τ²/(2α+σ²) (1 − e^{−(2α+σ²)t})` for the continuous Jacobi process.
    pub fn jacobi_second_moment(&self, t: f64) -> Option<f64> {
        match self.kind {
            NoiseKind::Jacobi { alpha, sigma } => {
                let rate = 2.0 * alpha + sigma * sigma;
                Some(sigma * sigma * self.tau * self.tau / rate * (1.0 - (-rate * t).exp()))
            }
            NoiseKind::WhiteNoise => None,
        }
    }
}

/// One path `X_0 = 0, X_1, …, X_{R_T}` of the generating chain, read as a
/// piecewise-constant process on `[k δ_R, (k+1) δ_R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub values: Vec<f64>,
    pub delta_r: f64,
    pub seed: Option<SeedRecord>,
}

impl NoiseRealization {
    /// The constant path `ε ≡ a` (with `X_0 = a`, so not an admissible chain
    /// when `a ≠ 0`); used for local solution operators.
    pub fn constant(a: f64, delta_r: f64, r_t: usize) -> Self {
        Self { values: vec![a; r_t + 1], delta_r, seed: None }
    }

    pub fn zero(delta_r: f64, r_t: usize) -> Self {
        Self::constant(0.0, delta_r, r_t)
    }

    pub fn r_t(&self) -> usize {
        self.values.len() - 1
    }

    pub fn t_max(&self) -> f64 {
        self.r_t() as f64 * self.delta_r
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Time stamps `t_k = k δ_R`.
    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| k as f64 * self.delta_r).collect()
    }

    /// Adds a constant to every value, including `X_0`.
    pub fn shifted(&self, delta: f64) -> Self {
        Self { values: self.values.iter().map(|v| v + delta).collect(), delta_r: self.delta_r, seed: self.seed }
    }
}

/// `ε(t) = X_{floor(t/δ_R)}`.
pub fn evaluate_noise(real: &NoiseRealization, t: f64) -> Result<f64> {
    let t_max = real.t_max();
    if !(t >= 0.0) || t > t_max * (1.0 + SNAP_EPS) + SNAP_EPS * real.delta_r {
        return Err(Error::NoiseOutOfRange { t, t_max });
    }
    let k = ((t / real.delta_r + SNAP_EPS).floor() as usize).min(real.r_t());
    Ok(real.values[k])
}

/// `ε(t_n)` for `t_n = n dt`; same as [`evaluate_noise`] at `n * dt`.
pub fn evaluate_noise_at_step(real: &NoiseRealization, n: usize, dt: f64) -> Result<f64> {
    evaluate_noise(real, n as f64 * dt)
}

/// `X_{k+1} = U_{k+1}`, `U ~ Uniform(−τ, τ)`, `X_0 = 0`.
pub fn sample_white_noise(params: &NoiseParams, r_t: usize, seed: SeedRecord) -> Result<NoiseRealization> {
    params.validate()?;
    if params.kind != NoiseKind::WhiteNoise {
        return Err(invalid("sample_white_noise requires white-noise parameters"));
    }
    let mut rng = seed.rng();
    let dist = Uniform::new(-params.tau, params.tau).map_err(|e| invalid(e.to_string()))?;
    let mut values = Vec::with_capacity(r_t + 1);
    values.push(0.0);
    values.extend((0..r_t).map(|_| dist.sample(&mut rng)));
    Ok(NoiseRealization { values, delta_r: params.delta_r, seed: Some(seed) })
}

/// One acceptance-rejection Euler step from state `x`. Fresh Gaussian
/// increments are drawn until the proposal lands in `[−τ, τ]`.
pub fn jacobi_step<R: Rng + ?Sized>(x: f64, tau: f64, alpha: f64, sigma: f64, dt: f64, rng: &mut R) -> Option<f64> {
    let drift = x * (1.0 - alpha * dt);
    let vol = sigma * ((x + tau) * (tau - x)).max(0.0).sqrt() * dt.sqrt();
    for _ in 0..MAX_REDRAWS {
        let z: f64 = StandardNormal.sample(rng);
        let proposal = drift + vol * z;
        if proposal.abs() <= tau {
            return Some(proposal);
        }
    }
    None
}

/// Continues a Jacobi chain for `steps` steps from `x0`; returns the
/// `steps + 1` states including `x0`.
pub fn jacobi_path_from<R: Rng + ?Sized>(x0: f64, params: &NoiseParams, steps: usize, rng: &mut R) -> Result<Vec<f64>> {
    let (alpha, sigma) = match params.kind {
        NoiseKind::Jacobi { alpha, sigma } => (alpha, sigma),
        NoiseKind::WhiteNoise => return Err(invalid("Jacobi sampling requires Jacobi parameters")),
    };
    let mut values = Vec::with_capacity(steps + 1);
    values.push(x0);
    let mut x = x0;
    for step in 0..steps {
        x = jacobi_step(x, params.tau, alpha, sigma, params.delta_r, rng).ok_or(Error::RejectionLimit {
            step,
            state: x,
            max: MAX_REDRAWS,
        })?;
        values.push(x);
    }
    Ok(values)
}

/// Acceptance-rejection Euler path of the Jacobi process started at 0.
pub fn sample_jacobi(params: &NoiseParams, r_t: usize, seed: SeedRecord) -> Result<NoiseRealization> {
    params.validate()?;
    let mut rng = seed.rng();
    let values = jacobi_path_from(0.0, params, r_t, &mut rng)?;
    Ok(NoiseRealization { values, delta_r: params.delta_r, seed: Some(seed) })
}

/// Dispatches on the noise kind.
pub fn sample_noise(params: &NoiseParams, r_t: usize, seed: SeedRecord) -> Result<NoiseRealization> {
    match params.kind {
        NoiseKind::WhiteNoise => sample_white_noise(params, r_t, seed),
        NoiseKind::Jacobi { .. } => sample_jacobi(params, r_t, seed),
    }
}

/// Number of chain steps needed to cover `[0, t_end]`.
pub fn steps_to_cover(t_end: f64, delta_r: f64) -> usize {
    (t_end / delta_r - SNAP_EPS).ceil().max(0.0) as usize
}
