//! Experiment configuration: a TOML file merged with command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use snv_core::characteristics::default_start_points;
use snv_core::godunov::cfl_limit;
use snv_core::{
    discretize_kernel, DensityField, Grid1D, InitialProfile, Kernel, KernelKind, MeanVelocity, NoiseParams, Solver,
    VelocityKind, VelocityModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Nv,
    Snv,
    Esnv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NoiseChoice {
    White,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    Concave,
    Constant,
    Linear,
}

impl From<KernelChoice> for KernelKind {
    fn from(k: KernelChoice) -> Self {
        match k {
            KernelChoice::Concave => KernelKind::Concave,
            KernelChoice::Constant => KernelKind::Constant,
            KernelChoice::Linear => KernelKind::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VelocityChoice {
    Quadratic,
    Greenshields,
}

impl From<VelocityChoice> for VelocityKind {
    fn from(v: VelocityChoice) -> Self {
        match v {
            VelocityChoice::Quadratic => VelocityKind::Quadratic,
            VelocityChoice::Greenshields => VelocityKind::Greenshields,
        }
    }
}

/// Every knob of a run. Missing keys in a config file take these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    /// `rho_low`, `rho_high`, or a CSV file with columns `x, rho`.
    pub initial: String,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub dx: f64,
    pub t_end: f64,
    /// `Δt/Δx`; the largest admissible ratio is used when absent.
    pub lambda: Option<f64>,
    pub kernel: KernelChoice,
    pub eta: f64,
    pub velocity: VelocityChoice,
    pub v_max: f64,
    pub rho_max: f64,
    pub noise: NoiseChoice,
    pub tau: f64,
    pub alpha: f64,
    pub sigma: f64,
    /// Noise chain step; defaults to `Δt`.
    pub delta_r: Option<f64>,
    pub density_nodes: usize,
    /// Empty means `{0, T}`.
    pub output_times: Vec<f64>,
    pub m: usize,
    /// Realizations written out in full next to ensemble summaries.
    pub keep_realizations: usize,
    pub start_points: Vec<f64>,
    pub m_values: Vec<usize>,
    pub dt_levels: usize,
    pub bootstrap_replicates: usize,
    pub deltas: Vec<f64>,
    pub random_pairs: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: Model::Snv,
            initial: "rho_low".into(),
            x_min: None,
            x_max: None,
            dx: 1e-2,
            t_end: 1.0,
            lambda: None,
            kernel: KernelChoice::Concave,
            eta: 0.2,
            velocity: VelocityChoice::Quadratic,
            v_max: 1.0,
            rho_max: 1.0,
            noise: NoiseChoice::Jacobi,
            tau: 0.5,
            alpha: 4.0,
            sigma: 1.0,
            delta_r: None,
            density_nodes: 601,
            output_times: Vec::new(),
            m: 200,
            keep_realizations: 20,
            start_points: default_start_points().into_iter().map(|(_, x)| x).collect(),
            m_values: vec![50, 200, 800],
            dt_levels: 3,
            bootstrap_replicates: 2000,
            deltas: vec![0.025, 0.05, 0.1],
            random_pairs: 10,
            seed: 2024,
            threads: None,
        }
    }
}

/// Flags shared by the run commands; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML experiment file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// rho_low, rho_high or a CSV path
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub dx: Option<f64>,
    /// Final time
    #[arg(long = "T", alias = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelChoice>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_enum)]
    pub velocity: Option<VelocityChoice>,
    #[arg(long)]
    pub v_max: Option<f64>,
    #[arg(long)]
    pub rho_max: Option<f64>,
    #[arg(long, value_enum)]
    pub noise: Option<NoiseChoice>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub delta_r: Option<f64>,
    #[arg(long)]
    pub density_nodes: Option<usize>,
    /// Comma-separated output times
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Number of realizations
    #[arg(short = 'm', long = "m")]
    pub m: Option<usize>,
    #[arg(long)]
    pub keep_realizations: Option<usize>,
    /// Comma-separated start positions at t0 = 0
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub starts: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub m_values: Option<Vec<usize>>,
    #[arg(long)]
    pub dt_levels: Option<usize>,
    #[arg(long)]
    pub bootstrap_replicates: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long)]
    pub random_pairs: Option<usize>,
}

macro_rules! take {
    ($cfg:ident, $o:ident, $($field:ident => $target:ident),* $(,)?) => {
        $(if let Some(v) = $o.$field.clone() { $cfg.$target = v; })*
    };
}

impl ExperimentConfig {
    /// Reads a TOML experiment file, or the `config` entry of a run manifest
    /// when the file ends in `.json`.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let mut manifest: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let cfg =
                manifest.get_mut("config").map(serde_json::Value::take).context("manifest has no config entry")?;
            return serde_json::from_value(cfg).with_context(|| format!("config entry of {}", path.display()));
        }
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Config file (or defaults), then flags, then the global seed and worker count.
    pub fn resolve(o: &Overrides, seed: Option<u64>, threads: Option<usize>) -> anyhow::Result<Self> {
        let mut cfg = match &o.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply(o);
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if threads.is_some() {
            cfg.threads = threads;
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let cfg = self;
        take!(cfg, o,
            model => model, initial => initial, dx => dx, t_end => t_end, kernel => kernel, eta => eta,
            velocity => velocity, v_max => v_max, rho_max => rho_max, noise => noise, tau => tau,
            alpha => alpha, sigma => sigma, density_nodes => density_nodes, times => output_times, m => m,
            keep_realizations => keep_realizations, starts => start_points, m_values => m_values,
            dt_levels => dt_levels, bootstrap_replicates => bootstrap_replicates, deltas => deltas,
            random_pairs => random_pairs,
        );
        if o.x_min.is_some() {
            cfg.x_min = o.x_min;
        }
        if o.x_max.is_some() {
            cfg.x_max = o.x_max;
        }
        if o.lambda.is_some() {
            cfg.lambda = o.lambda;
        }
        if o.delta_r.is_some() {
            cfg.delta_r = o.delta_r;
        }
    }

    pub fn profile(&self) -> anyhow::Result<InitialProfile> {
        match self.initial.as_str() {
            "rho_low" => Ok(InitialProfile::RhoLow),
            "rho_high" => Ok(InitialProfile::RhoHigh),
            path => read_profile(Path::new(path)),
        }
    }

    pub fn velocity_model(&self) -> anyhow::Result<VelocityModel> {
        Ok(VelocityModel::from_kind(self.velocity.into(), self.v_max, self.rho_max)?)
    }

    pub fn kernel(&self) -> anyhow::Result<Kernel> {
        Ok(Kernel::from_kind(self.kernel.into(), self.eta)?)
    }

    /// Noise bound that enters the CFL condition.
    pub fn cfl_tau(&self) -> f64 {
        match self.model {
            Model::Nv => 0.0,
            _ => self.tau,
        }
    }

    /// Solver and discretised initial data. Fails with the admissible step
    /// when an explicit `lambda` violates the CFL condition.
    pub fn build(&self) -> anyhow::Result<(Solver, DensityField)> {
        let profile = self.profile()?;
        let (a, b) = profile.default_domain();
        let (x_min, x_max) = (self.x_min.unwrap_or(a), self.x_max.unwrap_or(b));
        let vm = self.velocity_model()?;
        let weights = discretize_kernel(&self.kernel()?, self.dx)?;
        let tau = self.cfl_tau();
        let grid = match self.lambda {
            Some(l) => Grid1D::new(x_min, x_max, self.dx, l * self.dx, self.t_end)?,
            None => Grid1D::with_max_ratio(x_min, x_max, self.dx, self.t_end, cfl_limit(&weights, &vm, tau))?,
        };
        let rho0 = profile.discretize(&grid)?;
        Ok((Solver::new(grid, weights, vm, tau)?, rho0))
    }

    pub fn noise_params(&self, dt: f64) -> anyhow::Result<NoiseParams> {
        let delta_r = self.delta_r.unwrap_or(dt);
        Ok(match self.noise {
            NoiseChoice::White => NoiseParams::white(self.tau, delta_r)?,
            NoiseChoice::Jacobi => NoiseParams::jacobi(self.tau, self.alpha, self.sigma, delta_r)?,
        })
    }

    pub fn mean_velocity(&self, dt: f64) -> anyhow::Result<MeanVelocity> {
        Ok(match self.noise {
            NoiseChoice::White => MeanVelocity::WhiteNoise { tau: self.tau },
            NoiseChoice::Jacobi => MeanVelocity::Jacobi { params: self.noise_params(dt)?, m: self.density_nodes },
        })
    }

    pub fn start_pairs(&self) -> Vec<(f64, f64)> {
        self.start_points.iter().map(|&x| (0.0, x)).collect()
    }
}

fn read_profile(path: &Path) -> anyhow::Result<InitialProfile> {
    let mut reader = csv::Reader::from_path(path).with_context(|| {
        format!("initial profile {} is neither rho_low, rho_high nor a readable CSV", path.display())
    })?;
    let (mut x, mut rho) = (Vec::new(), Vec::new());
    for row in reader.deserialize() {
        let (xi, ri): (f64, f64) = row.with_context(|| format!("reading {}", path.display()))?;
        x.push(xi);
        rho.push(ri);
    }
    if x.len() < 2 {
        bail!("initial profile {} needs at least two rows", path.display());
    }
    Ok(InitialProfile::Samples { x, rho })
}
