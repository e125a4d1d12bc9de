//! Simulation library for stochastic nonlocal traffic-flow models: a Godunov
//! scheme driven by bounded Markovian noise, the mean-value proxy built on a
//! propagated noise density, characteristic tracing and Monte Carlo tooling.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod characteristics;
pub mod error;
pub mod godunov;
pub mod io;
pub mod kernel;
pub mod mesh;
pub mod montecarlo;
pub mod noise;
pub mod noise_density;
pub mod quadrature;
pub mod rng;
pub mod velocity;

pub use error::{Error, Result};
pub use godunov::{CflBound, MeanVelocity, SolveOptions, SolveResult, Solver};
pub use kernel::{discretize_kernel, Kernel, KernelKind, KernelWeights};
pub use mesh::{DensityField, Grid1D, InitialProfile};
pub use noise::{NoiseKind, NoiseParams, NoiseRealization};
pub use noise_density::NoiseDensityGrid;
pub use rng::SeedRecord;
pub use velocity::{VelocityKind, VelocityModel};

/// Version tag written into manifests.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
