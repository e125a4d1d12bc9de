//! Batches of i.i.d. sNV realizations. Realization `k` always draws its noise
//! from stream `(master_seed, k)`, so results do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::godunov::{SolveOptions, SolveResult, Solver};
use crate::mesh::{DensityField, Grid1D};
use crate::noise::{sample_noise, steps_to_cover, NoiseParams, NoiseRealization};
use crate::rng::SeedRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McBatchSpec {
    /// Number of realizations.
    pub m: usize,
    pub master_seed: u64,
    pub noise: NoiseParams,
    pub output_times: Vec<f64>,
    pub record_velocity: bool,
    /// Realizations are indexed from 0, so a batch of `m′ < m` is a prefix.
    pub reuse_prefix: bool,
    /// Worker count; `None` uses the global pool. Never affects results.
    pub threads: Option<usize>,
}

impl McBatchSpec {
    pub fn new(m: usize, master_seed: u64, noise: NoiseParams) -> Self {
        Self {
            m,
            master_seed,
            noise,
            output_times: Vec::new(),
            record_velocity: false,
            reuse_prefix: true,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(invalid("a batch needs at least one realization"));
        }
        if self.threads == Some(0) {
            return Err(invalid("thread count must be positive"));
        }
        self.noise.validate()
    }

    pub fn seed(&self, k: usize) -> SeedRecord {
        SeedRecord::new(self.master_seed, k as u64)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            output_times: self.output_times.clone(),
            record_velocity: self.record_velocity,
            all_steps: false,
        }
    }

    /// Noise path of realization `k` covering `[0, t_end]`.
    pub fn noise_path(&self, k: usize, t_end: f64) -> Result<NoiseRealization> {
        sample_noise(&self.noise, steps_to_cover(t_end, self.noise.delta_r), self.seed(k))
    }
}

/// Evaluates `f(0), …, f(count − 1)` on a worker pool and returns the results
/// in index order. The first failing index is reported.
pub fn par_map_indexed<T, F>(count: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let run = || (0..count).into_par_iter().map(&f).collect::<Vec<Result<T>>>();
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| invalid(format!("cannot build worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| r.map_err(|e| Error::Realization { index, source: Box::new(e) }))
        .collect()
}

/// Runs every realization and reduces it with `f(k, result)` straight away, so
/// that only the reduced values are kept.
pub fn run_batch_map<T, F>(spec: &McBatchSpec, solver: &Solver, rho0: &DensityField, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, SolveResult) -> Result<T> + Sync + Send,
{
    spec.validate()?;
    let opts = spec.solve_options();
    let t_end = solver.grid.n_steps() as f64 * solver.grid.dt;
    par_map_indexed(spec.m, spec.threads, |k| {
        let noise = spec.noise_path(k, t_end)?;
        let res = solver.solve_snv(rho0, &noise, &opts)?;
        f(k, res)
    })
}

/// All `m` sNV realizations, ordered by realization index.
pub fn run_batch(spec: &McBatchSpec, solver: &Solver, rho0: &DensityField) -> Result<Vec<SolveResult>> {
    run_batch_map(spec, solver, rho0, |_, r| Ok(r))
}

/// Record of a batch: every seed and parameter needed to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchManifest {
    pub code_version: String,
    pub master_seed: u64,
    pub m: usize,
    pub seeds: Vec<SeedRecord>,
    pub grid: Grid1D,
    pub noise: NoiseParams,
    pub output_times: Vec<f64>,
    pub reuse_prefix: bool,
    pub c_det: f64,
    pub lambda: f64,
}

impl BatchManifest {
    pub fn new(spec: &McBatchSpec, solver: &Solver) -> Self {
        Self {
            code_version: crate::CODE_VERSION.to_string(),
            master_seed: spec.master_seed,
            m: spec.m,
            seeds: (0..spec.m).map(|k| spec.seed(k)).collect(),
            grid: solver.grid,
            noise: spec.noise,
            output_times: spec.output_times.clone(),
            reuse_prefix: spec.reuse_prefix,
            c_det: solver.cfl.c_det,
            lambda: solver.cfl.lambda,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::godunov::cfl_limit;
    use crate::kernel::{discretize_kernel, Kernel};
    use crate::mesh::InitialProfile;
    use crate::velocity::VelocityModel;

    fn small_setup() -> (Solver, DensityField) {
        let vm = VelocityModel::default();
        let w = discretize_kernel(&Kernel::concave(0.2).unwrap(), 0.02).unwrap();
        let c = cfl_limit(&w, &vm, 0.5);
        let grid = Grid1D::with_max_ratio(-0.5, 2.5, 0.02, 0.3, c).unwrap();
        let rho0 = InitialProfile::RhoLow.discretize(&grid).unwrap();
        (Solver::new(grid, w, vm, 0.5).unwrap(), rho0)
    }

    #[test]
    fn single_realization_is_a_plain_solve() {
        let (solver, rho0) = small_setup();
        let spec = McBatchSpec::new(1, 11, NoiseParams::jacobi(0.5, 4.0, 1.0, solver.grid.dt).unwrap());
        let batch = run_batch(&spec, &solver, &rho0).unwrap();
        let noise = spec.noise_path(0, solver.grid.t_end).unwrap();
        let direct = solver.solve_snv(&rho0, &noise, &SolveOptions::default()).unwrap();
        assert_eq!(batch, vec![direct]);
    }

    #[test]
    fn worker_count_and_prefixes_do_not_change_results() {
        let (solver, rho0) = small_setup();
        let mut spec = McBatchSpec::new(6, 3, NoiseParams::white(0.5, solver.grid.dt).unwrap());
        spec.threads = Some(1);
        let one = run_batch(&spec, &solver, &rho0).unwrap();
        spec.threads = Some(3);
        let three = run_batch(&spec, &solver, &rho0).unwrap();
        assert_eq!(one, three);
        spec.m = 4;
        assert_eq!(run_batch(&spec, &solver, &rho0).unwrap(), one[..4].to_vec());
    }

    #[test]
    fn failures_name_the_realization() {
        let err = par_map_indexed(5, Some(2), |k| if k == 3 { Err(invalid("boom")) } else { Ok(k) }).unwrap_err();
        assert!(matches!(err, Error::Realization { index: 3, .. }));
    }

    #[test]
    fn streams_are_uncorrelated() {
        let params = NoiseParams::white(0.5, 1e-3).unwrap();
        let spec = McBatchSpec::new(2, 99, params);
        let a = spec.noise_path(0, 10.0).unwrap().values;
        let b = spec.noise_path(1, 10.0).unwrap().values;
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let (va, vb) =
            (a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n, b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n);
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 3.0 / n.sqrt(), "correlation {corr}");
    }

    #[test]
    fn manifest_lists_every_seed() {
        let (solver, _) = small_setup();
        let spec = McBatchSpec::new(4, 5, NoiseParams::white(0.5, solver.grid.dt).unwrap());
        let m = BatchManifest::new(&spec, &solver);
        assert_eq!(m.seeds.iter().map(|s| s.stream).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let json = serde_json::to_string(&m).unwrap();
        let back: BatchManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
