//! The study commands. Each writes CSV files and a manifest into its output
//! directory and hands back what it computed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::{json, Value};
use snv_core::analysis::{check_stability, ensemble_stats, prefix_mean, EnsembleStats, StabilityReport};
use snv_core::characteristics::{
    bias_study, bootstrap_m_difference, mc_characteristic_average, trace_characteristic, BiasStudyConfig,
    BiasStudyResult, CharacteristicPath,
};
use snv_core::io::{
    with_file, write_bias_csv, write_density_series_csv, write_ensemble_csv, write_json, write_noise_csv,
    write_paths_csv, write_snapshots_csv,
};
use snv_core::montecarlo::{run_batch_map, BatchManifest, McBatchSpec};
use snv_core::noise::{sample_noise, steps_to_cover};
use snv_core::noise_density::density_evolution;
use snv_core::{DensityField, MeanVelocity, NoiseRealization, SeedRecord, SolveOptions, SolveResult, Solver};

use crate::config::{ExperimentConfig, Model, NoiseChoice};

/// Output directory plus the list of files written to it.
pub struct Sink {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn file<F>(&mut self, name: &str, f: F) -> anyhow::Result<()>
    where
        F: FnOnce(&mut dyn Write) -> snv_core::Result<()>,
    {
        let path = self.dir.join(name);
        with_file(&path, |w| f(w)).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> anyhow::Result<()> {
        self.file(name, |w| Ok(w.write_all(body.as_bytes())?))
    }

    /// Writes `manifest.json` and `config.toml`; the latter reproduces the run
    /// when passed back through `--config`.
    pub fn finish(mut self, command: &str, cfg: &ExperimentConfig, details: Value) -> anyhow::Result<Vec<String>> {
        let toml_text = toml::to_string(cfg).context("serialising the effective config")?;
        self.text("config.toml", &toml_text)?;
        let manifest = json!({
            "code_version": snv_core::CODE_VERSION,
            "command": command,
            "config": cfg,
            "details": details,
            "files": self.files,
        });
        self.file("manifest.json", |w| write_json(&manifest, w))?;
        Ok(self.files)
    }
}

/// Label used in file names, e.g. `0.5` or `2`.
fn time_label(t: f64) -> String {
    t.to_string()
}

fn grid_details(solver: &Solver) -> Value {
    json!({
        "grid": solver.grid,
        "n_steps": solver.grid.n_steps(),
        "final_time": solver.grid.n_steps() as f64 * solver.grid.dt,
        "lambda": solver.cfl.lambda,
        "c_det": solver.cfl.c_det,
        "kernel_cells": solver.weights.gamma.len(),
        "kernel_mass": solver.weights.sum(),
    })
}

fn mean_velocity_details(mean: &MeanVelocity) -> Value {
    match mean {
        MeanVelocity::WhiteNoise { tau } => json!({ "kind": "white_noise_closed_form", "tau": tau }),
        MeanVelocity::Jacobi { params, m } => json!({
            "kind": "jacobi_density",
            "grid": "chebyshev_lobatto",
            "nodes": m,
            "tau": params.tau,
            "delta_r": params.delta_r,
            "noise": params.kind,
            "evaluation": "exact expectation over the node density via suffix sums",
        }),
        MeanVelocity::Densities { grids, delta_r } => {
            json!({ "kind": "densities", "snapshots": grids.len(), "delta_r": delta_r })
        }
    }
}

fn options(cfg: &ExperimentConfig, record_velocity: bool) -> SolveOptions {
    SolveOptions { output_times: cfg.output_times.clone(), record_velocity, all_steps: false }
}

fn final_time(solver: &Solver) -> f64 {
    solver.grid.n_steps() as f64 * solver.grid.dt
}

fn batch_spec(cfg: &ExperimentConfig, solver: &Solver, record_velocity: bool) -> anyhow::Result<McBatchSpec> {
    let mut spec = McBatchSpec::new(cfg.m, cfg.seed, cfg.noise_params(solver.grid.dt)?);
    spec.output_times = cfg.output_times.clone();
    spec.record_velocity = record_velocity;
    spec.threads = cfg.threads;
    Ok(spec)
}

pub fn solve(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<SolveResult> {
    let (solver, rho0) = cfg.build()?;
    let mut sink = Sink::new(out)?;
    let opts = options(cfg, false);
    let mut details = grid_details(&solver);
    let result = match cfg.model {
        Model::Nv => solver.solve_nv(&rho0, &opts)?,
        Model::Snv => {
            let params = cfg.noise_params(solver.grid.dt)?;
            let seed = SeedRecord::new(cfg.seed, 0);
            let noise = sample_noise(&params, steps_to_cover(final_time(&solver), params.delta_r), seed)?;
            sink.file("noise.csv", |w| write_noise_csv(&noise, w))?;
            details["noise_seed"] = json!(seed);
            solver.solve_snv(&rho0, &noise, &opts)?
        }
        Model::Esnv => {
            let mean = cfg.mean_velocity(solver.grid.dt)?;
            details["mean_velocity"] = mean_velocity_details(&mean);
            solver.solve_esnv(&rho0, &mean, &opts)?
        }
    };
    for snap in &result.snapshots {
        sink.file(&format!("rho_t_{}.csv", time_label(snap.time)), |w| {
            write_snapshots_csv(std::slice::from_ref(snap), w)
        })?;
    }
    details["snapshot_steps"] = json!(result.snapshot_steps);
    details["mass"] = json!({
        "initial": result.mass.first(),
        "final": result.mass.last(),
    });
    sink.finish("solve", cfg, details)?;
    Ok(result)
}

/// Columns `x, r0, r1, …` for the given realizations at one output time.
fn write_realizations_csv(fields: &[&DensityField], w: &mut dyn Write) -> snv_core::Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    let mut header = vec!["x".to_string()];
    header.extend((0..fields.len()).map(|k| format!("r{k}")));
    writer.write_record(&header)?;
    if let Some(first) = fields.first() {
        for (j, x) in first.grid.centers().into_iter().enumerate() {
            let mut row = vec![x.to_string()];
            row.extend(fields.iter().map(|f| f.values[j].to_string()));
            writer.write_record(&row)?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub struct McOutput {
    pub times: Vec<f64>,
    pub stats: Vec<EnsembleStats>,
    /// Per output time: `(M′, mean over the first M′ realizations)`.
    pub prefix_means: Vec<Vec<(usize, DensityField)>>,
    pub esnv: Vec<DensityField>,
}

pub fn mc(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<McOutput> {
    let (solver, rho0) = cfg.build()?;
    let spec = batch_spec(cfg, &solver, false)?;
    let mut sink = Sink::new(out)?;
    let snapshots = run_batch_map(&spec, &solver, &rho0, |_, r| Ok(r.snapshots))?;
    let mean = cfg.mean_velocity(solver.grid.dt)?;
    let esnv = solver.solve_esnv(&rho0, &mean, &options(cfg, false))?.snapshots;
    let mut prefixes: Vec<usize> = cfg.m_values.iter().copied().filter(|&m| m > 0 && m < cfg.m).collect();
    prefixes.push(cfg.m);

    let mut output = McOutput { times: Vec::new(), stats: Vec::new(), prefix_means: Vec::new(), esnv: Vec::new() };
    for (i, reference) in esnv.iter().enumerate() {
        let label = time_label(reference.time);
        let fields: Vec<DensityField> = snapshots.iter().map(|s| s[i].clone()).collect();
        let stats = ensemble_stats(&fields)?;
        sink.file(&format!("ensemble_t_{label}.csv"), |w| write_ensemble_csv(&stats, w))?;
        sink.file(&format!("esnv_t_{label}.csv"), |w| write_snapshots_csv(std::slice::from_ref(reference), w))?;
        let kept: Vec<&DensityField> = fields.iter().take(cfg.keep_realizations).collect();
        sink.file(&format!("realizations_t_{label}.csv"), |w| write_realizations_csv(&kept, w))?;
        let means: Vec<(usize, DensityField)> =
            prefixes.iter().map(|&m| Ok((m, prefix_mean(&fields, m)?))).collect::<snv_core::Result<_>>()?;
        let mut labelled: Vec<DensityField> = means.iter().map(|(_, f)| f.clone()).collect();
        for (f, (m, _)) in labelled.iter_mut().zip(&means) {
            f.time = *m as f64;
        }
        sink.file(&format!("prefix_means_t_{label}.csv"), |w| write_snapshots_csv(&labelled, w))?;
        output.times.push(reference.time);
        output.stats.push(stats);
        output.prefix_means.push(means);
    }
    output.esnv = esnv;
    let mut details = grid_details(&solver);
    details["batch"] = serde_json::to_value(BatchManifest::new(&spec, &solver))?;
    details["mean_velocity"] = mean_velocity_details(&mean);
    details["prefix_sizes"] = json!(prefixes);
    details["std_spatial_avg"] = json!(output.stats.iter().map(|s| s.std_spatial_avg).collect::<Vec<_>>());
    sink.finish("mc", cfg, details)?;
    Ok(output)
}

#[derive(Debug, Clone, Serialize)]
pub struct TerminalSummary {
    pub x0: f64,
    pub mean: f64,
    pub esnv: f64,
    pub bias: f64,
    pub std_error: f64,
    pub q05: f64,
    pub q95: f64,
}

fn nearest_rank_sorted(mut xs: Vec<f64>, p: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    snv_core::analysis::nearest_rank(&xs, p)
}

pub fn characteristics(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<Vec<TerminalSummary>> {
    if cfg.start_points.is_empty() {
        bail!("no start points given");
    }
    let (solver, rho0) = cfg.build()?;
    let mut spec = batch_spec(cfg, &solver, true)?;
    spec.output_times = Vec::new();
    let starts = cfg.start_pairs();
    let paths: Vec<Vec<CharacteristicPath>> = run_batch_map(&spec, &solver, &rho0, |_, r| {
        starts.iter().map(|&(t0, x0)| trace_characteristic(&r, t0, x0)).collect()
    })?;
    let mean = cfg.mean_velocity(solver.grid.dt)?;
    let esnv_run = solver.solve_esnv(&rho0, &mean, &SolveOptions::default().with_velocity())?;
    let esnv: Vec<CharacteristicPath> =
        starts.iter().map(|&(t0, x0)| trace_characteristic(&esnv_run, t0, x0)).collect::<snv_core::Result<_>>()?;

    let mut sink = Sink::new(out)?;
    let kept = paths.iter().take(cfg.keep_realizations).enumerate().flat_map(|(k, ps)| ps.iter().map(move |p| (k, p)));
    sink.file("paths.csv", |w| write_paths_csv(kept, w))?;

    let mut averages = Vec::with_capacity(starts.len());
    let mut terminal = Vec::with_capacity(starts.len());
    for (s, reference) in esnv.iter().enumerate() {
        let ensemble: Vec<CharacteristicPath> = paths.iter().map(|p| p[s].clone()).collect();
        let uniform = ensemble.iter().all(|p| p.times == reference.times);
        if !uniform {
            bail!(
                "characteristics from x0 = {} leave the domain before the final time; widen the domain",
                reference.x0
            );
        }
        let avg = mc_characteristic_average(&ensemble)?;
        let finals: Vec<f64> = ensemble.iter().map(|p| p.final_position()).collect();
        let m = finals.len() as f64;
        let mean_x = finals.iter().sum::<f64>() / m;
        let var = finals.iter().map(|x| (x - mean_x).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        terminal.push(TerminalSummary {
            x0: reference.x0,
            mean: avg.final_position(),
            esnv: reference.final_position(),
            bias: (avg.final_position() - reference.final_position()).abs(),
            std_error: (var / m).sqrt(),
            q05: nearest_rank_sorted(finals.clone(), 0.05),
            q95: nearest_rank_sorted(finals, 0.95),
        });
        averages.push(avg);
    }
    sink.file("average.csv", |w| write_paths_csv(averages.iter().map(|p| (cfg.m, p)), w))?;
    sink.file("esnv.csv", |w| write_paths_csv(esnv.iter().map(|p| (0, p)), w))?;
    let kept: Vec<&Vec<CharacteristicPath>> = paths.iter().take(cfg.keep_realizations).collect();
    sink.file("wide.csv", |w| write_wide_paths_csv(&esnv, &averages, &kept, w))?;
    sink.file("terminal.csv", |w| {
        let mut writer = csv::Writer::from_writer(w);
        for row in &terminal {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(())
    })?;
    let mut details = grid_details(&solver);
    details["batch"] = serde_json::to_value(BatchManifest::new(&spec, &solver))?;
    details["mean_velocity"] = mean_velocity_details(&mean);
    sink.finish("characteristics", cfg, details)?;
    Ok(terminal)
}

/// Columns `t`, then EsNV, Monte Carlo mean and each kept realization, one
/// column per start point. All paths share the EsNV time stamps.
fn write_wide_paths_csv(
    esnv: &[CharacteristicPath],
    averages: &[CharacteristicPath],
    kept: &[&Vec<CharacteristicPath>],
    w: &mut dyn Write,
) -> snv_core::Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(esnv.iter().map(|p| format!("esnv_x0={}", p.x0)));
    header.extend(averages.iter().map(|p| format!("mean_x0={}", p.x0)));
    for (k, ps) in kept.iter().enumerate() {
        header.extend(ps.iter().map(|p| format!("r{k}_x0={}", p.x0)));
    }
    writer.write_record(&header)?;
    let times = esnv.first().map(|p| p.times.clone()).unwrap_or_default();
    for (n, t) in times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(
            esnv.iter().chain(averages).chain(kept.iter().flat_map(|ps| ps.iter())).map(|p| p.positions[n].to_string()),
        );
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn bias_config(cfg: &ExperimentConfig) -> anyhow::Result<BiasStudyConfig> {
    if cfg.noise != NoiseChoice::Jacobi {
        bail!("the bias study runs with Jacobi noise only");
    }
    let profile = cfg.profile()?;
    let (a, b) = profile.default_domain();
    Ok(BiasStudyConfig {
        x_min: cfg.x_min.unwrap_or(a),
        x_max: cfg.x_max.unwrap_or(b),
        profile,
        dx: cfg.dx,
        t_end: cfg.t_end,
        eta: cfg.eta,
        tau: cfg.tau,
        alpha: cfg.alpha,
        sigma: cfg.sigma,
        m_values: cfg.m_values.clone(),
        dt_levels: cfg.dt_levels,
        start_points: cfg.start_pairs(),
        density_nodes: cfg.density_nodes,
        master_seed: cfg.seed,
        threads: cfg.threads,
    })
}

pub fn bias(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<BiasStudyResult> {
    let study = bias_config(cfg)?;
    let result = bias_study(&study)?;
    let finest = result.dt_values.len() - 1;
    let mut bootstrap = Vec::new();
    for (i, w) in result.m_values.windows(2).enumerate() {
        let seed = SeedRecord::new(cfg.seed ^ 0xB007, i as u64);
        bootstrap.push((
            w[0],
            w[1],
            bootstrap_m_difference(&result, finest, w[0], w[1], cfg.bootstrap_replicates, seed)?,
        ));
    }
    let mut sink = Sink::new(out)?;
    sink.file("bias.csv", |w| write_bias_csv(&result, w))?;
    sink.file("bias_matrix.csv", |w| {
        let mut writer = csv::Writer::from_writer(w);
        let mut header = vec!["M".to_string()];
        header.extend(result.dt_values.iter().map(|dt| format!("dt={dt}")));
        writer.write_record(&header)?;
        let matrix = result.bias_matrix();
        for (j, m) in result.m_values.iter().enumerate() {
            let mut rec = vec![m.to_string()];
            rec.extend(matrix.iter().map(|row| row[j].to_string()));
            writer.write_record(&rec)?;
        }
        writer.flush()?;
        Ok(())
    })?;
    sink.file("bootstrap.csv", |w| {
        let mut writer = csv::Writer::from_writer(w);
        writer.write_record(["m_lo", "m_hi", "estimate", "lower", "upper"])?;
        for (lo, hi, b) in &bootstrap {
            writer.write_record([
                lo.to_string(),
                hi.to_string(),
                b.estimate.to_string(),
                b.lower.to_string(),
                b.upper.to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    })?;
    let details = json!({
        "dt_values": result.dt_values,
        "m_values": result.m_values,
        "t_eval": result.t_eval,
        "start_points": result.start_points,
        "noise_delta_r": result.dt_values.last(),
        "nested_realizations": true,
        "std_error_finest_largest_m": result.mean_standard_error(finest, *result.m_values.last().unwrap()),
    });
    sink.finish("bias", cfg, details)?;
    Ok(result)
}

pub fn fokker_planck(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    if cfg.noise != NoiseChoice::Jacobi {
        bail!("density propagation needs Jacobi noise");
    }
    let params = cfg.noise_params(cfg.delta_r.unwrap_or(1e-3))?;
    let times = if cfg.output_times.is_empty() { vec![0.01, 0.05, 0.2, 1.0, 2.0] } else { cfg.output_times.clone() };
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let steps = steps_to_cover(t_max, params.delta_r);
    let evolution = density_evolution(&params, cfg.density_nodes, params.delta_r, steps)?;
    let picked: Vec<(f64, usize)> =
        times.iter().map(|&t| (t, ((t / params.delta_r).round() as usize).min(steps))).collect();
    let mut sink = Sink::new(out)?;
    let series: Vec<(f64, &_)> = picked.iter().map(|&(t, k)| (t, &evolution[k])).collect();
    sink.file("density.csv", |w| write_density_series_csv(&series, w))?;
    sink.file("moments.csv", |w| {
        let mut writer = csv::Writer::from_writer(w);
        writer.write_record(["t", "mass", "mean", "second_moment", "second_moment_exact"])?;
        for &(t, k) in &picked {
            let g = &evolution[k];
            let exact = params.jacobi_second_moment(k as f64 * params.delta_r).unwrap_or(f64::NAN);
            writer.write_record([t, g.mass(), g.moment(1), g.moment(2), exact].map(|v| v.to_string()))?;
        }
        writer.flush()?;
        Ok(())
    })?;
    let details = json!({ "noise": params, "nodes": cfg.density_nodes, "steps": steps, "times": times });
    sink.finish("fokker-planck", cfg, details)?;
    Ok(())
}

pub fn stability(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<Vec<StabilityReport>> {
    let (solver, rho0) = cfg.build()?;
    let kernel = cfg.kernel()?;
    let dt = solver.grid.dt;
    let r_t = solver.grid.n_steps();
    let params = cfg.noise_params(dt)?;
    let zero = NoiseRealization::zero(dt, r_t);
    let mut pairs: Vec<(String, f64, NoiseRealization, NoiseRealization)> =
        cfg.deltas.iter().map(|&d| ("shift".to_string(), d, zero.clone(), zero.shifted(d))).collect();
    for k in 0..cfg.random_pairs as u64 {
        let a = sample_noise(&params, r_t, SeedRecord::new(cfg.seed, 2 * k))?;
        let b = sample_noise(&params, r_t, SeedRecord::new(cfg.seed, 2 * k + 1))?;
        pairs.push(("random".to_string(), f64::NAN, a, b));
    }
    let opts = SolveOptions::every_step();
    let mut reports = Vec::with_capacity(pairs.len());
    for (_, _, n1, n2) in &pairs {
        let r1 = solver.solve_snv(&rho0, n1, &opts)?;
        let r2 = solver.solve_snv(&rho0, n2, &opts)?;
        reports.push(check_stability(&r1, &r2, n1, n2, &solver.vm, &kernel)?);
    }
    let mut sink = Sink::new(out)?;
    sink.file("stability.csv", |w| {
        let mut writer = csv::Writer::from_writer(w);
        writer.write_record([
            "pair",
            "kind",
            "delta",
            "l1_distance",
            "bound",
            "k_t_v",
            "k_t",
            "noise_l1",
            "satisfied",
        ])?;
        for (i, ((kind, delta, _, _), r)) in pairs.iter().zip(&reports).enumerate() {
            writer.write_record([
                i.to_string(),
                kind.clone(),
                delta.to_string(),
                r.l1_distance.to_string(),
                r.bound.to_string(),
                r.k_t_v.to_string(),
                r.k_t.to_string(),
                r.noise_l1.to_string(),
                r.satisfied.to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    })?;
    sink.file("stability.json", |w| write_json(&reports, w))?;
    let mut details = grid_details(&solver);
    details["violations"] = json!(reports.iter().filter(|r| !r.satisfied).count());
    sink.finish("stability", cfg, details)?;
    Ok(reports)
}
