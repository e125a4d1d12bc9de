//! Figure data sets with matching gnuplot scripts.

use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::json;
use snv_core::analysis::mc_mean_smoothing_probe;
use snv_core::io::write_json;

use crate::config::{ExperimentConfig, NoiseChoice};
use crate::run::{self, Sink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
pub enum Figure {
    #[value(name = "fig2_1")]
    #[serde(rename = "fig2_1")]
    Fig2_1,
    #[value(name = "fig2_2")]
    #[serde(rename = "fig2_2")]
    Fig2_2,
    #[value(name = "fig3_1")]
    #[serde(rename = "fig3_1")]
    Fig3_1,
    #[value(name = "fig3_2")]
    #[serde(rename = "fig3_2")]
    Fig3_2,
    #[value(name = "fig3_3")]
    #[serde(rename = "fig3_3")]
    Fig3_3,
    #[value(name = "fig3_4")]
    #[serde(rename = "fig3_4")]
    Fig3_4,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2_1 => "fig2_1",
            Figure::Fig2_2 => "fig2_2",
            Figure::Fig3_1 => "fig3_1",
            Figure::Fig3_2 => "fig3_2",
            Figure::Fig3_3 => "fig3_3",
            Figure::Fig3_4 => "fig3_4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

/// Look-ahead of the near-local panel of the bias figure.
pub const SHORT_ETA: f64 = 0.02;

fn pick<T>(scale: Scale, desk: T, paper: T) -> T {
    match scale {
        Scale::Desk => desk,
        Scale::Paper => paper,
    }
}

fn rho_high(base: &ExperimentConfig, scale: Scale, m: usize) -> ExperimentConfig {
    ExperimentConfig {
        initial: "rho_high".into(),
        t_end: 2.0,
        dx: pick(scale, 1e-2, 3e-3),
        noise: NoiseChoice::Jacobi,
        m,
        ..base.clone()
    }
}

pub fn generate(figure: Figure, scale: Scale, base: &ExperimentConfig, root: &Path) -> anyhow::Result<()> {
    let out = root.join(figure.name());
    let big_m = pick(scale, 200, 2000);
    match figure {
        Figure::Fig2_1 => {
            let cfg = ExperimentConfig { keep_realizations: 15, ..rho_high(base, scale, 15) };
            run::characteristics(&cfg, &out.join("data"))?;
            script(&out, figure, &characteristics_script(cfg.start_points.len(), 15))?;
        }
        Figure::Fig2_2 => {
            let cfg = ExperimentConfig {
                noise: NoiseChoice::Jacobi,
                output_times: vec![0.01, 0.05, 0.2, 1.0, 2.0],
                density_nodes: 601,
                delta_r: Some(1e-3),
                ..base.clone()
            };
            run::fokker_planck(&cfg, &out.join("data"))?;
            script(&out, figure, FOKKER_PLANCK_SCRIPT)?;
        }
        Figure::Fig3_1 => {
            for (name, noise) in [("white", NoiseChoice::White), ("jacobi", NoiseChoice::Jacobi)] {
                let cfg = ExperimentConfig {
                    initial: "rho_low".into(),
                    t_end: 1.0,
                    dx: pick(scale, 1e-2, 1e-3),
                    noise,
                    m: big_m,
                    output_times: vec![1.0],
                    ..base.clone()
                };
                run::mc(&cfg, &out.join(name))?;
            }
            script(&out, figure, &ensemble_panels_script("white", "jacobi", "1", base.keep_realizations))?;
        }
        Figure::Fig3_2 => {
            let cfg = ExperimentConfig {
                output_times: vec![2.0],
                m_values: vec![big_m / 8, big_m / 4, big_m / 2],
                ..rho_high(base, scale, big_m)
            };
            let res = run::mc(&cfg, &out.join("data"))?;
            let probe = mc_mean_smoothing_probe(&res.prefix_means[0], &res.esnv[0], (-0.3, 0.3), (3.0, 4.0))?;
            let mut sink = Sink::new(&out.join("probe"))?;
            sink.file("smoothing_probe.json", |w| write_json(&probe, w))?;
            sink.finish("smoothing-probe", &cfg, json!({ "shock_window": [-0.3, 0.3], "smooth_window": [3.0, 4.0] }))?;
            script(&out, figure, &zoom_script(cfg.keep_realizations, 4))?;
        }
        Figure::Fig3_3 => {
            let cfg = rho_high(base, scale, big_m);
            run::characteristics(&cfg, &out.join("data"))?;
            script(&out, figure, &characteristics_script(cfg.start_points.len(), cfg.keep_realizations))?;
        }
        Figure::Fig3_4 => {
            let m_values = pick(scale, vec![50, 200, 800], vec![250, 500, 1000, 2000]);
            for eta in [0.2, SHORT_ETA] {
                let cfg =
                    ExperimentConfig { eta, m_values: m_values.clone(), dt_levels: 3, ..rho_high(base, scale, big_m) };
                run::bias(&cfg, &out.join(format!("eta_{eta}")))?;
            }
            script(&out, figure, &bias_script(0.2, SHORT_ETA, 3))?;
        }
    }
    let mut sink = Sink::new(&out)?;
    sink.file("figure.json", |w| write_json(&json!({ "figure": figure, "scale": scale, "seed": base.seed }), w))?;
    Ok(())
}

fn script(out: &Path, figure: Figure, body: &str) -> anyhow::Result<()> {
    let mut sink = Sink::new(out)?;
    let text = format!(
        "# gnuplot {0}.gp  (run from this directory)\nset datafile separator ','\nset terminal pngcairo size 1200,600\nset output '{0}.png'\nset key autotitle columnhead\n{1}",
        figure.name(),
        body
    );
    sink.text(&format!("{}.gp", figure.name()), &text)
}

fn characteristics_script(starts: usize, kept: usize) -> String {
    let mean0 = 2 + starts;
    let real0 = 2 + 2 * starts;
    let real1 = 1 + 2 * starts + kept * starts;
    format!(
        "set key off\nset xlabel 'x'\nset ylabel 't'\n\
         plot for [c={real0}:{real1}] 'data/wide.csv' using c:1 with lines lc rgb '#b0b0b0', \\\n\
         \x20    for [c={mean0}:{}] 'data/wide.csv' using c:1 with lines lw 2 lc rgb 'blue', \\\n\
         \x20    for [c=2:{}] 'data/wide.csv' using c:1 with lines dt 2 lw 2 lc rgb 'dark-green'\n",
        mean0 + starts - 1,
        1 + starts
    )
}

const FOKKER_PLANCK_SCRIPT: &str = "set xlabel 'a'\nset ylabel 'density'\nset logscale y\n\
plot for [c=3:7] 'data/density.csv' using 1:c with lines lw 2\n";

fn ensemble_panel(dir: &str, label: &str, kept: usize) -> String {
    format!(
        "set title '{dir}'\n\
         plot for [c=2:{}] '{dir}/realizations_t_{label}.csv' using 1:c with lines lc rgb '#c8c8c8' notitle, \\\n\
         \x20    '{dir}/ensemble_t_{label}.csv' using 1:2 with lines lw 2 lc rgb 'blue' title 'mean', \\\n\
         \x20    '' using 1:3 with lines dt 2 lc rgb 'blue' title 'q05', \\\n\
         \x20    '' using 1:4 with lines dt 3 lc rgb 'blue' title 'q50', \\\n\
         \x20    '' using 1:5 with lines dt 2 lc rgb 'blue' title 'q95', \\\n\
         \x20    '{dir}/esnv_t_{label}.csv' using 1:2 with lines lw 2 lc rgb 'dark-green' title 'EsNV'\n",
        1 + kept.max(1)
    )
}

fn ensemble_panels_script(left: &str, right: &str, label: &str, kept: usize) -> String {
    format!(
        "set xlabel 'x'\nset ylabel 'rho'\nset multiplot layout 1,2\n{}{}unset multiplot\n",
        ensemble_panel(left, label, kept),
        ensemble_panel(right, label, kept)
    )
}

fn zoom_script(kept: usize, means: usize) -> String {
    format!(
        "set xlabel 'x'\nset ylabel 'rho'\nset multiplot layout 1,2\n{}\
         set title 'nested means'\nset xrange [-0.4:0.4]\n\
         plot for [c=2:{}] 'data/prefix_means_t_2.csv' using 1:c with lines lw 2, \\\n\
         \x20    'data/esnv_t_2.csv' using 1:2 with lines dt 2 lw 2 lc rgb 'dark-green' title 'EsNV'\n\
         unset multiplot\n",
        ensemble_panel("data", "2", kept),
        1 + means
    )
}

fn bias_script(eta_left: f64, eta_right: f64, levels: usize) -> String {
    let panel = |eta: f64| {
        format!(
            "set title 'eta = {eta}'\nplot for [c=2:{}] 'eta_{eta}/bias_matrix.csv' using 1:c with linespoints lw 2\n",
            1 + levels
        )
    };
    format!(
        "set xlabel 'M'\nset ylabel 'l1 bias'\nset logscale xy\nset multiplot layout 1,2\n{}{}unset multiplot\n",
        panel(eta_left),
        panel(eta_right)
    )
}
