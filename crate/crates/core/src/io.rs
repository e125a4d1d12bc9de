//! CSV and JSON exports. Numbers use Rust's shortest round-trip formatting,
//! so a written file reads back to the identical `f64` values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::analysis::EnsembleStats;
use crate::characteristics::{BiasStudyResult, CharacteristicPath};
use crate::error::{Error, Result};
use crate::mesh::DensityField;
use crate::noise::NoiseRealization;
use crate::noise_density::NoiseDensityGrid;

fn num(x: f64) -> String {
    x.to_string()
}

/// Columns `k, t_k, X_k`.
pub fn write_noise_csv<W: Write>(noise: &NoiseRealization, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "t_k", "X_k"])?;
    for (k, x) in noise.values.iter().enumerate() {
        w.write_record([k.to_string(), num(k as f64 * noise.delta_r), num(*x)])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `a_j, w_j, f_hat`.
pub fn write_density_csv<W: Write>(grid: &NoiseDensityGrid, out: W) -> Result<()> {
    grid.write_csv(out)
}

/// Several density snapshots on the same nodes: `a_j, w_j`, then one column per
/// snapshot, labelled by its time.
pub fn write_density_series_csv<W: Write>(grids: &[(f64, &NoiseDensityGrid)], out: W) -> Result<()> {
    let first = grids.first().ok_or_else(|| crate::error::invalid("no density snapshots to write"))?.1;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["a_j".to_string(), "w_j".to_string()];
    header.extend(grids.iter().map(|(t, _)| format!("f_t={}", num(*t))));
    w.write_record(&header)?;
    for j in 0..first.len() {
        let mut row = vec![num(first.nodes[j]), num(first.weights[j])];
        row.extend(grids.iter().map(|(_, g)| num(g.density[j])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `x`, then `rho_t=<time>` for each snapshot.
pub fn write_snapshots_csv<W: Write>(snapshots: &[DensityField], out: W) -> Result<()> {
    let first = snapshots.first().ok_or_else(|| crate::error::invalid("no snapshots to write"))?;
    if snapshots.iter().any(|s| !s.grid.same_space(&first.grid)) {
        return Err(Error::GridMismatch("snapshots on different grids".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x".to_string()];
    header.extend(snapshots.iter().map(|s| format!("rho_t={}", num(s.time))));
    w.write_record(&header)?;
    for (j, x) in first.grid.centers().into_iter().enumerate() {
        let mut row = vec![num(x)];
        row.extend(snapshots.iter().map(|s| num(s.values[j])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `x, mean, q05, q50, q95, std`.
pub fn write_ensemble_csv<W: Write>(stats: &EnsembleStats, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x".to_string(), "mean".to_string()];
    header.extend(stats.quantiles.iter().map(|(l, _)| format!("q{:02}", (l * 100.0).round() as u32)));
    header.push("std".into());
    w.write_record(&header)?;
    for (j, x) in stats.mean.grid.centers().into_iter().enumerate() {
        let mut row = vec![num(x), num(stats.mean.values[j])];
        row.extend(stats.quantiles.iter().map(|(_, q)| num(q.values[j])));
        row.push(num(stats.std[j]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `M, dt, t0, x0, bias`.
pub fn write_bias_csv<W: Write>(result: &BiasStudyResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["M", "dt", "t0", "x0", "bias"])?;
    for e in &result.entries {
        w.write_record([e.m.to_string(), num(e.dt), num(e.t0), num(e.x0), num(e.bias)])?;
    }
    w.flush()?;
    Ok(())
}

/// Long form `realization, x0, t, X`, one row per time stamp of each
/// `(realization, path)` pair.
pub fn write_paths_csv<'a, W, I>(paths: I, out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (usize, &'a CharacteristicPath)>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["realization", "x0", "t", "X"])?;
    for (k, p) in paths {
        for (t, x) in p.times.iter().zip(&p.positions) {
            w.write_record([k.to_string(), num(p.x0), num(*t), num(*x)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Creates `path` (and its parent directories) and hands a buffered writer to `f`.
pub fn with_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid1D;

    #[test]
    fn noise_csv_round_trips_values() {
        let noise = NoiseRealization { values: vec![0.0, 0.1, -1.0 / 3.0], delta_r: 0.001, seed: None };
        let mut buf = Vec::new();
        write_noise_csv(&noise, &mut buf).unwrap();
        let mut r = csv::Reader::from_reader(buf.as_slice());
        let rows: Vec<(usize, f64, f64)> = r.deserialize().map(|x| x.unwrap()).collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2], (2, 0.002, -1.0 / 3.0));
    }

    #[test]
    fn snapshot_csv_layout() {
        let g = Grid1D::new(0.0, 1.0, 0.5, 0.1, 1.0).unwrap();
        let a = DensityField::new(g, vec![0.2, 0.9], 0.0).unwrap();
        let b = DensityField::new(g, vec![0.3, 0.8], 1.0).unwrap();
        let mut buf = Vec::new();
        write_snapshots_csv(&[a, b], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "x,rho_t=0,rho_t=1\n0.25,0.2,0.3\n0.75,0.9,0.8\n");
    }
}
