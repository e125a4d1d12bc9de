mod common;

use common::{jacobi, sorted};
use snv_core::kernel::discretize_kernel;
use snv_core::montecarlo::par_map_indexed;
use snv_core::noise::{jacobi_path_from, sample_jacobi, sample_white_noise};
use snv_core::noise_density::density_evolution;
use snv_core::velocity::nonlocal_velocity;
use snv_core::{DensityField, Grid1D, Kernel, NoiseParams, SeedRecord, VelocityModel};

use proptest::prelude::*;

#[test]
fn propagated_second_moment_tracks_the_moment_formula() {
    let params = jacobi(1e-3);
    let evo = density_evolution(&params, 601, 1e-3, 2000).unwrap();
    let target = params.jacobi_second_moment(2.0).unwrap();
    let m2 = evo[2000].moment(2);
    assert!((m2 - target).abs() < 0.02 * target, "{m2} vs {target}");
    // 0.25/9 (1 − e^{−18})
    assert!((target - 0.25 / 9.0 * (1.0 - (-18.0f64).exp())).abs() < 1e-15);
}

#[test]
fn no_point_masses_at_the_bounds() {
    let params = jacobi(1e-3);
    let paths = 100_000;
    let near_bound = par_map_indexed(paths, None, |k| {
        let x = *sample_jacobi(&params, 2000, SeedRecord::new(77, k as u64))?.values.last().unwrap();
        Ok(x.abs() > 0.999 * params.tau)
    })
    .unwrap()
    .into_iter()
    .filter(|&b| b)
    .count();
    assert!((near_bound as f64) < 0.01 * paths as f64, "{near_bound} of {paths} paths near ±τ");
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn replaying_from_a_midpoint_reproduces_the_tail_law() {
    let params = jacobi(1e-3);
    let n = 10_000;
    let pairs = par_map_indexed(n, None, |k| {
        let path = sample_jacobi(&params, 2000, SeedRecord::new(31, k as u64))?;
        let mut rng = SeedRecord::new(32, k as u64).rng();
        let replay = jacobi_path_from(path.values[1000], &params, 1000, &mut rng)?;
        Ok((path.values[2000], *replay.last().unwrap()))
    })
    .unwrap();
    let original = sorted(pairs.iter().map(|p| p.0).collect());
    let replayed = sorted(pairs.iter().map(|p| p.1).collect());
    let d = ks_statistic(&original, &replayed);
    // 0.1% critical value of the two-sample test
    let critical = 1.95 * (2.0 / n as f64).sqrt();
    assert!(d < critical, "KS {d} ≥ {critical}");
}

#[test]
fn sampled_paths_respect_the_bound() {
    for k in 0..20 {
        let j = sample_jacobi(&jacobi(1e-3), 2000, SeedRecord::new(5, k)).unwrap();
        assert!(j.max_abs() <= 0.5);
        let w = sample_white_noise(&NoiseParams::white(0.5, 1e-3).unwrap(), 2000, SeedRecord::new(6, k)).unwrap();
        assert!(w.max_abs() <= 0.5);
    }
}

#[test]
fn kernel_weights_converge_with_the_tail() {
    let kernel = Kernel::concave(0.2).unwrap();
    for dx in [1e-1, 1e-2, 1e-3] {
        let w = discretize_kernel(&kernel, dx).unwrap();
        let covered = w.gamma.len() as f64 * dx;
        // ∫_c^η 3/(2η³)(η² − x²) dx for the concave kernel
        let anti = |x: f64| 3.0 / (2.0 * 0.008) * (0.04 * x - x * x * x / 3.0);
        let tail = anti(0.2) - anti(covered);
        assert!((w.sum() - 1.0).abs() <= tail + 1e-12, "dx {dx}: Σγ {} tail {tail}", w.sum());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn velocity_is_lipschitz_in_the_noise(
        values in prop::collection::vec(0.0f64..=1.0, 40),
        a1 in -0.5f64..=0.5,
        a2 in -0.5f64..=0.5,
    ) {
        let grid = Grid1D::new(0.0, 0.4, 0.01, 0.001, 0.01).unwrap();
        let weights = discretize_kernel(&Kernel::concave(0.1).unwrap(), 0.01).unwrap();
        let vm = VelocityModel::default();
        let rho = DensityField::new(grid, values, 0.0).unwrap();
        let v1 = nonlocal_velocity(&rho, &weights, a1, &vm);
        let v2 = nonlocal_velocity(&rho, &weights, a2, &vm);
        let bound = (a1 - a2).abs() * weights.sum();
        for (x, y) in v1.iter().zip(&v2) {
            prop_assert!((x - y).abs() <= bound + 1e-14);
            prop_assert!(*x >= 0.0 && *x <= vm.v_max + 0.5 + 1e-14);
        }
    }
}
