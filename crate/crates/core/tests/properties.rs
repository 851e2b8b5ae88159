//! Property tests across modules, with independent numerical oracles where
//! the library has its own closed form.

use std::f64::consts::TAU;
use std::path::PathBuf;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nanosphere::collisions::{
    compound_count_pmf, kick_cdf, kick_density, mean_elastic_kick, measured_count_pmf,
    sample_count, sample_kicks,
};
use nanosphere::coupling::{build_pairs, CoupledModePair};
use nanosphere::dynamics::{
    build_drift_diffusion, output_pulse, propagate_covariance, spectral_abscissa, stability_check,
    steady_state_covariance, step_bound, CovarianceState, DriftDiffusion,
};
use nanosphere::noise::{budget, scale_noise, BudgetThresholds};
use nanosphere::params::KickModel;
use nanosphere::{Axis, SystemConfig};

/// ∫_0^b f(n) dn by tanh-sinh after n = u², which removes the n^(-1/2)
/// endpoint singularity of the shape-1/2 law.
fn integrate_sqrt(f: impl Fn(f64) -> f64, b: f64) -> f64 {
    quadrature::integrate(|u| 2.0 * u * f(u * u), 0.0, b.sqrt(), 1e-14).integral
}

fn bundled() -> SystemConfig {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "configs", "paper_sec3.cfg"]
        .iter()
        .collect();
    SystemConfig::load(path).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn budget_heating_grows_with_noise(f1 in 0.0f64..1e3, f2 in 0.0f64..1e3) {
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let cfg = bundled();
        let pairs = build_pairs(&cfg).unwrap();
        let a = budget(&scale_noise(&cfg, lo), &pairs, BudgetThresholds::default());
        let b = budget(&scale_noise(&cfg, hi), &pairs, BudgetThresholds::default());
        for (x, y) in a.axes.iter().zip(&b.axes) {
            prop_assert!(x.intensity_heating.angular <= y.intensity_heating.angular);
            prop_assert!(x.pointing_heating.angular <= y.pointing_heating.angular);
            let (fx, fy) = (x.total_floor.unwrap(), y.total_floor.unwrap());
            prop_assert!(fx <= fy * (1.0 + 1e-12));
            prop_assert!(!x.ground_state_reachable || fx < 1.0);
        }
        prop_assert!(a.all_reachable || !b.all_reachable);
    }

    /// S2 changes sign at √(ωΔ'). The drift matrix, whose coupling entries
    /// are 2gα in these quadratures, loses stability where det A = 0, at
    /// (gα)² = ω(Δ'² + κ²/4)/(4Δ').
    #[test]
    fn stability_boundaries(w in 1e4f64..1e7, kr in 0.01f64..1.0, dr in 0.5f64..2.0, frac in 0.01f64..0.95) {
        let (kappa, d) = (kr * w, dr * w);
        let pair = |g: f64| CoupledModePair::from_rates(Axis::Z, w, kappa, g, d);
        let s2_crit = (w * d).sqrt();
        prop_assert!(stability_check(&pair(frac * s2_crit)).stable);
        prop_assert!(!stability_check(&pair(s2_crit / frac)).stable);
        let static_crit = (w * (d * d + kappa * kappa / 4.0) / (4.0 * d)).sqrt();
        prop_assert!(spectral_abscissa(&build_drift_diffusion(&pair(frac * static_crit))) < 0.0);
        prop_assert!(spectral_abscissa(&build_drift_diffusion(&pair(static_crit / frac))) > 0.0);
        let det = build_drift_diffusion(&pair(static_crit)).drift.determinant();
        let scale = build_drift_diffusion(&pair(0.0)).drift.determinant().abs();
        prop_assert!(det.abs() < 1e-9 * scale);
    }

    #[test]
    fn pulse_integral_equals_excess(
        w in 1e4f64..1e7, kr in 0.01f64..0.2, gr in 0.01f64..0.5, dr in -0.1f64..0.1, n0 in 0.1f64..1e5,
    ) {
        let kappa = kr * w;
        let g_alpha = (gr * kappa).min(0.2 * w);
        let pair = CoupledModePair::from_rates(Axis::Z, w, kappa, g_alpha, w + dr * kappa);
        let p = output_pulse(&pair, n0).unwrap();
        prop_assert!((p.integrated / n0 - 1.0).abs() < 1e-6);
        prop_assert!(p.flux.windows(2).all(|f| f[1] <= f[0]));
    }

    /// Mean elastic kick is linear in gas temperature and molecular mass,
    /// and the sampler reproduces it.
    #[test]
    fn elastic_mean_sweep(t in 1.0f64..1000.0, mm in 1e-27f64..1e-24, seed in 0u64..1000) {
        let (m, w) = (1.03e-18, TAU * 2e5);
        let mean = mean_elastic_kick(mm, t, m, w);
        assert_relative_eq!(mean_elastic_kick(mm, 2.0 * t, m, w), 2.0 * mean, max_relative = 1e-14);
        assert_relative_eq!(mean_elastic_kick(3.0 * mm, t, m, w), 3.0 * mean, max_relative = 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 20_000;
        let avg = (0..n).map(|_| sample_kicks([mean; 3], KickModel::Energy, &mut rng)[2]).sum::<f64>() / n as f64;
        // shape 3/2: relative sd of the mean is √(2/3)/√n ≈ 0.0058
        prop_assert!((avg / mean - 1.0).abs() < 0.03, "{avg} vs {mean}");
    }

    /// Thermal count law: normalised, with mean n̄, matching its sampler.
    #[test]
    fn geometric_counts(mean in 0.05f64..30.0, seed in 0u64..1000) {
        let k_max = (60.0 * (mean + 1.0)) as u64;
        let p: Vec<f64> = (0..=k_max).map(|k| measured_count_pmf(k, mean)).collect();
        let total: f64 = p.iter().sum();
        let m1: f64 = p.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-9);
        assert_relative_eq!(m1, mean, max_relative = 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 20_000;
        let avg = (0..n).map(|_| sample_count(mean, &mut rng) as f64).sum::<f64>() / n as f64;
        let sd = (mean * (1.0 + mean) / n as f64).sqrt();
        prop_assert!((avg - mean).abs() < 5.0 * sd);
    }

    /// Gamma-mixed geometric law against direct quadrature of
    /// ∫ p(k | n) f(n) dn.
    #[test]
    fn compound_law_matches_quadrature(mean in 0.1f64..20.0, k in 0u64..30, half in proptest::bool::ANY) {
        let shape = if half { 0.5 } else { 1.5 };
        let table = compound_count_pmf(k, mean, shape);
        let direct = integrate_sqrt(|n| measured_count_pmf(k, n) * kick_density(n, mean, shape), 80.0 * mean + 400.0);
        assert_relative_eq!(table[k as usize], direct, max_relative = 1e-6, epsilon = 1e-14);
    }

    #[test]
    fn kick_density_is_normalised(mean in 0.01f64..1e3, half in proptest::bool::ANY) {
        let shape = if half { 0.5 } else { 1.5 };
        let total = integrate_sqrt(|n| kick_density(n, mean, shape), 100.0 * mean);
        assert_relative_eq!(total, 1.0, max_relative = 1e-8);
        let first = integrate_sqrt(|n| n * kick_density(n, mean, shape), 100.0 * mean);
        assert_relative_eq!(first, mean, max_relative = 1e-8);
        let below_mean = integrate_sqrt(|n| kick_density(n, mean, shape), mean);
        assert_relative_eq!(below_mean, kick_cdf(mean, mean, shape), max_relative = 1e-8);
    }

    /// Cooling from a thermal state never leaves the physical set, and the
    /// steady state is physical.
    #[test]
    fn covariance_stays_physical(wr in 5.0f64..50.0, gr in 0.01f64..0.3, n0 in 0.0f64..100.0) {
        let kappa = 1e5;
        let w = wr * kappa;
        let dd = DriftDiffusion::from_rates(w, kappa, w, gr * kappa);
        let traj = propagate_covariance(&dd, &CovarianceState::thermal(n0), 200.0 / kappa, step_bound(&dd), 100).unwrap();
        prop_assert!(traj.iter().all(|s| s.is_physical(1e-9)));
        let ss = steady_state_covariance(&dd).unwrap();
        prop_assert!(ss.symplectic_eigenvalues().0 >= 0.5 - 1e-9);
    }
}
