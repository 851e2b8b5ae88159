//! Stochastic trajectories of an undriven oscillator with trap-intensity
//! noise; the mean energy grows at (π/2) ω² S_ε.
//!
//! cargo run --release --example intensity_noise_heating

use std::f64::consts::{FRAC_PI_2, TAU};

use nanosphere::dynamics::{CovarianceState, DriftDiffusion, LangevinSampler};

fn main() -> nanosphere::Result<()> {
    let omega = TAU * 5e5;
    for target in [100.0, 500.0, 2000.0] {
        let s = target / (FRAC_PI_2 * omega * omega);
        let dd = DriftDiffusion::from_rates(omega, 5e5, omega, 0.0);
        let sampler = LangevinSampler::new(&dd, 1e-7)?.with_intensity_noise(s);
        let g = sampler.energy_growth(&CovarianceState::thermal(1e4), 2e-3, 200, 12);
        println!(
            "S = {s:.3e} /Hz: rate {:.1} +- {:.1} /s, expected {:.1} /s (z = {:.2})",
            g.rate,
            g.std_error,
            g.expected,
            g.z_score()
        );
    }
    Ok(())
}
