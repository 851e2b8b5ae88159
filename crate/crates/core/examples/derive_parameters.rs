//! Derived quantities for the bundled three-mode configuration.
//!
//! cargo run --example derive_parameters [config]

use nanosphere::coupling::build_pairs;
use nanosphere::dynamics::{cooling_rate, final_phonon_number, stability_check};
use nanosphere::params::zero_point_fluctuation;
use nanosphere::{Axis, SystemConfig};

fn main() -> nanosphere::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_sec3.cfg").into());
    let cfg = SystemConfig::load(&path)?;
    let mass = cfg.mass();
    println!("sphere mass {mass:.3e} kg");

    let pairs = build_pairs(&cfg)?;
    println!("axis  omega/2pi [Hz]  q_zpf [m]   g [rad/s]  photons    Gamma [1/s]  n_floor   stable");
    for axis in Axis::ALL {
        let p = pairs.pair(axis);
        let q = zero_point_fluctuation(mass, p.mech_frequency);
        let rate = cooling_rate(p.coupling, p.amplitude.norm(), p.kappa, p.mech_frequency);
        let floor = final_phonon_number(p.mech_frequency, p.effective_detuning, p.kappa)?;
        println!(
            "{:<5} {:<15.4e} {q:<11.3e} {:<10.3} {:<10.3e} {:<12.1} {:<9.2e} {}",
            axis.name(),
            p.mech_frequency / std::f64::consts::TAU,
            p.coupling,
            p.photons(),
            rate.rate,
            floor.phonons,
            stability_check(p).stable,
        );
    }
    for w in &pairs.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
