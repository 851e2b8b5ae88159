//! Photon flux leaving the cavity while one axis relaxes from n0 phonons.
//!
//! cargo run --example output_pulse [n0]

use nanosphere::coupling::build_pairs;
use nanosphere::dynamics::output_pulse;
use nanosphere::{Axis, SystemConfig};

fn main() -> nanosphere::Result<()> {
    let n0: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5.0);
    let cfg = SystemConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_sec3.cfg"))?;
    let pairs = build_pairs(&cfg)?;
    for axis in Axis::ALL {
        let pulse = match output_pulse(pairs.pair(axis), n0) {
            Ok(p) => p,
            Err(e) => {
                println!("{}: {e}", axis.name());
                continue;
            }
        };
        println!(
            "{}: duration {:.3} ms, emitted {:.6} photons (analytic {:.6})",
            axis.name(),
            1e3 * pulse.duration,
            pulse.integrated,
            pulse.analytic
        );
        let shown = pulse.times.iter().take_while(|&&t| t <= 3.0 * pulse.duration).count();
        for (t, f) in pulse.times.iter().zip(&pulse.flux).take(shown).step_by((shown / 8).max(1)) {
            println!("  t = {:8.4} ms  flux = {f:.4e} /s", 1e3 * t);
        }
    }
    Ok(())
}
