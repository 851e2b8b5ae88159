//! Surface temperature of a heated sphere from inelastic collisions, with
//! the gas cold enough that elastic kicks are undetectable.
//!
//! cargo run --release --example surface_temperature

use nanosphere::collisions::{surface_temperature_estimate, ExperimentSetup};
use nanosphere::SystemConfig;

fn main() -> nanosphere::Result<()> {
    let cfg = SystemConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/surface_probe.cfg"))?;
    let setup = ExperimentSetup::from_config(&cfg)?;
    let exp = setup.run_events(5_000, 3);
    let est = surface_temperature_estimate(&exp.records, &setup)?;
    println!("true surface temperature {:.1} K", cfg.sphere.surface_temperature);
    match est.estimate {
        Some(t) => println!("estimate {t:.1} K, 95% [{:.1}, {:.1}] K from {} events", est.lower, est.upper, est.events),
        None => println!("upper bound {:.1} K from {} events", est.upper, est.events),
    }
    for w in &est.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
