//! Recovers molecular masses from simulated photon counts with one and
//! two mixture components.
//!
//! cargo run --release --example species_fit

use nanosphere::collisions::{fit_species, ExperimentSetup};
use nanosphere::SystemConfig;

fn main() -> nanosphere::Result<()> {
    let cfg = SystemConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig2.cfg"))?;
    let setup = ExperimentSetup::from_config(&cfg)?;
    for s in &cfg.gas.species {
        println!("true: {} {:.3e} kg, fraction {:.2}", s.name, s.mass, s.fraction);
    }
    let exp = setup.run_events(10_000, 7);
    for k in 1..=2 {
        let fit = fit_species(&exp.records, k, &setup)?;
        println!("K = {k}: log L = {:.2}, converged {}", fit.log_likelihood, fit.converged);
        for c in &fit.components {
            print!("  mass {:.3e} kg, weight {:.3}", c.mass, c.weight);
            if let Some((lo, hi)) = c.mass_interval {
                print!(", 95% [{lo:.3e}, {hi:.3e}]");
            }
            println!();
        }
        for w in &fit.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
