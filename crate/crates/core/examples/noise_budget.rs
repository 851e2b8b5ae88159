//! Laser-noise budget for the bundled configuration, then with the noise
//! spectra scaled up until ground-state cooling is lost.
//!
//! cargo run --example noise_budget

use nanosphere::coupling::build_pairs;
use nanosphere::noise::{budget, scale_noise, BudgetThresholds};
use nanosphere::SystemConfig;

fn main() -> nanosphere::Result<()> {
    let cfg = SystemConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_sec3.cfg"))?;
    let pairs = build_pairs(&cfg)?;
    for factor in [1.0, 1e3, 1e6] {
        let report = budget(&scale_noise(&cfg, factor), &pairs, BudgetThresholds::default());
        println!("noise x {factor:.0e}: ground state reachable on all axes: {}", report.all_reachable);
        println!("{}", report.table());
    }
    Ok(())
}
