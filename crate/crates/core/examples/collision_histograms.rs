//! Simulated two-species gas collisions and the per-axis photon-count
//! histograms, with the expected counts alongside.
//!
//! cargo run --release --example collision_histograms [events] [seed]

use nanosphere::collisions::ExperimentSetup;
use nanosphere::SystemConfig;

fn main() -> nanosphere::Result<()> {
    let mut args = std::env::args().skip(1);
    let events: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = SystemConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig2.cfg"))?;
    let setup = ExperimentSetup::from_config(&cfg)?;
    let exp = setup.run_events(events, seed);
    println!(
        "{} events, {} detection records, merged pulses {:?}",
        exp.events.len(),
        exp.records.len(),
        exp.merged_pulses
    );
    for h in &exp.histograms {
        let total: u64 = h.count_frequencies.iter().sum();
        println!("{} axis", h.axis.name());
        println!("   k  observed  expected");
        for (k, (o, e)) in h.count_frequencies.iter().zip(&h.count_expected).enumerate().take(15) {
            println!("  {k:2}  {o:8}  {:8.1}", e * total as f64);
        }
    }
    for w in &exp.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
