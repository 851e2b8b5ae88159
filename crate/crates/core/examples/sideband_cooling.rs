//! Covariance propagation of all three axes from a thermal start, compared
//! with the closed-form cooling rate and phonon floor.
//!
//! cargo run --release --example sideband_cooling

use nanosphere::coupling::build_pairs;
use nanosphere::dynamics::{
    build_drift_diffusion, cooling_rate, fit_exponential_decay, propagate_covariance,
    steady_state_covariance, step_bound, CovarianceState,
};
use nanosphere::{Axis, SystemConfig};

fn main() -> nanosphere::Result<()> {
    let cfg = SystemConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_sec3.cfg"))?;
    let pairs = build_pairs(&cfg)?;
    let n0 = 100.0;
    for axis in Axis::ALL {
        let p = pairs.pair(axis);
        let dd = build_drift_diffusion(p);
        let expected = cooling_rate(p.coupling, p.amplitude.norm(), p.kappa, p.mech_frequency).rate;
        let t_end = 12.0 / expected;
        let dt = step_bound(&dd);
        let every = (t_end / dt / 12.0).ceil() as usize;
        let traj = propagate_covariance(&dd, &CovarianceState::thermal(n0), t_end, dt, every)?;
        println!("{} axis", axis.name());
        for s in &traj {
            println!("  t = {:8.3} ms  n = {:.4e}", 1e3 * s.time, s.phonons());
        }
        let floor = steady_state_covariance(&dd)?.phonons();
        let times: Vec<f64> = traj.iter().map(|s| s.time).collect();
        let n: Vec<f64> = traj.iter().map(|s| s.phonons()).collect();
        if let Some(fitted) = fit_exponential_decay(&times, &n, floor, 1e-3) {
            println!("  fitted rate {fitted:.1} /s, formula {expected:.1} /s, steady state {floor:.3e}");
        }
    }
    Ok(())
}
