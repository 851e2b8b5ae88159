//! Linearised cavity–mechanics dynamics for one [`CoupledModePair`].
//!
//! Quadratures are X = (a + a†)/√2, P = (a − a†)/(i√2), ordered
//! (X_c, P_c, X_m, P_m). The covariance matrix holds symmetrised second
//! moments, so the vacuum has variance 1/2 per quadrature and the
//! occupation of a mode is n = (⟨X²⟩ + ⟨P²⟩ − 1)/2.
//!
//! [`CoupledModePair`]: crate::coupling::CoupledModePair

mod covariance;
mod drift;
mod formulas;
mod rwa;
mod sampler;

pub use covariance::{
    physicality_tolerance, propagate_covariance, steady_state_covariance, step_bound,
    CovarianceState, PHYSICALITY_TOL, SUBSTEP_PHASE,
};
pub use drift::{
    build_drift_diffusion, spectral_abscissa, stability_check, DriftDiffusion, StabilityVerdict,
};
pub use formulas::{
    cooling_rate, final_phonon_number, phonon_decay_time, CoolingRate, PhononFloor,
};
pub use rwa::{output_pulse, rwa_reduced_step, AdiabaticDecay, OutputPulse, RwaModel};
pub use sampler::{EnergyGrowth, LangevinSampler};

/// Least-squares rate of `values(t) - floor ≈ A exp(-rate t)`, using the
/// points whose excess is above `cutoff` times the initial excess.
pub fn fit_exponential_decay(
    times: &[f64],
    values: &[f64],
    floor: f64,
    cutoff: f64,
) -> Option<f64> {
    let first = values.first()? - floor;
    if !(first > 0.0) {
        return None;
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .map(|(&t, &v)| (t, v - floor))
        .take_while(|&(_, e)| e > cutoff * first)
        .map(|(t, e)| (t, e.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (st, sy) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), &(t, y)| {
        (a + (t - mt) * (y - my), b + (t - mt) * (t - mt))
    });
    Some(-sxy / sxx)
}
