//! Laser-noise heating and the ground-state feasibility budget.
//!
//! Intensity noise heats exponentially (an energy e-fold rate), pointing
//! noise adds phonons at a fixed rate, and laser phase noise sets a floor on
//! the reachable occupation. [`budget`] compares all three with the
//! sideband-cooling rate and floor of each axis.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt::Write as _;

use serde::Serialize;

use crate::constants::HBAR;
use crate::coupling::PairSet;
use crate::dynamics::{cooling_rate, final_phonon_number};
use crate::params::{Axis, Psd, SystemConfig};

/// Γ_ε = (π/2) ω² S_ε(2ω) [1/s], the e-fold rate of the mean energy.
pub fn intensity_heating(s_eps: f64, omega: f64) -> f64 {
    FRAC_PI_2 * omega * omega * s_eps
}

/// Γ = (π/2) m ω⁴ S(ω)/(ħω) [phonons/s].
pub fn pointing_heating(s_point: f64, mass: f64, omega: f64) -> f64 {
    FRAC_PI_2 * mass * omega.powi(3) * s_point / HBAR
}

/// Lower bound on the phase-noise phonon floor,
/// n_c (Γ_L/κ) γ_c²/(γ_c² + ω²).
pub fn phase_noise_floor(
    laser_linewidth: f64,
    correlation_rate: f64,
    omega: f64,
    kappa: f64,
    n_cavity: f64,
) -> f64 {
    let g2 = correlation_rate * correlation_rate;
    if g2 == 0.0 {
        return 0.0;
    }
    n_cavity * laser_linewidth / kappa * g2 / (g2 + omega * omega)
}

/// Lorentzian frequency-noise spectrum S_φ̇(ω) = 2Γ_L γ_c/(γ_c² + ω²).
pub fn frequency_noise_psd(laser_linewidth: f64, correlation_rate: f64, omega: f64) -> f64 {
    2.0 * laser_linewidth * correlation_rate / (correlation_rate.powi(2) + omega * omega)
}

/// ⟨φ̇(t) φ̇(0)⟩ = Γ_L exp(−γ_c |t|), the transform pair of
/// [`frequency_noise_psd`].
pub fn frequency_noise_correlation(laser_linewidth: f64, correlation_rate: f64, t: f64) -> f64 {
    laser_linewidth * (-correlation_rate * t.abs()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetThresholds {
    /// Total phonon floor must stay below this.
    pub phonon_floor: f64,
    /// Each heating rate must stay below this fraction of the cooling rate.
    pub heating_fraction: f64,
}

impl Default for BudgetThresholds {
    fn default() -> Self {
        BudgetThresholds {
            phonon_floor: 1.0,
            heating_fraction: 0.1,
        }
    }
}

/// A rate or floor under both readings of ω in the noise formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interpretations {
    /// ω taken as an angular frequency (rad/s); used for verdicts.
    pub angular: f64,
    /// ω taken as an ordinary frequency ω/2π (Hz).
    pub ordinary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisBudget {
    pub axis: Axis,
    /// [rad/s]
    pub mech_frequency: f64,
    /// Energy damping rate [1/s].
    pub cooling_rate: f64,
    /// Same expression without the factor 4 [1/s].
    pub cooling_rate_printed: f64,
    /// Γ_ε [1/s].
    pub intensity_heating: Interpretations,
    /// Γ_ε (n_side + 1/2) [phonons/s].
    pub intensity_heating_phonons: f64,
    /// [phonons/s]
    pub pointing_heating: Interpretations,
    /// [phonons]
    pub phase_noise_floor: Interpretations,
    /// (κ/4ω)²-type sideband floor; `None` on the heating side.
    pub sideband_floor: Option<f64>,
    /// Sideband + phase-noise floor + (heating in phonons/s)/Γ.
    pub total_floor: Option<f64>,
    pub ground_state_reachable: bool,
    /// Threshold minus value; positive means satisfied.
    pub floor_margin: Option<f64>,
    pub intensity_margin: f64,
    pub pointing_margin: f64,
    /// Each violated inequality, spelled out.
    pub violations: Vec<String>,
    /// Some PSD query fell outside its table.
    pub psd_clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub thresholds: BudgetThresholds,
    pub axes: Vec<AxisBudget>,
    pub all_reachable: bool,
    pub warnings: Vec<String>,
}

/// Heating rates and floors for every axis, judged against the cooling
/// rates of `pairs`.
pub fn budget(
    config: &SystemConfig,
    pairs: &PairSet,
    thresholds: BudgetThresholds,
) -> BudgetReport {
    let mass = config.mass();
    let noise = &config.noise;
    let ordinary = |x: f64, power: i32| x / TAU.powi(power);
    let mut warnings = Vec::new();
    let axes: Vec<AxisBudget> = Axis::ALL
        .iter()
        .map(|&axis| {
            let pair = pairs.pair(axis);
            let w = pair.mech_frequency;
            let rate = cooling_rate(pair.coupling, pair.amplitude.norm(), pair.kappa, w);

            let s_eps = noise.intensity_psd.eval(2.0 * w);
            let s_pt = noise.pointing_psd[axis.index()].eval(w);
            let gamma_eps = intensity_heating(s_eps.value, w);
            let gamma_pt = pointing_heating(s_pt.value, mass, w);
            let n_c = noise.mean_cavity_photons.unwrap_or_else(|| pair.photons());
            let n_ph = phase_noise_floor(
                noise.laser_linewidth,
                noise.phase_correlation_rate,
                w,
                pair.kappa,
                n_c,
            );
            let n_ph_ordinary = phase_noise_floor(
                noise.laser_linewidth,
                noise.phase_correlation_rate,
                w / TAU,
                pair.kappa,
                n_c,
            );

            let sideband = final_phonon_number(w, pair.effective_detuning, pair.kappa)
                .ok()
                .map(|f| f.phonons);
            let intensity_phonons = gamma_eps * (sideband.unwrap_or(0.0) + 0.5);
            let total = sideband.map(|n| n + n_ph + (intensity_phonons + gamma_pt) / rate.rate);

            let limit = thresholds.heating_fraction * rate.rate;
            let mut violations = Vec::new();
            match total {
                None => violations.push(format!(
                    "effective detuning {:.6e} rad/s is on the heating side",
                    pair.effective_detuning
                )),
                Some(t) if !(t < thresholds.phonon_floor) => violations.push(format!(
                    "total phonon floor {t:.4e} >= {}",
                    thresholds.phonon_floor
                )),
                _ => {}
            }
            if !(gamma_eps < limit) {
                violations.push(format!(
                    "intensity heating {gamma_eps:.4e} /s >= {} x cooling rate {:.4e} /s",
                    thresholds.heating_fraction, rate.rate
                ));
            }
            if !(gamma_pt < limit) {
                violations.push(format!(
                    "pointing heating {gamma_pt:.4e} phonons/s >= {} x cooling rate {:.4e} /s",
                    thresholds.heating_fraction, rate.rate
                ));
            }
            let psd_clamped = s_eps.clamped || s_pt.clamped;
            if psd_clamped {
                warnings.push(format!(
                    "{axis} axis: PSD evaluated outside its table; clamped to the nearest point"
                ));
            }
            AxisBudget {
                axis,
                mech_frequency: w,
                cooling_rate: rate.rate,
                cooling_rate_printed: rate.printed,
                intensity_heating: Interpretations {
                    angular: gamma_eps,
                    ordinary: ordinary(gamma_eps, 2),
                },
                intensity_heating_phonons: intensity_phonons,
                pointing_heating: Interpretations {
                    angular: gamma_pt,
                    ordinary: ordinary(gamma_pt, 3),
                },
                phase_noise_floor: Interpretations {
                    angular: n_ph,
                    ordinary: n_ph_ordinary,
                },
                sideband_floor: sideband,
                total_floor: total,
                ground_state_reachable: violations.is_empty(),
                floor_margin: total.map(|t| thresholds.phonon_floor - t),
                intensity_margin: limit - gamma_eps,
                pointing_margin: limit - gamma_pt,
                violations,
                psd_clamped,
            }
        })
        .collect();
    BudgetReport {
        thresholds,
        all_reachable: axes.iter().all(|a| a.ground_state_reachable),
        axes,
        warnings,
    }
}

impl BudgetReport {
    /// Plain-text summary table.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<4} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11}  verdict",
            "axis", "cool [1/s]", "G_eps[1/s]", "G_pt[ph/s]", "n_ph", "n_side", "n_total"
        );
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3e}"));
        for a in &self.axes {
            let _ = writeln!(
                s,
                "{:<4} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>11} {:>11}  {}",
                a.axis.name(),
                a.cooling_rate,
                a.intensity_heating.angular,
                a.pointing_heating.angular,
                a.phase_noise_floor.angular,
                opt(a.sideband_floor),
                opt(a.total_floor),
                if a.ground_state_reachable {
                    "pass"
                } else {
                    "FAIL"
                }
            );
            for v in &a.violations {
                let _ = writeln!(s, "     violated: {v}");
            }
        }
        s
    }
}

/// Every PSD of the configuration multiplied by `factor`.
pub fn scale_noise(config: &SystemConfig, factor: f64) -> SystemConfig {
    let mut c = config.clone();
    c.noise.intensity_psd = c.noise.intensity_psd.scaled(factor);
    c.noise.pointing_psd = c.noise.pointing_psd.clone().map(|p: Psd| p.scaled(factor));
    c
}
