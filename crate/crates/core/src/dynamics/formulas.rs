use serde::Serialize;

use crate::{Error, Result};

/// Sideband-cooling floor and its regime flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhononFloor {
    pub phonons: f64,
    /// κ/ω > 0.5: outside the resolved-sideband regime the formula assumes.
    pub unresolved: bool,
}

/// n = [(ω − Δ')² + (κ/2)²]/(4ωΔ'), which is (κ/4ω)² at Δ' = ω.
///
/// Red detuning is Δ' > 0 here; Δ' ≤ 0 heats and is refused.
pub fn final_phonon_number(omega: f64, effective_detuning: f64, kappa: f64) -> Result<PhononFloor> {
    if !(effective_detuning > 0.0) {
        return Err(Error::Regime(format!(
            "effective detuning {effective_detuning:e} rad/s is on the heating side (cooling needs Δ' > 0)"
        )));
    }
    if !(omega > 0.0) || !(kappa >= 0.0) {
        return Err(Error::Invalid(format!(
            "need ω > 0 and κ ≥ 0, got ω = {omega}, κ = {kappa}"
        )));
    }
    let d = effective_detuning;
    let phonons = ((omega - d).powi(2) + (kappa / 2.0).powi(2)) / (4.0 * omega * d);
    Ok(PhononFloor {
        phonons,
        unresolved: kappa / omega > 0.5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoolingRate {
    /// Energy damping rate 4g²|α|²/[κ(1 + κ²/16ω²)] [1/s].
    pub rate: f64,
    /// The same expression without the factor 4 [1/s].
    pub printed: f64,
    /// |gα| < κ/10.
    pub weak_coupling: bool,
}

/// Optimal-detuning cooling rate. `rate` is the e-fold rate of the phonon
/// number and equals 1/τ in the resolved-sideband limit; `printed` is a
/// quarter of it and is kept for comparison with quoted values.
pub fn cooling_rate(g: f64, alpha: f64, kappa: f64, omega: f64) -> CoolingRate {
    let ga2 = (g * alpha).powi(2);
    let printed = ga2 / (kappa * (1.0 + kappa * kappa / (16.0 * omega * omega)));
    CoolingRate {
        rate: 4.0 * printed,
        printed,
        weak_coupling: (g * alpha).abs() < 0.1 * kappa,
    }
}

/// τ = κ/(4g²|α|²) [s].
pub fn phonon_decay_time(g: f64, alpha: f64, kappa: f64) -> f64 {
    kappa / (4.0 * (g * alpha).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_linewidth_and_frequency() {
        let n = final_phonon_number(5e5, 5e5, 5e5).unwrap();
        assert_eq!(n.phonons, 0.0625);
        assert!(n.unresolved);
    }

    #[test]
    fn heating_side_refused() {
        assert!(matches!(
            final_phonon_number(1e6, -1e6, 1e5),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn sharp_cavity_limit() {
        let n = final_phonon_number(1e6, 1e6, 1e-3).unwrap();
        assert!(n.phonons < 1e-18);
    }

    #[test]
    fn rate_scales_with_g_squared() {
        let a = cooling_rate(50.0, 200.0, 5e5, 5e5);
        let b = cooling_rate(100.0, 200.0, 5e5, 5e5);
        assert!((b.rate / a.rate - 4.0).abs() < 1e-12);
        assert!((a.rate - 4.0 * a.printed).abs() < 1e-9 * a.rate);
    }

    #[test]
    fn bad_cavity_asymptote() {
        let (g, a, w) = (10.0, 100.0, 1e3);
        let k = 1e9;
        let r = cooling_rate(g, a, k, w).rate;
        let asym = 4.0 * 16.0 * (g * a).powi(2) * w * w / k.powi(3);
        assert!((r / asym - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decay_time_scaling() {
        let t1 = phonon_decay_time(30.0, 100.0, 5e5);
        let t2 = phonon_decay_time(30.0, 200.0, 5e5);
        assert!((t1 / t2 - 4.0).abs() < 1e-12);
        // τ·(resolved-limit rate) = 1
        assert!((t1 * 4.0 * (30.0f64 * 100.0).powi(2) / 5e5 - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn optimal_floor_identity(kappa in 1e2f64..1e8, omega in 1e2f64..1e8) {
            let n = final_phonon_number(omega, omega, kappa).unwrap().phonons;
            let expect = (kappa / (4.0 * omega)).powi(2);
            prop_assert!((n - expect).abs() <= 1e-14 * expect);
        }
    }
}
