use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::coupling::CoupledModePair;

/// Drift A and diffusion D of dR = A R dt + noise, ⟨noise noise^T⟩ = D dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftDiffusion {
    pub drift: Matrix4<f64>,
    pub diffusion: Matrix4<f64>,
    /// ω_j, kept for step-size checks.
    pub mech_frequency: f64,
    pub kappa: f64,
}

impl DriftDiffusion {
    /// A from (Δ', κ, ω, G = g|α|) directly.
    pub fn from_rates(effective_detuning: f64, kappa: f64, omega: f64, g_alpha: f64) -> Self {
        let (d, k, w, g2) = (effective_detuning, kappa, omega, 2.0 * g_alpha);
        #[rustfmt::skip]
        let drift = Matrix4::new(
            -k / 2.0, d,        0.0, 0.0,
            -d,       -k / 2.0, -g2, 0.0,
            0.0,      0.0,      0.0, w,
            -g2,      0.0,      -w,  0.0,
        );
        let diffusion = Matrix4::from_diagonal(&Vector4::new(k / 2.0, k / 2.0, 0.0, 0.0));
        DriftDiffusion {
            drift,
            diffusion,
            mech_frequency: omega,
            kappa,
        }
    }

    pub fn eigenvalues(&self) -> Vec<nalgebra::Complex<f64>> {
        self.drift.complex_eigenvalues().iter().copied().collect()
    }
}

/// Quadrature form of the linearised equations for one pair. The phase of α
/// is absorbed into the cavity quadratures, leaving the real coupling
/// G = g|α|; D is the vacuum input noise κ/2 per cavity quadrature.
pub fn build_drift_diffusion(pair: &CoupledModePair) -> DriftDiffusion {
    DriftDiffusion::from_rates(
        pair.effective_detuning,
        pair.kappa,
        pair.mech_frequency,
        pair.enhanced_coupling(),
    )
}

/// Largest real part of the eigenvalues of A.
pub fn spectral_abscissa(dd: &DriftDiffusion) -> f64 {
    dd.eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityVerdict {
    /// 4Δ'ω g²|α|² κ²
    pub s1: f64,
    /// ωΔ'² − g²|α|² Δ'
    pub s2: f64,
    pub stable: bool,
    /// g|α| at which s2 changes sign, √(ωΔ').
    pub critical_g_alpha: f64,
}

/// Two-condition stability criterion. Evaluated with Δ' > 0 for red
/// detuning; s1 > 0 then holds whenever the drive is on.
pub fn stability_check(pair: &CoupledModePair) -> StabilityVerdict {
    let w = pair.mech_frequency;
    let d = pair.effective_detuning;
    let ga2 = pair.enhanced_coupling().powi(2);
    let s1 = 4.0 * d * w * ga2 * pair.kappa * pair.kappa;
    let s2 = w * d * d - ga2 * d;
    StabilityVerdict {
        s1,
        s2,
        stable: s1 > 0.0 && s2 > 0.0,
        critical_g_alpha: if w * d > 0.0 { (w * d).sqrt() } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Axis;
    use nalgebra::Matrix2;

    #[test]
    fn uncoupled_blocks() {
        let dd = DriftDiffusion::from_rates(3.0, 0.5, 2.0, 0.0);
        let a = dd.drift;
        assert_eq!(a.fixed_view::<2, 2>(0, 2), Matrix2::zeros());
        assert_eq!(a.fixed_view::<2, 2>(2, 0), Matrix2::zeros());
        // free rotation at ω
        assert_eq!(
            a.fixed_view::<2, 2>(2, 2),
            Matrix2::new(0.0, 2.0, -2.0, 0.0)
        );
    }

    #[test]
    fn lossless_drift_is_hamiltonian() {
        // A = J H with H symmetric when κ = 0
        let dd = DriftDiffusion::from_rates(3.0, 0.0, 2.0, 0.7);
        let j = Matrix4::new(
            0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0,
        );
        let h = j.transpose() * dd.drift;
        assert!((h - h.transpose()).norm() < 1e-14);
    }

    #[test]
    fn criterion_flips_at_critical_coupling() {
        let (w, d) = (1.0e6f64, 1.0e6f64);
        let crit = (w * d).sqrt();
        let mk = |ga: f64| CoupledModePair::from_rates(Axis::Z, w, 1e5, ga, d);
        assert!(stability_check(&mk(0.99 * crit)).stable);
        assert!(!stability_check(&mk(1.01 * crit)).stable);
        assert!((stability_check(&mk(0.5)).critical_g_alpha - crit).abs() < 1e-6);
    }
}
