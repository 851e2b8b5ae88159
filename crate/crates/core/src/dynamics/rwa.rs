use nalgebra::{Complex, Matrix2, Matrix4, Vector4};
use serde::Serialize;

use crate::coupling::CoupledModePair;
use crate::{Error, Result};

/// Largest admissible κ/ω, G/ω and |Δ' − ω|/ω for the reduced model.
pub const RWA_RATIO_LIMIT: f64 = 0.2;

/// Single-mode equation left after eliminating the cavity:
/// ȧ = −γ a − i c a_in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdiabaticDecay {
    /// γ = 2G²/κ [1/s]
    pub amplitude_rate: f64,
    /// 2γ = 4G²/κ = 1/τ [1/s]
    pub energy_rate: f64,
    /// c = 2G/√κ [1/√s]
    pub noise_coupling: f64,
}

/// Beam-splitter model in the frame rotating at ω:
/// ȧ_c = −(iδ + κ/2) a_c − iG a + √κ a_in, ȧ = −iG a_c, with δ = Δ' − ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RwaModel {
    pub mech_frequency: f64,
    pub kappa: f64,
    /// G = g|α| [rad/s]
    pub g_alpha: f64,
    /// δ = Δ' − ω [rad/s]
    pub detuning_error: f64,
}

impl RwaModel {
    /// Generator acting on (a_c, a).
    pub fn generator(&self) -> Matrix2<Complex<f64>> {
        let i = Complex::i();
        let g = self.g_alpha;
        Matrix2::new(
            -i * self.detuning_error - Complex::from(self.kappa / 2.0),
            -i * g,
            -i * g,
            Complex::from(0.0),
        )
    }

    /// Linear map on the normally ordered moments (N_c, N_m, Re C, Im C),
    /// C = ⟨a_c† a⟩. Vacuum input adds nothing to normally ordered moments.
    pub fn moment_matrix(&self) -> Matrix4<f64> {
        let (k, g, d) = (self.kappa, self.g_alpha, self.detuning_error);
        #[rustfmt::skip]
        let m = Matrix4::new(
            -k,   0.0, 0.0,      2.0 * g,
            0.0,  0.0, 0.0,     -2.0 * g,
            0.0,  0.0, -k / 2.0, -d,
            -g,   g,   d,        -k / 2.0,
        );
        m
    }

    pub fn adiabatic(&self) -> AdiabaticDecay {
        let g2 = self.g_alpha * self.g_alpha;
        AdiabaticDecay {
            amplitude_rate: 2.0 * g2 / self.kappa,
            energy_rate: 4.0 * g2 / self.kappa,
            noise_coupling: 2.0 * self.g_alpha / self.kappa.sqrt(),
        }
    }

    /// τ = κ/(4G²) [s].
    pub fn decay_time(&self) -> f64 {
        1.0 / self.adiabatic().energy_rate
    }

    /// Moments (N_c, N_m, Re C, Im C) at each time, from n0 phonons and an
    /// empty cavity at t = 0.
    pub fn moments(&self, n0: f64, times: &[f64]) -> Vec<Vector4<f64>> {
        let m = self.moment_matrix();
        let x0 = Vector4::new(0.0, n0, 0.0, 0.0);
        times.iter().map(|&t| (m * t).exp() * x0).collect()
    }

    /// Phonon number at each time.
    pub fn phonons(&self, n0: f64, times: &[f64]) -> Vec<f64> {
        self.moments(n0, times).iter().map(|x| x[1]).collect()
    }
}

/// Reduced model for a pair, refusing parameters outside the regime where
/// the counter-rotating terms can be dropped.
pub fn rwa_reduced_step(pair: &CoupledModePair) -> Result<RwaModel> {
    let w = pair.mech_frequency;
    let model = RwaModel {
        mech_frequency: w,
        kappa: pair.kappa,
        g_alpha: pair.enhanced_coupling(),
        detuning_error: pair.effective_detuning - w,
    };
    let checks = [
        ("κ/ω", model.kappa / w),
        ("g|α|/ω", model.g_alpha / w),
        ("|Δ' − ω|/ω", model.detuning_error.abs() / w),
    ];
    for (name, ratio) in checks {
        if !(ratio <= RWA_RATIO_LIMIT) {
            return Err(Error::Regime(format!(
                "{} axis: {name} = {ratio:.3} exceeds {RWA_RATIO_LIMIT}",
                pair.axis
            )));
        }
    }
    Ok(model)
}

/// Output photon flux after a phonon excess n0 at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputPulse {
    /// τ [s]
    pub duration: f64,
    /// [s]
    pub times: Vec<f64>,
    /// (4G²/κ)·n0·exp(−t/τ) [photons/s]
    pub flux: Vec<f64>,
    /// Simpson integral of `flux` over [0, 40τ].
    pub integrated: f64,
    /// Exact ∫₀^∞ flux dt = n0.
    pub analytic: f64,
}

const PULSE_SPAN: f64 = 40.0;
const PULSE_POINTS: usize = 4001;

pub fn output_pulse(pair: &CoupledModePair, n0: f64) -> Result<OutputPulse> {
    let model = rwa_reduced_step(pair)?;
    let rate = model.adiabatic().energy_rate;
    let tau = 1.0 / rate;
    let h = PULSE_SPAN * tau / (PULSE_POINTS - 1) as f64;
    let times: Vec<f64> = (0..PULSE_POINTS).map(|i| i as f64 * h).collect();
    let flux: Vec<f64> = times
        .iter()
        .map(|&t| rate * n0 * (-t / tau).exp())
        .collect();
    Ok(OutputPulse {
        duration: tau,
        integrated: simpson(&flux, h),
        times,
        flux,
        analytic: n0,
    })
}

/// Composite Simpson rule on an odd number of equally spaced samples.
fn simpson(y: &[f64], h: f64) -> f64 {
    debug_assert!(y.len() % 2 == 1);
    let n = y.len() - 1;
    let inner: f64 = (1..n)
        .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * y[i])
        .sum();
    (y[0] + y[n] + inner) * h / 3.0
}
