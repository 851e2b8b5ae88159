use nalgebra::{Matrix4, SMatrix, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::covariance::CovarianceState;
use super::drift::DriftDiffusion;
use crate::rng::{substream, Stream};
use crate::{Error, Result};

/// Single-trajectory sampler of dR = A R dt + dW, ⟨dW dWᵀ⟩ = D dt, using the
/// exact transition of the linear part.
///
/// Optional intensity noise modulates the trap stiffness, ω² → ω²(1 + ε(t)),
/// with ε white of one-sided PSD `s` [1/Hz]; it enters as the Itô kick
/// ΔP_m = −ω X_m √(πs) ΔW.
#[derive(Debug, Clone)]
pub struct LangevinSampler {
    pub dt: f64,
    transition: Matrix4<f64>,
    noise_root: Matrix4<f64>,
    mech_frequency: f64,
    intensity_noise: f64,
}

/// Symmetric square root of a positive semidefinite matrix; small negative
/// eigenvalues from rounding are clamped to zero.
fn psd_sqrt(m: &Matrix4<f64>) -> Matrix4<f64> {
    let sym = (m + m.transpose()) / 2.0;
    let eig = sym.symmetric_eigen();
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    eig.eigenvectors * Matrix4::from_diagonal(&root) * eig.eigenvectors.transpose()
}

impl LangevinSampler {
    pub fn new(dd: &DriftDiffusion, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Invalid(format!(
                "sampler step must be positive, got {dt}"
            )));
        }
        // Van Loan: exp([[−A, D], [0, Aᵀ]] dt) = [[·, F12], [0, F22]],
        // Φ = F22ᵀ, Q = Φ F12.
        let mut m = SMatrix::<f64, 8, 8>::zeros();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&(-dd.drift * dt));
        m.fixed_view_mut::<4, 4>(0, 4)
            .copy_from(&(dd.diffusion * dt));
        m.fixed_view_mut::<4, 4>(4, 4)
            .copy_from(&(dd.drift.transpose() * dt));
        let f = m.exp();
        let transition: Matrix4<f64> = f.fixed_view::<4, 4>(4, 4).transpose();
        let f12: Matrix4<f64> = f.fixed_view::<4, 4>(0, 4).into();
        let q = transition * f12;
        Ok(LangevinSampler {
            dt,
            transition,
            noise_root: psd_sqrt(&q),
            mech_frequency: dd.mech_frequency,
            intensity_noise: 0.0,
        })
    }

    /// Adds trap-intensity noise of flat one-sided PSD `s` [1/Hz].
    pub fn with_intensity_noise(mut self, s: f64) -> Self {
        self.intensity_noise = s.max(0.0);
        self
    }

    /// Energy e-fold rate the intensity noise should produce, (π/2)ω²s.
    pub fn expected_heating_rate(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 * self.mech_frequency.powi(2) * self.intensity_noise
    }

    /// Draws an initial point from a Gaussian state.
    pub fn initial<R: Rng>(&self, state: &CovarianceState, rng: &mut R) -> Vector4<f64> {
        state.means + psd_sqrt(&state.cov) * normals(rng)
    }

    pub fn step<R: Rng>(&self, x: &mut Vector4<f64>, rng: &mut R) {
        *x = self.transition * *x + self.noise_root * normals(rng);
        if self.intensity_noise > 0.0 {
            let dw: f64 = rng.sample::<f64, _>(StandardNormal) * self.dt.sqrt();
            x[3] -= self.mech_frequency
                * x[2]
                * (std::f64::consts::PI * self.intensity_noise).sqrt()
                * dw;
        }
    }

    /// Runs `steps` steps, returning the starting point and every
    /// `record_every`-th point.
    pub fn trajectory<R: Rng>(
        &self,
        start: Vector4<f64>,
        steps: usize,
        record_every: usize,
        rng: &mut R,
    ) -> Vec<Vector4<f64>> {
        let record_every = record_every.max(1);
        let mut x = start;
        let mut out = vec![x];
        for i in 1..=steps {
            self.step(&mut x, rng);
            if i % record_every == 0 {
                out.push(x);
            }
        }
        out
    }

    /// Ensemble estimate of the mechanical energy growth rate over `t_end`.
    ///
    /// Each run starts from `initial` and reports R = E(t_end)/E(0) with
    /// E = (X_m² + P_m²)/2; the estimate is ln⟨R⟩/t_end and its standard
    /// error follows from the spread of R across runs.
    pub fn energy_growth(
        &self,
        initial: &CovarianceState,
        t_end: f64,
        runs: u32,
        seed: u64,
    ) -> EnergyGrowth {
        let steps = (t_end / self.dt).round() as usize;
        let ratios: Vec<f64> = (0..runs)
            .into_par_iter()
            .map(|run| {
                let mut rng = substream(seed, Stream::Langevin, run);
                let mut x = self.initial(initial, &mut rng);
                let e0 = x[2] * x[2] + x[3] * x[3];
                for _ in 0..steps {
                    self.step(&mut x, &mut rng);
                }
                (x[2] * x[2] + x[3] * x[3]) / e0
            })
            .collect();
        let n = ratios.len() as f64;
        let mean = ratios.iter().sum::<f64>() / n;
        let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let duration = steps as f64 * self.dt;
        EnergyGrowth {
            rate: mean.ln() / duration,
            std_error: (var / n).sqrt() / mean / duration,
            expected: self.expected_heating_rate(),
            runs,
            duration,
        }
    }
}

fn normals<R: Rng>(rng: &mut R) -> Vector4<f64> {
    Vector4::from_fn(|_, _| rng.sample(StandardNormal))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyGrowth {
    /// Estimated e-fold rate [1/s].
    pub rate: f64,
    /// One standard error of `rate` [1/s].
    pub std_error: f64,
    /// (π/2)ω²s [1/s].
    pub expected: f64,
    pub runs: u32,
    /// [s]
    pub duration: f64,
}

impl EnergyGrowth {
    /// |rate − expected| in units of the standard error.
    pub fn z_score(&self) -> f64 {
        (self.rate - self.expected).abs() / self.std_error
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::steady_state_covariance;
    use crate::rng::stream;

    #[test]
    fn transition_matches_matrix_exponential() {
        let dd = DriftDiffusion::from_rates(1e6, 1e5, 1e6, 5e3);
        let s = LangevinSampler::new(&dd, 1e-7).unwrap();
        assert!((s.transition - (dd.drift * 1e-7).exp()).amax() < 1e-12);
    }

    #[test]
    fn stationary_ensemble_matches_lyapunov() {
        let dd = DriftDiffusion::from_rates(1e6, 2e5, 1e6, 5e4);
        let v = steady_state_covariance(&dd).unwrap();
        let s = LangevinSampler::new(&dd, 2e-7).unwrap();
        // one exact step keeps the stationary covariance
        let next = s.transition * v.cov * s.transition.transpose() + s.noise_root * s.noise_root;
        assert!((next - v.cov).amax() < 1e-9);
        let mut rng = stream(3, Stream::Langevin);
        let mut x = s.initial(&v, &mut rng);
        let mut acc = 0.0;
        let n = 20000;
        for _ in 0..n {
            for _ in 0..10 {
                s.step(&mut x, &mut rng);
            }
            acc += (x[2] * x[2] + x[3] * x[3] - 1.0) / 2.0;
        }
        let mean = acc / n as f64;
        assert!(
            (mean - v.phonons()).abs() < 0.05,
            "{mean} vs {}",
            v.phonons()
        );
    }
}
