use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector, Vector4};

use super::drift::{spectral_abscissa, DriftDiffusion};
use crate::{Error, Result};

/// Tolerance on the smallest symplectic eigenvalue (≥ 1/2 − tol).
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Gaussian state of one cavity–mechanics pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceState {
    /// [s]
    pub time: f64,
    pub cov: Matrix4<f64>,
    pub means: Vector4<f64>,
}

impl CovarianceState {
    pub fn vacuum() -> Self {
        CovarianceState {
            time: 0.0,
            cov: Matrix4::identity() * 0.5,
            means: Vector4::zeros(),
        }
    }

    /// Cavity in vacuum, mechanics thermal with mean occupation `phonons`.
    pub fn thermal(phonons: f64) -> Self {
        let mut s = Self::vacuum();
        s.add_phonons(phonons);
        s
    }

    /// Mixes in `n` incoherent phonons (a collision kick).
    pub fn add_phonons(&mut self, n: f64) {
        self.cov[(2, 2)] += n;
        self.cov[(3, 3)] += n;
    }

    fn occupation(&self, i: usize) -> f64 {
        (self.cov[(i, i)] + self.cov[(i + 1, i + 1)] - 1.0) / 2.0
            + (self.means[i].powi(2) + self.means[i + 1].powi(2)) / 2.0
    }

    /// Mean phonon number ⟨a†a⟩.
    pub fn phonons(&self) -> f64 {
        self.occupation(2)
    }

    /// Mean intracavity fluctuation photon number ⟨δa_c† δa_c⟩.
    pub fn photons(&self) -> f64 {
        self.occupation(0)
    }

    /// The two symplectic eigenvalues (ν₋, ν₊).
    pub fn symplectic_eigenvalues(&self) -> (f64, f64) {
        let v = &self.cov;
        let a: Matrix2<f64> = v.fixed_view::<2, 2>(0, 0).into();
        let b: Matrix2<f64> = v.fixed_view::<2, 2>(2, 2).into();
        let c: Matrix2<f64> = v.fixed_view::<2, 2>(0, 2).into();
        let delta = a.determinant() + b.determinant() + 2.0 * c.determinant();
        let det = v.determinant();
        let root = (delta * delta - 4.0 * det).max(0.0).sqrt();
        let hi2 = (delta + root) / 2.0;
        // ν₋²ν₊² = det V; avoids the cancellation in (Δ − root)/2
        let lo2 = if hi2 > 0.0 { det / hi2 } else { 0.0 };
        (lo2.max(0.0).sqrt(), hi2.sqrt())
    }

    /// Robertson–Schrödinger condition V + iΩ/2 ≥ 0.
    pub fn is_physical(&self, tol: f64) -> bool {
        let sym = (self.cov - self.cov.transpose()).norm() <= 1e-12 * self.cov.norm().max(1.0);
        sym && self.symplectic_eigenvalues().0 >= 0.5 - tol
    }

    /// Upper triangle in row order, (0,0), (0,1), ..., (3,3).
    pub fn upper_triangle(&self) -> [f64; 10] {
        let mut out = [0.0; 10];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                out[k] = self.cov[(i, j)];
                k += 1;
            }
        }
        out
    }
}

/// Solves A V + V Aᵀ + D = 0 for the stationary covariance.
///
/// The equation is solved for the deviation from the vacuum with a
/// minimum-norm least-squares solve, so blocks that are neither damped nor
/// driven (g = 0) stay in the vacuum. Fails when A has an eigenvalue with
/// positive real part or when no consistent solution exists.
pub fn steady_state_covariance(dd: &DriftDiffusion) -> Result<CovarianceState> {
    let a = dd.drift;
    let scale = a.amax().max(dd.diffusion.amax()).max(f64::MIN_POSITIVE);
    let abscissa = spectral_abscissa(dd);
    if abscissa > 1e-10 * scale {
        return Err(Error::Unstable(format!(
            "drift matrix has an eigenvalue with real part {abscissa:e} rad/s"
        )));
    }
    let a = a / scale;
    let vac = Matrix4::identity() * 0.5;
    let rhs = -(dd.diffusion / scale + a * vac + vac * a.transpose());
    // vec(A W + W Aᵀ) = (I ⊗ A + A ⊗ I) vec(W), column-major vec
    let id = Matrix4::<f64>::identity();
    let op: SMatrix<f64, 16, 16> = id.kronecker(&a) + a.kronecker(&id);
    let b = SVector::<f64, 16>::from_column_slice(rhs.as_slice());
    let svd = op.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    let w = svd
        .solve(&b, eps)
        .map_err(|e| Error::Invalid(format!("Lyapunov solve failed: {e}")))?;
    let w = Matrix4::from_column_slice(w.as_slice());
    let cov = vac + (w + w.transpose()) / 2.0;

    let residual = (dd.drift * cov + cov * dd.drift.transpose() + dd.diffusion).norm();
    let dnorm = dd.diffusion.norm();
    let bound = 1e-10 * if dnorm > 0.0 { dnorm } else { scale };
    if residual > bound {
        return Err(Error::Unstable(format!(
            "no stationary covariance: Lyapunov residual {residual:e} exceeds {bound:e}"
        )));
    }
    Ok(CovarianceState {
        time: f64::INFINITY,
        cov,
        means: Vector4::zeros(),
    })
}

/// Largest admissible step, 0.05 min(2π/ω, 1/κ).
pub fn step_bound(dd: &DriftDiffusion) -> f64 {
    let mut bound = 2.0 * PI / dd.mech_frequency;
    if dd.kappa > 0.0 {
        bound = bound.min(1.0 / dd.kappa);
    }
    0.05 * bound
}

/// Largest |λ|·h of an internal RK4 substep. Each requested step is split
/// so that truncation stays well below the physicality tolerance when the
/// cavity starts in vacuum, which sits on the boundary of the physical set.
pub const SUBSTEP_PHASE: f64 = 0.02;

/// Tolerance on the smallest symplectic eigenvalue for a state `v`:
/// `PHYSICALITY_TOL`, widened in proportion to max|V| above 100 quanta,
/// where accumulated rounding alone reaches that level.
pub fn physicality_tolerance(v: &Matrix4<f64>) -> f64 {
    PHYSICALITY_TOL * (v.amax() / 100.0).max(1.0)
}

/// Integrates dV/dt = AV + VAᵀ + D and dm/dt = A m with classical RK4,
/// returning the initial state, every `record_every`-th state and the final
/// state. Steps of `dt` are taken as substeps of at most
/// `SUBSTEP_PHASE/ρ(A)`; physicality is checked after every step of `dt`.
pub fn propagate_covariance(
    dd: &DriftDiffusion,
    initial: &CovarianceState,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<Vec<CovarianceState>> {
    let bound = step_bound(dd);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, bound });
    }
    if !(t_end >= 0.0) {
        return Err(Error::Invalid(format!("t_end must be >= 0, got {t_end}")));
    }
    let steps = (t_end / dt).ceil() as usize;
    let step = if steps > 0 { t_end / steps as f64 } else { 0.0 };
    let rho = dd
        .eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let substeps = ((rho * step / SUBSTEP_PHASE).ceil() as usize).max(1);
    let h = step / substeps as f64;
    let record_every = record_every.max(1);
    let a = dd.drift;
    let at = a.transpose();
    let d = dd.diffusion;
    let fv = |v: &Matrix4<f64>| a * v + v * at + d;
    let fm = |m: &Vector4<f64>| a * m;

    let mut out = Vec::with_capacity(steps / record_every + 2);
    let mut state = *initial;
    out.push(state);
    let t0 = initial.time;
    for i in 1..=steps {
        let (mut v, mut m) = (state.cov, state.means);
        for _ in 0..substeps {
            let k1 = fv(&v);
            let k2 = fv(&(v + k1 * (h / 2.0)));
            let k3 = fv(&(v + k2 * (h / 2.0)));
            let k4 = fv(&(v + k3 * h));
            v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            v = (v + v.transpose()) / 2.0;
            let l1 = fm(&m);
            let l2 = fm(&(m + l1 * (h / 2.0)));
            let l3 = fm(&(m + l2 * (h / 2.0)));
            let l4 = fm(&(m + l3 * h));
            m += (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0);
        }
        state = CovarianceState {
            time: t0 + i as f64 * step,
            cov: v,
            means: m,
        };
        if !state.is_physical(physicality_tolerance(&v)) {
            return Err(Error::Unphysical {
                time: state.time,
                nu_min: state.symplectic_eigenvalues().0,
            });
        }
        if i % record_every == 0 || i == steps {
            out.push(state);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncoupled_steady_state_is_vacuum() {
        let dd = DriftDiffusion::from_rates(1e6, 2e5, 1e6, 0.0);
        let s = steady_state_covariance(&dd).unwrap();
        assert!((s.cov - Matrix4::identity() * 0.5).norm() < 1e-12);
    }

    #[test]
    fn lyapunov_residual_is_small() {
        let dd = DriftDiffusion::from_rates(1e6, 1e5, 1e6, 5e3);
        let s = steady_state_covariance(&dd).unwrap();
        let r = (dd.drift * s.cov + s.cov * dd.drift.transpose() + dd.diffusion).norm();
        assert!(r < 1e-10 * dd.diffusion.norm(), "{r:e}");
        assert!(s.is_physical(PHYSICALITY_TOL));
    }

    #[test]
    fn excess_over_vacuum_scales_with_diffusion() {
        // V is linear in D
        let base = DriftDiffusion::from_rates(1e6, 1e5, 1e6, 5e3);
        let mut scaled = base;
        scaled.diffusion *= 3.0;
        let v1 = steady_state_covariance(&base).unwrap().cov;
        let v3 = steady_state_covariance(&scaled).unwrap().cov;
        assert!((v3 - v1 * 3.0).norm() < 1e-9);
    }

    #[test]
    fn unstable_drift_is_rejected() {
        // blue-detuned: Δ' = −ω heats
        let dd = DriftDiffusion::from_rates(-1e6, 1e5, 1e6, 5e3);
        assert!(matches!(
            steady_state_covariance(&dd),
            Err(Error::Unstable(_))
        ));
    }

    #[test]
    fn steady_state_is_a_fixed_point_of_propagation() {
        let dd = DriftDiffusion::from_rates(1e6, 1e5, 1e6, 5e3);
        let s = CovarianceState {
            time: 0.0,
            ..steady_state_covariance(&dd).unwrap()
        };
        let dt = step_bound(&dd);
        let traj = propagate_covariance(&dd, &s, 2000.0 * dt, dt, 100).unwrap();
        for st in &traj {
            assert!((st.cov - s.cov).amax() < 1e-8);
        }
    }

    #[test]
    fn step_size_violation() {
        let dd = DriftDiffusion::from_rates(1e6, 1e5, 1e6, 5e3);
        let dt = 2.0 * step_bound(&dd);
        assert!(matches!(
            propagate_covariance(&dd, &CovarianceState::vacuum(), 1e-3, dt, 1),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn unphysical_start_aborts() {
        let dd = DriftDiffusion::from_rates(1e6, 1e5, 1e6, 5e3);
        let mut s = CovarianceState::vacuum();
        s.cov[(2, 2)] = 0.1;
        s.cov[(3, 3)] = 0.1;
        let dt = step_bound(&dd);
        assert!(matches!(
            propagate_covariance(&dd, &s, 10.0 * dt, dt, 1),
            Err(Error::Unphysical { .. })
        ));
    }

    #[test]
    fn symplectic_eigenvalues_of_thermal_state() {
        let s = CovarianceState::thermal(2.0);
        let (lo, hi) = s.symplectic_eigenvalues();
        assert!((lo - 0.5).abs() < 1e-12);
        assert!((hi - 2.5).abs() < 1e-12);
        assert!((s.phonons() - 2.0).abs() < 1e-15);
    }
}
