//! Cavity-mode potentials, single-photon couplings and steady intracavity
//! amplitudes.
//!
//! Sign convention: detunings are Δ = ω_c − ω_L, so a red-detuned (cooling)
//! drive has Δ > 0 and the optimal sideband drive has Δ' = +ω_j. The
//! linearised equations of motion read
//!
//! ```text
//! da_c/dt = (−iΔ' − κ/2) a_c − i g α (a + a†) + √κ a_in
//! da/dt   = −iω a − i g (α a_c† + α* a_c)
//! ```
//!
//! Expressions written with the opposite sign (cooling at Δ' = −ω) convert
//! with [`to_opposite_sign_convention`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Complex;
use serde::Serialize;

use crate::constants::EPSILON_0;
use crate::params::{
    clausius_mossotti, mode_volumes, polarizability, sphere_mass, zero_point_fluctuation, Axis,
    CavityGeometry, SphereProperties, SystemConfig, TrapConfig,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ModeKind {
    #[serde(rename = "TEM00")]
    Tem00,
    #[serde(rename = "TEM01")]
    Tem01,
    #[serde(rename = "TEM10")]
    Tem10,
}

impl ModeKind {
    /// The motional axis this mode's intensity gradient addresses.
    pub fn axis(self) -> Axis {
        match self {
            ModeKind::Tem00 => Axis::Z,
            ModeKind::Tem01 => Axis::X,
            ModeKind::Tem10 => Axis::Y,
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeKind::Tem00 => "TEM00",
            ModeKind::Tem01 => "TEM01",
            ModeKind::Tem10 => "TEM10",
        })
    }
}

impl FromStr for ModeKind {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TEM00" => Ok(ModeKind::Tem00),
            "TEM01" => Ok(ModeKind::Tem01),
            "TEM10" => Ok(ModeKind::Tem10),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Polarization {
    H,
    V,
}

impl FromStr for Polarization {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.trim() {
            "H" | "h" => Ok(Polarization::H),
            "V" | "v" => Ok(Polarization::V),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detuning {
    /// Choose Δ so that the effective detuning Δ' equals ω_j.
    RedSideband,
    /// Bare detuning Δ = ω_c − ω_L [rad/s].
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveLevel {
    /// Drive strength Ω [rad/s].
    Strength(f64),
    /// Target mean intracavity photon number |α|².
    Photons(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeDrive {
    pub mode: ModeKind,
    pub detuning: Detuning,
    pub drive: DriveLevel,
    pub polarization: Polarization,
    /// Resonance offset of this transverse mode from ω_c [rad/s]; only used
    /// to tell the drive lasers apart.
    pub mode_frequency_offset: f64,
}

/// One cavity mode coupled to one motional mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoupledModePair {
    pub axis: Axis,
    /// ω_j [rad/s]
    pub mech_frequency: f64,
    /// κ_j [rad/s]
    pub kappa: f64,
    /// g_j [rad/s]
    pub coupling: f64,
    #[serde(serialize_with = "serialize_complex")]
    pub amplitude: Complex<f64>,
    /// Δ'_cj [rad/s]
    pub effective_detuning: f64,
    /// Bare Δ_cj [rad/s]
    pub detuning: f64,
    /// Ω_j [rad/s]
    pub drive_strength: f64,
    /// ω_cj [rad/s]
    pub cavity_frequency: f64,
}

fn serialize_complex<S: serde::Serializer>(
    z: &Complex<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl CoupledModePair {
    pub fn photons(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    /// Linearised coupling G = g|α| [rad/s].
    pub fn enhanced_coupling(&self) -> f64 {
        self.coupling.abs() * self.amplitude.norm()
    }

    /// A pair with a real amplitude `g_alpha / g` built directly from rates;
    /// convenient for studies that do not start from a geometry.
    pub fn from_rates(
        axis: Axis,
        omega: f64,
        kappa: f64,
        g_alpha: f64,
        effective_detuning: f64,
    ) -> Self {
        CoupledModePair {
            axis,
            mech_frequency: omega,
            kappa,
            coupling: 1.0,
            amplitude: Complex::new(g_alpha, 0.0),
            effective_detuning,
            detuning: effective_detuning,
            drive_strength: g_alpha
                * (4.0 * effective_detuning * effective_detuning + kappa * kappa).sqrt(),
            cavity_frequency: f64::INFINITY,
        }
    }
}

/// Maps a detuning between this crate's convention and the opposite-sign one.
pub fn to_opposite_sign_convention(detuning: f64) -> f64 {
    -detuning
}

// ---------------------------------------------------------------------------
// Mode geometry

/// Everything needed to evaluate the mode potentials at a point.
#[derive(Debug, Clone, Copy)]
pub struct ModeField<'a> {
    pub geometry: &'a CavityGeometry,
    pub sphere: &'a SphereProperties,
    /// Standing-wave phases (φ1, φ2, φ3).
    pub phases: [f64; 3],
    /// Use the finite-ε Clausius–Mossotti factor in the potential prefactor.
    pub finite_permittivity: bool,
}

/// Position as (x, y, z) [m].
pub type Position = [f64; 3];

impl<'a> ModeField<'a> {
    pub fn new(
        geometry: &'a CavityGeometry,
        sphere: &'a SphereProperties,
        phases: [f64; 3],
    ) -> Self {
        ModeField {
            geometry,
            sphere,
            phases,
            finite_permittivity: false,
        }
    }

    fn check_position(&self, p: Position) -> Result<()> {
        let rho = p[0].hypot(p[1]);
        if !(rho <= self.geometry.waist) || !p[2].is_finite() {
            return Err(Error::Invalid(format!(
                "position ({:e}, {:e}, {:e}) m lies beyond one waist ({:e} m) from the cavity axis",
                p[0], p[1], p[2], self.geometry.waist
            )));
        }
        Ok(())
    }

    /// (3V / 2V_cj) ω_c, with the Clausius–Mossotti factor if requested.
    fn prefactor(&self, mode: ModeKind) -> f64 {
        let vc = mode_volumes(self.geometry)[mode.axis().index()];
        let cm = if self.finite_permittivity {
            clausius_mossotti(self.sphere.permittivity)
        } else {
            1.0
        };
        3.0 * self.sphere.volume() * cm / (2.0 * vc) * self.geometry.mode_frequency()
    }

    fn phase(&self, mode: ModeKind) -> f64 {
        self.phases[mode.axis().index()]
    }

    /// Normalised intensity profile |f_j(r)|² (dimensionless, ≤ 1 for
    /// TEM00).
    pub fn intensity_profile(&self, mode: ModeKind, p: Position) -> f64 {
        let w2 = self.geometry.waist.powi(2);
        let envelope = (-2.0 * (p[0] * p[0] + p[1] * p[1]) / w2).exp();
        let standing = (self.geometry.wavenumber() * p[2] + self.phase(mode))
            .cos()
            .powi(2);
        let transverse = match mode {
            ModeKind::Tem00 => 1.0,
            ModeKind::Tem01 => p[0] * p[0] / w2,
            ModeKind::Tem10 => p[1] * p[1] / w2,
        };
        transverse * envelope * standing
    }

    /// U_j at `p` [rad/s].
    pub fn potential(&self, mode: ModeKind, p: Position) -> Result<f64> {
        self.check_position(p)?;
        Ok(-self.prefactor(mode) * self.intensity_profile(mode, p))
    }

    /// Analytic gradient (∂/∂x, ∂/∂y, ∂/∂z) of U_j [rad/s/m].
    pub fn gradient(&self, mode: ModeKind, p: Position) -> Result<[f64; 3]> {
        self.check_position(p)?;
        let [x, y, z] = p;
        let w2 = self.geometry.waist.powi(2);
        let k = self.geometry.wavenumber();
        let theta = k * z + self.phase(mode);
        let envelope = (-2.0 * (x * x + y * y) / w2).exp();
        let standing = theta.cos().powi(2);
        let d_standing = -k * (2.0 * theta).sin();
        // transverse factor h(x, y) and its partials
        let (h, hx, hy) = match mode {
            ModeKind::Tem00 => (1.0, 0.0, 0.0),
            ModeKind::Tem01 => (x * x / w2, 2.0 * x / w2, 0.0),
            ModeKind::Tem10 => (y * y / w2, 0.0, 2.0 * y / w2),
        };
        let ex = -4.0 * x / w2;
        let ey = -4.0 * y / w2;
        let a = -self.prefactor(mode);
        Ok([
            a * (hx + h * ex) * envelope * standing,
            a * (hy + h * ey) * envelope * standing,
            a * h * envelope * d_standing,
        ])
    }

    /// ∫ |f_j|² d³r over the cavity: the transverse Gaussian moment integral
    /// times L/2 for the standing wave.
    pub fn mode_integral(&self, mode: ModeKind) -> f64 {
        let w = self.geometry.waist;
        // ∫ exp(-2u²/w²) du and ∫ u² exp(-2u²/w²) du over the real line
        let m0 = w * (PI / 2.0).sqrt();
        let m2 = w.powi(3) / 4.0 * (PI / 2.0).sqrt();
        let transverse = match mode {
            ModeKind::Tem00 => m0 * m0,
            ModeKind::Tem01 | ModeKind::Tem10 => m2 * m0 / (w * w),
        };
        transverse * self.geometry.length / 2.0
    }

    /// Sphere-induced cavity resonance shift from first-order perturbation
    /// theory with a point dipole of polarizability α_ind [rad/s].
    pub fn frequency_shift(&self, mode: ModeKind, p: Position) -> Result<f64> {
        self.check_position(p)?;
        let alpha = polarizability(self.sphere);
        Ok(
            -alpha * self.intensity_profile(mode, p) / (2.0 * EPSILON_0 * self.mode_integral(mode))
                * self.geometry.mode_frequency(),
        )
    }
}

pub fn potential(
    mode: ModeKind,
    position: Position,
    geometry: &CavityGeometry,
    sphere: &SphereProperties,
    phases: [f64; 3],
) -> Result<f64> {
    ModeField::new(geometry, sphere, phases).potential(mode, position)
}

pub fn cavity_frequency_shift(
    mode: ModeKind,
    position: Position,
    geometry: &CavityGeometry,
    sphere: &SphereProperties,
    phases: [f64; 3],
) -> Result<f64> {
    ModeField::new(geometry, sphere, phases).frequency_shift(mode, position)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingStrength {
    pub mode: ModeKind,
    pub axis: Axis,
    /// g_j [rad/s]
    pub g: f64,
    /// q_zpf,j [m]
    pub zero_point_fluctuation: f64,
    /// ∇U_j at the trap centre (x, y, z) [rad/s/m].
    pub gradient: [f64; 3],
    /// Largest off-axis gradient component relative to the on-axis one.
    pub cross_gradient_ratio: f64,
    pub warning: Option<String>,
}

/// Relative cross-gradient above which the per-axis decoupling is flagged.
pub const CROSS_GRADIENT_LIMIT: f64 = 0.1;

/// g_j = q_zpf,j ∂U_j/∂q_j at the trap centre.
pub fn coupling_strength(
    mode: ModeKind,
    trap: &TrapConfig,
    field: &ModeField<'_>,
    mass: f64,
) -> Result<CouplingStrength> {
    let axis = mode.axis();
    let grad = field.gradient(mode, trap.position)?;
    let on_axis = match axis {
        Axis::X => grad[0],
        Axis::Y => grad[1],
        Axis::Z => grad[2],
    };
    let cross = match axis {
        Axis::X => grad[1].abs().max(grad[2].abs()),
        Axis::Y => grad[0].abs().max(grad[2].abs()),
        Axis::Z => grad[0].abs().max(grad[1].abs()),
    };
    let ratio = if on_axis != 0.0 {
        cross / on_axis.abs()
    } else if cross == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let warning = (ratio > CROSS_GRADIENT_LIMIT).then(|| {
        format!(
            "{mode}: off-axis gradient is {:.1}% of the {axis}-gradient (limit {:.0}%)",
            100.0 * ratio,
            100.0 * CROSS_GRADIENT_LIMIT
        )
    });
    let q = zero_point_fluctuation(mass, trap.omega(axis));
    Ok(CouplingStrength {
        mode,
        axis,
        g: q * on_axis,
        zero_point_fluctuation: q,
        gradient: grad,
        cross_gradient_ratio: ratio,
        warning,
    })
}

// ---------------------------------------------------------------------------
// Intracavity amplitude

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude {
    pub alpha: Complex<f64>,
    pub effective_detuning: f64,
    pub iterations: usize,
}

impl Amplitude {
    pub fn photons(&self) -> f64 {
        self.alpha.norm_sqr()
    }
}

const AMPLITUDE_TOL: f64 = 1e-12;
const AMPLITUDE_MAX_ITER: usize = 10_000;
const RELAXATION: f64 = 0.5;

/// α = −iΩ / (2iΔ' + κ) for a given effective detuning.
pub fn steady_amplitude(drive_strength: f64, effective_detuning: f64, kappa: f64) -> Complex<f64> {
    Complex::new(0.0, -drive_strength) / Complex::new(kappa, 2.0 * effective_detuning)
}

/// Solves α = −iΩ/(2iΔ' + κ) together with Δ' = Δ + 2g²|α|²/ω_c by
/// damped fixed-point iteration on |α|².
pub fn intracavity_amplitude(
    drive_strength: f64,
    detuning: f64,
    kappa: f64,
    g: f64,
    cavity_frequency: f64,
) -> Result<Amplitude> {
    if !(kappa > 0.0) {
        return Err(Error::Invalid("kappa must be > 0".into()));
    }
    let c = 2.0 * g * g / cavity_frequency;
    let omega2 = drive_strength * drive_strength;
    let map = |n: f64| omega2 / (4.0 * (detuning + c * n).powi(2) + kappa * kappa);
    let mut n = map(0.0);
    for it in 1..=AMPLITUDE_MAX_ITER {
        let next = RELAXATION * n + (1.0 - RELAXATION) * map(n);
        let done = (next - n).abs() <= AMPLITUDE_TOL * next.abs().max(f64::MIN_POSITIVE);
        n = next;
        if done {
            let effective_detuning = detuning + c * n;
            return Ok(Amplitude {
                alpha: steady_amplitude(drive_strength, effective_detuning, kappa),
                effective_detuning,
                iterations: it,
            });
        }
    }
    Err(Error::Bistable {
        fixed_points: photon_fixed_points(drive_strength, detuning, kappa, g, cavity_frequency),
    })
}

/// All non-negative roots n of n (4(Δ + c n)² + κ²) = Ω², c = 2g²/ω_c.
pub fn photon_fixed_points(
    drive_strength: f64,
    detuning: f64,
    kappa: f64,
    g: f64,
    cavity_frequency: f64,
) -> Vec<f64> {
    let c = 2.0 * g * g / cavity_frequency;
    let omega2 = drive_strength * drive_strength;
    let p = |n: f64| n * (4.0 * (detuning + c * n).powi(2) + kappa * kappa) - omega2;
    if c == 0.0 {
        return vec![omega2 / (4.0 * detuning * detuning + kappa * kappa)];
    }
    // critical points of the cubic: 12c²n² + 16Δc n + 4Δ² + κ² = 0
    let (qa, qb, qc) = (
        12.0 * c * c,
        16.0 * detuning * c,
        4.0 * detuning * detuning + kappa * kappa,
    );
    let disc = qb * qb - 4.0 * qa * qc;
    let mut knots = vec![0.0];
    if disc > 0.0 {
        let s = disc.sqrt();
        let mut r = [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)];
        r.sort_by(f64::total_cmp);
        knots.extend(r.into_iter().filter(|&x| x > 0.0));
    }
    // p grows like 4c²n³; bracket the last root
    let mut hi = knots.last().copied().unwrap_or(0.0).max(1.0);
    while p(hi) < 0.0 {
        hi *= 2.0;
    }
    knots.push(hi);
    let mut roots = Vec::new();
    for w in knots.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (pa, pb) = (p(a), p(b));
        if pa == 0.0 {
            roots.push(a);
            continue;
        }
        if pa.signum() == pb.signum() {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if p(m).signum() == pa.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    roots
}

/// Drive strength Ω that produces `photons` = |α|² at bare detuning Δ.
pub fn drive_for_photons(
    photons: f64,
    detuning: f64,
    kappa: f64,
    g: f64,
    cavity_frequency: f64,
) -> f64 {
    let effective = detuning + 2.0 * g * g * photons / cavity_frequency;
    (photons * (4.0 * effective * effective + kappa * kappa)).sqrt()
}

// ---------------------------------------------------------------------------
// Assembly from a configuration

#[derive(Debug, Clone)]
pub struct PairSet {
    /// Pairs in axis order (z, x, y).
    pub pairs: [CoupledModePair; 3],
    pub couplings: [CouplingStrength; 3],
    pub warnings: Vec<String>,
}

impl PairSet {
    pub fn pair(&self, axis: Axis) -> &CoupledModePair {
        &self.pairs[axis.index()]
    }
}

/// Evaluates couplings at the trap centre and solves for each mode's
/// intracavity amplitude.
pub fn build_pairs(config: &SystemConfig) -> Result<PairSet> {
    let mut field = ModeField::new(&config.cavity, &config.sphere, config.trap.phases);
    field.finite_permittivity = config.finite_permittivity;
    let mass = sphere_mass(&config.sphere);
    let kappa = config.cavity.kappa();
    let mut warnings = Vec::new();
    let mut couplings = Vec::with_capacity(3);
    let mut pairs = Vec::with_capacity(3);
    for axis in Axis::ALL {
        let drive = config.drive(axis);
        let cs = coupling_strength(drive.mode, &config.trap, &field, mass)?;
        if let Some(w) = &cs.warning {
            warnings.push(w.clone());
        }
        let omega = config.trap.omega(axis);
        let g = cs.g;
        let wc = config.cavity.mode_frequency() + drive.mode_frequency_offset;
        let shift = |n: f64| 2.0 * g * g * n / wc;
        let (detuning, strength, amp) = match (drive.detuning, drive.drive) {
            (Detuning::RedSideband, DriveLevel::Photons(n)) => {
                let detuning = omega - shift(n);
                let strength = drive_for_photons(n, detuning, kappa, g, wc);
                (detuning, strength, steady_amplitude(strength, omega, kappa))
            }
            (Detuning::RedSideband, DriveLevel::Strength(s)) => {
                let alpha = steady_amplitude(s, omega, kappa);
                (omega - shift(alpha.norm_sqr()), s, alpha)
            }
            (Detuning::Value(d), DriveLevel::Photons(n)) => {
                let strength = drive_for_photons(n, d, kappa, g, wc);
                (d, strength, steady_amplitude(strength, d + shift(n), kappa))
            }
            (Detuning::Value(d), DriveLevel::Strength(s)) => {
                let a = intracavity_amplitude(s, d, kappa, g, wc)?;
                (d, s, a.alpha)
            }
        };
        pairs.push(CoupledModePair {
            axis,
            mech_frequency: omega,
            kappa,
            coupling: g,
            amplitude: amp,
            effective_detuning: detuning + shift(amp.norm_sqr()),
            detuning,
            drive_strength: strength,
            cavity_frequency: wc,
        });
        couplings.push(cs);
    }
    let laser = |i: usize| pairs[i].cavity_frequency - pairs[i].detuning;
    if (laser(0) - laser(1)).abs() < kappa {
        warnings.push(
            "TEM00 and TEM01 drive lasers are within one linewidth of each other; \
             the modes are no longer separable by frequency"
                .to_owned(),
        );
    }
    Ok(PairSet {
        pairs: pairs.try_into().expect("three pairs"),
        couplings: couplings.try_into().expect("three couplings"),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::LinewidthSpec;

    fn geometry() -> CavityGeometry {
        CavityGeometry {
            length: 5e-3,
            waist: 10e-6,
            wavelength: 1.5e-6,
            linewidth: LinewidthSpec::Kappa(5e5),
        }
    }

    fn sphere() -> SphereProperties {
        SphereProperties {
            radius: 50e-9,
            density: 1960.0,
            permittivity: 2.0,
            surface_temperature: 300.0,
        }
    }

    const CANONICAL_PHASES: [f64; 3] = [PI / 4.0, 0.0, 0.0];

    #[test]
    fn tem01_vanishes_on_axis() {
        let (g, s) = (geometry(), sphere());
        assert_eq!(
            potential(ModeKind::Tem01, [0.0, 1e-6, 0.0], &g, &s, CANONICAL_PHASES).unwrap(),
            0.0
        );
    }

    #[test]
    fn tem00_at_origin_is_full_prefactor() {
        let (g, s) = (geometry(), sphere());
        let u = potential(ModeKind::Tem00, [0.0; 3], &g, &s, [0.0; 3]).unwrap();
        let expected = -3.0 * s.volume() / (2.0 * mode_volumes(&g)[0]) * g.mode_frequency();
        assert!((u / expected - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tem00_at_canonical_point() {
        let (g, s) = (geometry(), sphere());
        let p = [0.25 * g.waist, 0.25 * g.waist, 0.0];
        let u = potential(ModeKind::Tem00, p, &g, &s, CANONICAL_PHASES).unwrap();
        let expected = -3.0 * s.volume() / (2.0 * mode_volumes(&g)[0])
            * (-0.25f64).exp()
            * 0.5
            * g.mode_frequency();
        assert!((u / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_positions_beyond_one_waist() {
        let (g, s) = (geometry(), sphere());
        assert!(potential(ModeKind::Tem00, [1.1e-5, 0.0, 0.0], &g, &s, [0.0; 3]).is_err());
    }

    #[test]
    fn coupling_vanishes_at_antinode() {
        let (g, s) = (geometry(), sphere());
        let field = ModeField::new(&g, &s, [0.0; 3]);
        let trap = TrapConfig {
            omega: [2.0 * PI * 0.5e6; 3],
            position: [2.5e-6, 2.5e-6, 0.0],
            phases: [0.0; 3],
        };
        let cs = coupling_strength(ModeKind::Tem00, &trap, &field, sphere_mass(&s)).unwrap();
        assert_eq!(cs.g, 0.0);
    }

    #[test]
    fn cross_gradient_of_transverse_modes_is_one_seventh() {
        let (g, s) = (geometry(), sphere());
        let field = ModeField::new(&g, &s, CANONICAL_PHASES);
        let trap = TrapConfig::canonical(
            [2.0 * PI * 0.5e6, 2.0 * PI * 0.5e6, 2.0 * PI * 0.2e6],
            g.waist,
        );
        let m = sphere_mass(&s);
        for mode in [ModeKind::Tem01, ModeKind::Tem10] {
            let cs = coupling_strength(mode, &trap, &field, m).unwrap();
            assert!(
                (cs.cross_gradient_ratio - 1.0 / 7.0).abs() < 1e-12,
                "{}",
                cs.cross_gradient_ratio
            );
            assert!(cs.warning.is_some());
        }
        let z = coupling_strength(ModeKind::Tem00, &trap, &field, m).unwrap();
        assert!(z.cross_gradient_ratio < CROSS_GRADIENT_LIMIT);
        assert!(z.warning.is_none());
    }

    #[test]
    fn shift_equals_potential_for_large_permittivity() {
        let g = geometry();
        let mut s = sphere();
        s.permittivity = 1e15;
        for mode in [ModeKind::Tem00, ModeKind::Tem01, ModeKind::Tem10] {
            for p in [
                [2.5e-6, 2.5e-6, 0.0],
                [1e-6, -3e-6, 2e-7],
                [-4e-6, 5e-6, 1.3e-3],
            ] {
                let u = potential(mode, p, &g, &s, CANONICAL_PHASES).unwrap();
                let d = cavity_frequency_shift(mode, p, &g, &s, CANONICAL_PHASES).unwrap();
                assert!((d - u).abs() <= 1e-12 * u.abs(), "{mode} {p:?}: {d} vs {u}");
            }
        }
    }

    #[test]
    fn shift_is_linear_in_volume_and_zero_at_node() {
        let g = geometry();
        let s = sphere();
        let s2 = SphereProperties {
            radius: s.radius * 2f64.cbrt(),
            ..s.clone()
        };
        let p = [2.5e-6, 2.5e-6, 0.0];
        let d1 = cavity_frequency_shift(ModeKind::Tem00, p, &g, &s, CANONICAL_PHASES).unwrap();
        let d2 = cavity_frequency_shift(ModeKind::Tem00, p, &g, &s2, CANONICAL_PHASES).unwrap();
        assert!((d2 / d1 - 2.0).abs() < 1e-12);
        assert_eq!(
            cavity_frequency_shift(ModeKind::Tem01, [0.0, 1e-6, 0.0], &g, &s, CANONICAL_PHASES)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn undriven_cavity_is_empty() {
        let a = intracavity_amplitude(0.0, 1e6, 5e5, 30.0, 1e15).unwrap();
        assert_eq!(a.photons(), 0.0);
        assert_eq!(a.effective_detuning, 1e6);
    }

    #[test]
    fn decoupled_cavity_closed_form() {
        let (om, d, k) = (3e7, 2e6, 5e5);
        let a = intracavity_amplitude(om, d, k, 0.0, 1e15).unwrap();
        let expected = Complex::new(0.0, -om) / Complex::new(k, 2.0 * d);
        assert!((a.alpha - expected).norm() < 1e-12 * expected.norm());
        assert!((a.photons() - om * om / (4.0 * d * d + k * k)).abs() < 1e-9);
    }

    #[test]
    fn bistable_drive_reports_all_fixed_points() {
        // Large shift per photon with a detuning on the far side of the
        // resonance produces three roots.
        let (k, g, wc) = (1.0, 1.0, 1.0); // c = 2
        let roots = photon_fixed_points(3.0, -10.0, k, g, wc);
        assert_eq!(roots.len(), 3, "{roots:?}");
        for n in &roots {
            let residual = n * (4.0 * (-10.0 + 2.0 * n).powi(2) + k * k) - 9.0;
            assert!(residual.abs() < 1e-9, "{residual}");
        }
    }
}
