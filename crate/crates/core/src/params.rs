//! Physical configuration and the quantities derived from it.
//!
//! [`SystemConfig::from_json`] parses the unit-suffixed JSON configuration
//! and validates every field; the free functions below turn the validated
//! parameters into masses, zero-point fluctuations, mode volumes and the
//! cavity linewidth.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{C, EPSILON_0, HBAR, K_B};
use crate::coupling::{ModeDrive, ModeKind, Polarization};
use crate::units::{Dimension, Quantity};
use crate::{Error, Result};

/// Motional axis. The cavity mode TEM00 couples to z, TEM01 to x and TEM10
/// to y, so the index order is (z, x, y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Z,
    X,
    Y,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Z, Axis::X, Axis::Y];

    pub fn index(self) -> usize {
        match self {
            Axis::Z => 0,
            Axis::X => 1,
            Axis::Y => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        Axis::ALL.get(i).copied()
    }

    /// Cavity mode that cools this axis.
    pub fn mode(self) -> ModeKind {
        match self {
            Axis::Z => ModeKind::Tem00,
            Axis::X => ModeKind::Tem01,
            Axis::Y => ModeKind::Tem10,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Z => "z",
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "z" | "1" => Ok(Axis::Z),
            "x" | "2" => Ok(Axis::X),
            "y" | "3" => Ok(Axis::Y),
            other => Err(Error::Invalid(format!("unknown axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereProperties {
    /// [m]
    pub radius: f64,
    /// [kg/m^3]
    pub density: f64,
    /// Relative permittivity.
    pub permittivity: f64,
    /// [K]
    pub surface_temperature: f64,
}

impl SphereProperties {
    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.radius.powi(3)
    }

    /// Checks the type invariants. `wavelength` bounds the radius: the point
    /// dipole treatment needs `radius < wavelength / 10`.
    pub fn validate(&self, wavelength: f64) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::config("sphere.radius", "must be > 0"));
        }
        if !(self.density > 0.0) {
            return Err(Error::config("sphere.density", "must be > 0"));
        }
        if !(self.permittivity > 1.0) {
            return Err(Error::config("sphere.permittivity", "must be > 1"));
        }
        if !(self.surface_temperature >= 0.0) {
            return Err(Error::config("sphere.surface_temperature", "must be >= 0"));
        }
        if self.radius >= wavelength / 10.0 {
            return Err(Error::config(
                "sphere.radius",
                format!(
                    "radius {:e} m is not small compared to the wavelength {:e} m (need < lambda/10)",
                    self.radius, wavelength
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    /// Angular trap frequencies along (z, x, y) [rad/s].
    pub omega: [f64; 3],
    /// Trap centre (x0, y0, z0) in the cavity mode frame [m].
    pub position: [f64; 3],
    /// Standing-wave phases at the trap centre for modes 1..3 [rad].
    pub phases: [f64; 3],
}

impl TrapConfig {
    /// The canonical placement: z0 = 0, x0 = y0 = w/4, phi = (pi/4, 0, 0).
    pub fn canonical(omega: [f64; 3], waist: f64) -> Self {
        TrapConfig {
            omega,
            position: [0.25 * waist, 0.25 * waist, 0.0],
            phases: [PI / 4.0, 0.0, 0.0],
        }
    }

    pub fn omega(&self, axis: Axis) -> f64 {
        self.omega[axis.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinewidthSpec {
    Kappa(f64),
    Finesse(f64),
    /// Both supplied; `kappa` is authoritative.
    Both {
        kappa: f64,
        finesse: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavityGeometry {
    /// [m]
    pub length: f64,
    /// Mode waist [m].
    pub waist: f64,
    /// [m]
    pub wavelength: f64,
    pub linewidth: LinewidthSpec,
}

impl CavityGeometry {
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Empty-cavity resonance [rad/s].
    pub fn mode_frequency(&self) -> f64 {
        2.0 * PI * C / self.wavelength
    }

    /// Energy decay rate κ [rad/s]. An explicit κ takes precedence.
    pub fn kappa(&self) -> f64 {
        match self.linewidth {
            LinewidthSpec::Kappa(k) | LinewidthSpec::Both { kappa: k, .. } => k,
            LinewidthSpec::Finesse(f) => kappa_from_finesse(self.length, f),
        }
    }

    pub fn finesse(&self) -> Option<f64> {
        match self.linewidth {
            LinewidthSpec::Finesse(f) | LinewidthSpec::Both { finesse: f, .. } => Some(f),
            LinewidthSpec::Kappa(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Species {
    pub name: String,
    /// Molecular mass [kg].
    pub mass: f64,
    /// Number fraction in the gas.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasEnvironment {
    /// [Pa]
    pub pressure: f64,
    /// [K]
    pub temperature: f64,
    pub species: Vec<Species>,
    /// Probability that a collision is inelastic (sticking then re-emission).
    pub inelastic_fraction: f64,
}

/// Power spectral density given as a flat value or a table of
/// (angular frequency [rad/s], value) points interpolated log-log.
#[derive(Debug, Clone, PartialEq)]
pub enum Psd {
    Flat(f64),
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdSample {
    pub value: f64,
    /// True when the query fell outside the table and was clamped.
    pub clamped: bool,
}

impl Psd {
    pub fn zero() -> Self {
        Psd::Flat(0.0)
    }

    pub fn eval(&self, omega: f64) -> PsdSample {
        match self {
            Psd::Flat(v) => PsdSample {
                value: *v,
                clamped: false,
            },
            Psd::Table(points) => {
                let (first, last) = (points[0], points[points.len() - 1]);
                if omega <= first.0 {
                    return PsdSample {
                        value: first.1,
                        clamped: omega < first.0,
                    };
                }
                if omega >= last.0 {
                    return PsdSample {
                        value: last.1,
                        clamped: omega > last.0,
                    };
                }
                let i = points.partition_point(|p| p.0 <= omega);
                let (w0, s0) = points[i - 1];
                let (w1, s1) = points[i];
                let value = if s0 > 0.0 && s1 > 0.0 {
                    let t = (omega / w0).ln() / (w1 / w0).ln();
                    (s0.ln() + t * (s1 / s0).ln()).exp()
                } else {
                    s0 + (s1 - s0) * (omega - w0) / (w1 - w0)
                };
                PsdSample {
                    value,
                    clamped: false,
                }
            }
        }
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Psd {
        match self {
            Psd::Flat(v) => Psd::Flat(v * factor),
            Psd::Table(p) => Psd::Table(p.iter().map(|&(w, s)| (w, s * factor)).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectra {
    /// One-sided fractional intensity noise S_eps [1/Hz].
    pub intensity_psd: Psd,
    /// Trap-centre position noise per axis (z, x, y) [m^2/Hz].
    pub pointing_psd: [Psd; 3],
    /// Laser linewidth Gamma_L [rad/s].
    pub laser_linewidth: f64,
    /// Inverse phase-noise correlation time gamma_c [rad/s].
    pub phase_correlation_rate: f64,
    /// Mean intracavity photon number used in the phase-noise floor. `None`
    /// means "use each mode's own |alpha|^2".
    pub mean_cavity_photons: Option<f64>,
}

impl Default for NoiseSpectra {
    fn default() -> Self {
        NoiseSpectra {
            intensity_psd: Psd::zero(),
            pointing_psd: [Psd::zero(), Psd::zero(), Psd::zero()],
            laser_linewidth: 0.0,
            phase_correlation_rate: 0.0,
            mean_cavity_photons: None,
        }
    }
}

/// How a collision's momentum transfer is distributed over the three axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KickModel {
    /// Each axis takes the full Maxwell–Boltzmann energy law (density
    /// proportional to sqrt(n) exp(-a n)); independent draws per axis.
    Energy,
    /// Each axis takes one Cartesian velocity component (chi-squared with
    /// one degree of freedom).
    Component,
}

impl KickModel {
    /// Shape parameter of the gamma law followed by the kick on one axis.
    pub fn gamma_shape(self) -> f64 {
        match self {
            KickModel::Energy => 1.5,
            KickModel::Component => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSettings {
    /// Photon detection efficiency in (0, 1]; counts are binomially thinned.
    pub efficiency: f64,
    pub kick_model: KickModel,
}

impl Default for DetectionSettings {
    fn default() -> Self {
        DetectionSettings {
            efficiency: 1.0,
            kick_model: KickModel::Energy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub sphere: SphereProperties,
    pub trap: TrapConfig,
    pub cavity: CavityGeometry,
    /// Drives in axis order (TEM00, TEM01, TEM10).
    pub drives: [ModeDrive; 3],
    pub gas: GasEnvironment,
    pub noise: NoiseSpectra,
    pub detection: DetectionSettings,
    /// Initial phonon occupation per axis for cooling runs.
    pub initial_phonons: [f64; 3],
    /// Use 3V(eps-1)/(eps+2) instead of 3V in the mode potentials.
    pub finite_permittivity: bool,
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
            Error::config(
                format!("config (line {}, column {})", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        raw.validate()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn mass(&self) -> f64 {
        sphere_mass(&self.sphere)
    }

    pub fn drive(&self, axis: Axis) -> &ModeDrive {
        &self.drives[axis.index()]
    }
}

// ---------------------------------------------------------------------------
// Derived quantities

/// (4/3) pi r^3 rho [kg].
pub fn sphere_mass(props: &SphereProperties) -> f64 {
    props.volume() * props.density
}

/// Induced polarizability 3 eps0 V (eps-1)/(eps+2) [C m^2/V].
pub fn polarizability(props: &SphereProperties) -> f64 {
    3.0 * EPSILON_0 * props.volume() * clausius_mossotti(props.permittivity)
}

/// (eps-1)/(eps+2); tends to 1 for a perfect dielectric.
pub fn clausius_mossotti(permittivity: f64) -> f64 {
    (permittivity - 1.0) / (permittivity + 2.0)
}

/// sqrt(hbar / (2 m omega)) [m].
pub fn zero_point_fluctuation(mass: f64, omega: f64) -> f64 {
    (HBAR / (2.0 * mass * omega)).sqrt()
}

/// (V_c1, V_c2, V_c3) = (pi/4, pi/16, pi/16) L w^2 [m^3].
pub fn mode_volumes(geom: &CavityGeometry) -> [f64; 3] {
    let lw2 = geom.length * geom.waist * geom.waist;
    [PI / 4.0 * lw2, PI / 16.0 * lw2, PI / 16.0 * lw2]
}

/// Angular FWHM linewidth of a cavity of the given length and finesse,
/// kappa = pi c / (L F).
pub fn kappa_from_finesse(length: f64, finesse: f64) -> f64 {
    PI * C / (length * finesse)
}

/// kappa from the geometry's finesse; identity when kappa is given
/// explicitly.
pub fn linewidth_from_finesse(geom: &CavityGeometry) -> f64 {
    geom.kappa()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmsAmplitude {
    /// [m]
    pub amplitude: f64,
    /// amplitude / wavelength.
    pub ratio_to_wavelength: f64,
    /// The linearised coupling needs amplitude << wavelength; flagged valid
    /// below 1/10 of the wavelength.
    pub linearization_valid: bool,
}

/// Thermal rms amplitude sqrt(k_B T / (m omega^2)) [m].
pub fn rms_amplitude(mass: f64, omega: f64, temperature: f64) -> f64 {
    (K_B * temperature / (mass * omega * omega)).sqrt()
}

pub fn rms_amplitude_check(
    mass: f64,
    omega: f64,
    temperature: f64,
    wavelength: f64,
) -> RmsAmplitude {
    let amplitude = rms_amplitude(mass, omega, temperature);
    let ratio = amplitude / wavelength;
    RmsAmplitude {
        amplitude,
        ratio_to_wavelength: ratio,
        linearization_valid: ratio < 0.1,
    }
}

// ---------------------------------------------------------------------------
// Raw (as-written) configuration

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    sphere: RawSphere,
    trap: RawTrap,
    cavity: RawCavity,
    drives: Vec<RawDrive>,
    gas: RawGas,
    #[serde(default)]
    noise: Option<RawNoise>,
    #[serde(default)]
    detection: Option<RawDetection>,
    #[serde(default)]
    cooling: Option<RawCooling>,
    #[serde(default)]
    options: Option<RawOptions>,
    /// Free-form description; ignored.
    #[serde(default, rename = "description")]
    _description: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSphere {
    radius: Option<Quantity>,
    density: Option<Quantity>,
    permittivity: Option<Quantity>,
    surface_temperature: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrap {
    omega: Option<[Quantity; 3]>,
    /// (x0, y0, z0); defaults to the canonical point.
    position: Option<[Quantity; 3]>,
    phases: Option<[Quantity; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    length: Option<Quantity>,
    waist: Option<Quantity>,
    wavelength: Option<Quantity>,
    kappa: Option<Quantity>,
    finesse: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    mode: String,
    detuning: Quantity,
    drive_strength: Option<Quantity>,
    intracavity_photons: Option<f64>,
    polarization: String,
    #[serde(default)]
    mode_frequency_offset: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGas {
    pressure: Option<Quantity>,
    temperature: Option<Quantity>,
    species: Vec<RawSpecies>,
    #[serde(default)]
    inelastic_fraction: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpecies {
    #[serde(default)]
    name: Option<String>,
    mass: Quantity,
    fraction: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawPsd {
    Flat(Quantity),
    Table { table: Vec<(Quantity, Quantity)> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    intensity_psd: Option<RawPsd>,
    pointing_psd: Option<[RawPsd; 3]>,
    laser_linewidth: Option<Quantity>,
    phase_correlation_rate: Option<Quantity>,
    mean_cavity_photons: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetection {
    efficiency: Option<f64>,
    kick_model: Option<KickModel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCooling {
    initial_phonons: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    finite_permittivity: Option<bool>,
}

fn required(q: &Option<Quantity>, field: &str, dim: Dimension) -> Result<f64> {
    match q {
        None => Err(Error::config(field, "missing required field")),
        Some(q) => convert(q, field, dim),
    }
}

fn convert(q: &Quantity, field: &str, dim: Dimension) -> Result<f64> {
    let v = q.to_si(dim).map_err(|m| Error::config(field, m))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(field, "must be finite"))
    }
}

fn optional(q: &Option<Quantity>, field: &str, dim: Dimension, default: f64) -> Result<f64> {
    q.as_ref().map_or(Ok(default), |q| convert(q, field, dim))
}

fn convert_psd(raw: &RawPsd, field: &str, dim: Dimension) -> Result<Psd> {
    match raw {
        RawPsd::Flat(q) => {
            let v = convert(q, field, dim)?;
            if v < 0.0 {
                return Err(Error::config(field, "PSD values must be >= 0"));
            }
            Ok(Psd::Flat(v))
        }
        RawPsd::Table { table } => {
            if table.is_empty() {
                return Err(Error::config(field, "PSD table is empty"));
            }
            let mut points = Vec::with_capacity(table.len());
            for (i, (w, s)) in table.iter().enumerate() {
                let f = format!("{field}.table[{i}]");
                let w = convert(w, &f, Dimension::Frequency)?;
                let s = convert(s, &f, dim)?;
                if !(w > 0.0) || s < 0.0 {
                    return Err(Error::config(f, "need frequency > 0 and PSD >= 0"));
                }
                points.push((w, s));
            }
            if points.windows(2).any(|p| p[1].0 <= p[0].0) {
                return Err(Error::config(
                    field,
                    "table frequencies must be strictly increasing",
                ));
            }
            Ok(Psd::Table(points))
        }
    }
}

impl RawConfig {
    fn validate(self) -> Result<SystemConfig> {
        use Dimension::*;

        let cavity = {
            let c = &self.cavity;
            let length = required(&c.length, "cavity.length", Length)?;
            let waist = required(&c.waist, "cavity.waist", Length)?;
            let wavelength = required(&c.wavelength, "cavity.wavelength", Length)?;
            for (v, f) in [
                (length, "cavity.length"),
                (waist, "cavity.waist"),
                (wavelength, "cavity.wavelength"),
            ] {
                if !(v > 0.0) {
                    return Err(Error::config(f, "must be > 0"));
                }
            }
            let kappa = c
                .kappa
                .as_ref()
                .map(|q| convert(q, "cavity.kappa", Frequency))
                .transpose()?;
            let finesse = c
                .finesse
                .as_ref()
                .map(|q| convert(q, "cavity.finesse", Dimensionless))
                .transpose()?;
            let linewidth = match (kappa, finesse) {
                (Some(k), _) if !(k > 0.0) => {
                    return Err(Error::config("cavity.kappa", "must be > 0"))
                }
                (_, Some(f)) if !(f > 0.0) => {
                    return Err(Error::config("cavity.finesse", "must be > 0"))
                }
                (Some(kappa), Some(finesse)) => LinewidthSpec::Both { kappa, finesse },
                (Some(k), None) => LinewidthSpec::Kappa(k),
                (None, Some(f)) => LinewidthSpec::Finesse(f),
                (None, None) => {
                    return Err(Error::config(
                        "cavity.kappa",
                        "one of kappa or finesse is required",
                    ))
                }
            };
            CavityGeometry {
                length,
                waist,
                wavelength,
                linewidth,
            }
        };

        let sphere = SphereProperties {
            radius: required(&self.sphere.radius, "sphere.radius", Length)?,
            density: required(&self.sphere.density, "sphere.density", Density)?,
            permittivity: required(
                &self.sphere.permittivity,
                "sphere.permittivity",
                Dimensionless,
            )?,
            surface_temperature: required(
                &self.sphere.surface_temperature,
                "sphere.surface_temperature",
                Temperature,
            )?,
        };
        sphere.validate(cavity.wavelength)?;

        let trap = {
            let t = &self.trap;
            let omega_raw = t
                .omega
                .as_ref()
                .ok_or_else(|| Error::config("trap.omega", "missing required field"))?;
            let mut omega = [0.0; 3];
            for (i, q) in omega_raw.iter().enumerate() {
                let f = format!("trap.omega[{i}]");
                omega[i] = convert(q, &f, Frequency)?;
                if !(omega[i] > 0.0) {
                    return Err(Error::config(f, "must be > 0"));
                }
            }
            let mut trap = TrapConfig::canonical(omega, cavity.waist);
            if let Some(p) = &t.position {
                for (i, q) in p.iter().enumerate() {
                    trap.position[i] = convert(q, &format!("trap.position[{i}]"), Length)?;
                }
            }
            if let Some(p) = &t.phases {
                for (i, q) in p.iter().enumerate() {
                    trap.phases[i] = convert(q, &format!("trap.phases[{i}]"), Angle)?;
                }
            }
            trap
        };

        let drives = {
            let mut slots: [Option<ModeDrive>; 3] = [None, None, None];
            for (i, d) in self.drives.iter().enumerate() {
                let field = format!("drives[{i}]");
                let mode: ModeKind = d.mode.parse().map_err(|_| {
                    Error::config(
                        format!("{field}.mode"),
                        format!("unknown mode {:?}", d.mode),
                    )
                })?;
                let polarization: Polarization = d.polarization.parse().map_err(|_| {
                    Error::config(
                        format!("{field}.polarization"),
                        format!("unknown polarization {:?}", d.polarization),
                    )
                })?;
                let detuning = match &d.detuning {
                    Quantity::Text(s) if s.trim() == "red_sideband" => {
                        crate::coupling::Detuning::RedSideband
                    }
                    q => crate::coupling::Detuning::Value(convert(
                        q,
                        &format!("{field}.detuning"),
                        Frequency,
                    )?),
                };
                let drive = match (&d.drive_strength, d.intracavity_photons) {
                    (Some(q), None) => {
                        let v = convert(q, &format!("{field}.drive_strength"), Frequency)?;
                        if v < 0.0 {
                            return Err(Error::config(
                                format!("{field}.drive_strength"),
                                "must be >= 0",
                            ));
                        }
                        crate::coupling::DriveLevel::Strength(v)
                    }
                    (None, Some(n)) => {
                        if !(n >= 0.0) {
                            return Err(Error::config(
                                format!("{field}.intracavity_photons"),
                                "must be >= 0",
                            ));
                        }
                        crate::coupling::DriveLevel::Photons(n)
                    }
                    _ => {
                        return Err(Error::config(
                            field,
                            "give exactly one of drive_strength or intracavity_photons",
                        ))
                    }
                };
                let offset = optional(
                    &d.mode_frequency_offset,
                    &format!("{field}.mode_frequency_offset"),
                    Frequency,
                    0.0,
                )?;
                let slot = &mut slots[mode.axis().index()];
                if slot.is_some() {
                    return Err(Error::config(
                        format!("{field}.mode"),
                        format!("duplicate drive for {mode}"),
                    ));
                }
                *slot = Some(ModeDrive {
                    mode,
                    detuning,
                    drive,
                    polarization,
                    mode_frequency_offset: offset,
                });
            }
            let [a, b, c] = slots;
            let missing = |m: ModeKind| Error::config("drives", format!("missing drive for {m}"));
            let drives = [
                a.ok_or_else(|| missing(ModeKind::Tem00))?,
                b.ok_or_else(|| missing(ModeKind::Tem01))?,
                c.ok_or_else(|| missing(ModeKind::Tem10))?,
            ];
            if drives[1].polarization == drives[2].polarization {
                return Err(Error::config(
                    "drives",
                    "TEM01 and TEM10 drives must have orthogonal polarizations",
                ));
            }
            drives
        };

        let gas = {
            let g = &self.gas;
            let pressure = required(&g.pressure, "gas.pressure", Pressure)?;
            if pressure < 0.0 {
                return Err(Error::config("gas.pressure", "must be >= 0"));
            }
            let temperature = required(&g.temperature, "gas.temperature", Temperature)?;
            if temperature < 0.0 {
                return Err(Error::config("gas.temperature", "must be >= 0"));
            }
            if g.species.is_empty() {
                return Err(Error::config(
                    "gas.species",
                    "at least one species is required",
                ));
            }
            let mut species = Vec::new();
            for (i, s) in g.species.iter().enumerate() {
                let field = format!("gas.species[{i}]");
                let mass = convert(&s.mass, &format!("{field}.mass"), Mass)?;
                if !(mass > 0.0) {
                    return Err(Error::config(format!("{field}.mass"), "must be > 0"));
                }
                if !(0.0..=1.0).contains(&s.fraction) {
                    return Err(Error::config(
                        format!("{field}.fraction"),
                        "must lie in [0, 1]",
                    ));
                }
                species.push(Species {
                    name: s.name.clone().unwrap_or_else(|| format!("species{i}")),
                    mass,
                    fraction: s.fraction,
                });
            }
            let total: f64 = species.iter().map(|s| s.fraction).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::config(
                    "gas.species",
                    format!("fractions sum to {total}, expected 1"),
                ));
            }
            let inelastic_fraction = g.inelastic_fraction.unwrap_or(0.0);
            if !(0.0..=1.0).contains(&inelastic_fraction) {
                return Err(Error::config(
                    "gas.inelastic_fraction",
                    "must lie in [0, 1]",
                ));
            }
            GasEnvironment {
                pressure,
                temperature,
                species,
                inelastic_fraction,
            }
        };

        let noise = match &self.noise {
            None => NoiseSpectra::default(),
            Some(n) => {
                let intensity_psd = n
                    .intensity_psd
                    .as_ref()
                    .map(|p| convert_psd(p, "noise.intensity_psd", IntensityPsd))
                    .transpose()?
                    .unwrap_or_else(Psd::zero);
                let pointing_psd = match &n.pointing_psd {
                    None => [Psd::zero(), Psd::zero(), Psd::zero()],
                    Some([a, b, c]) => [
                        convert_psd(a, "noise.pointing_psd[0]", PointingPsd)?,
                        convert_psd(b, "noise.pointing_psd[1]", PointingPsd)?,
                        convert_psd(c, "noise.pointing_psd[2]", PointingPsd)?,
                    ],
                };
                let laser_linewidth =
                    optional(&n.laser_linewidth, "noise.laser_linewidth", Frequency, 0.0)?;
                let phase_correlation_rate = optional(
                    &n.phase_correlation_rate,
                    "noise.phase_correlation_rate",
                    Frequency,
                    0.0,
                )?;
                if laser_linewidth < 0.0 {
                    return Err(Error::config("noise.laser_linewidth", "must be >= 0"));
                }
                if phase_correlation_rate < 0.0 {
                    return Err(Error::config(
                        "noise.phase_correlation_rate",
                        "must be >= 0",
                    ));
                }
                if let Some(nc) = n.mean_cavity_photons {
                    if !(nc >= 0.0) {
                        return Err(Error::config("noise.mean_cavity_photons", "must be >= 0"));
                    }
                }
                NoiseSpectra {
                    intensity_psd,
                    pointing_psd,
                    laser_linewidth,
                    phase_correlation_rate,
                    mean_cavity_photons: n.mean_cavity_photons,
                }
            }
        };

        let detection = {
            let mut d = DetectionSettings::default();
            if let Some(raw) = &self.detection {
                if let Some(e) = raw.efficiency {
                    if !(e > 0.0 && e <= 1.0) {
                        return Err(Error::config("detection.efficiency", "must lie in (0, 1]"));
                    }
                    d.efficiency = e;
                }
                if let Some(k) = raw.kick_model {
                    d.kick_model = k;
                }
            }
            d
        };

        let initial_phonons = self
            .cooling
            .as_ref()
            .and_then(|c| c.initial_phonons)
            .unwrap_or([10.0; 3]);
        if initial_phonons.iter().any(|n| !(*n >= 0.0)) {
            return Err(Error::config("cooling.initial_phonons", "must be >= 0"));
        }

        Ok(SystemConfig {
            sphere,
            trap,
            cavity,
            drives,
            gas,
            noise,
            detection,
            initial_phonons,
            finite_permittivity: self
                .options
                .and_then(|o| o.finite_permittivity)
                .unwrap_or(false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(radius: f64) -> SphereProperties {
        SphereProperties {
            radius,
            density: 1960.0,
            permittivity: 2.0,
            surface_temperature: 300.0,
        }
    }

    #[test]
    fn mass_of_fifty_nm_silica_sphere() {
        let m = sphere_mass(&sphere(50e-9));
        assert!((m / 1.03e-18 - 1.0).abs() < 0.01, "m = {m:e}");
    }

    #[test]
    fn mass_scales_cubically() {
        let r = sphere_mass(&sphere(100e-9)) / sphere_mass(&sphere(50e-9));
        assert!((r - 8.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_radius_rejected() {
        assert!(sphere(0.0).validate(1.5e-6).is_err());
        assert!(sphere(200e-9).validate(1.5e-6).is_err());
        assert!(sphere(50e-9).validate(1.5e-6).is_ok());
    }

    #[test]
    fn polarizability_limits() {
        let mut s = sphere(50e-9);
        s.permittivity = 1.0;
        assert_eq!(polarizability(&s), 0.0);
        s.permittivity = 1e12;
        let limit = 3.0 * EPSILON_0 * s.volume();
        assert!((polarizability(&s) / limit - 1.0).abs() < 1e-11);
        // eps = 2 by hand: 3 * 8.8541878128e-12 * 5.235987756e-22 * (1/4)
        s.permittivity = 2.0;
        let hand = 3.0 * 8.8541878128e-12 * 5.235_987_755_982_988e-22 * 0.25;
        assert!((polarizability(&s) / hand - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_point_fluctuations_match_quoted_values() {
        let m = 1.03e-18;
        let z = zero_point_fluctuation(m, 2.0 * PI * 0.5e6);
        let y = zero_point_fluctuation(m, 2.0 * PI * 0.2e6);
        assert!((z / 4.0e-12 - 1.0).abs() < 0.02, "{z:e}");
        assert!((y / 6.4e-12 - 1.0).abs() < 0.02, "{y:e}");
        let q4 = zero_point_fluctuation(m, 4.0 * 2.0 * PI * 0.5e6);
        assert!((q4 / z - 0.5).abs() < 1e-12);
    }

    fn geometry() -> CavityGeometry {
        CavityGeometry {
            length: 5e-3,
            waist: 10e-6,
            wavelength: 1.5e-6,
            linewidth: LinewidthSpec::Finesse(2e5),
        }
    }

    #[test]
    fn mode_volume_values() {
        let g = geometry();
        let v = mode_volumes(&g);
        // (pi/4) * 5e-3 * 1e-10
        assert!((v[0] - 3.926_990_816_987_241e-13).abs() < 1e-25);
        assert!((v[0] / v[1] - 4.0).abs() < 1e-12);
        assert_eq!(v[1], v[2]);
        let g2 = CavityGeometry { length: 1e-2, ..g };
        assert!((mode_volumes(&g2)[0] / v[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn finesse_to_linewidth() {
        let g = geometry();
        let k = linewidth_from_finesse(&g);
        assert!((k - PI * C / (5e-3 * 2e5)).abs() < 1e-6);
        assert!((k / 9.4e5 - 1.0).abs() < 0.01);
        let g2 = CavityGeometry {
            linewidth: LinewidthSpec::Finesse(4e5),
            ..g.clone()
        };
        assert!((linewidth_from_finesse(&g2) / k - 0.5).abs() < 1e-12);
        let g3 = CavityGeometry {
            linewidth: LinewidthSpec::Both {
                kappa: 5e5,
                finesse: 2e5,
            },
            ..g
        };
        assert_eq!(linewidth_from_finesse(&g3), 5e5);
    }

    #[test]
    fn rms_amplitude_quoted_values() {
        let m = sphere_mass(&sphere(50e-9));
        let w = 2.0 * PI * 0.5e6;
        let hot = rms_amplitude(m, w, 300.0);
        let cold = rms_amplitude(m, w, 1.0);
        assert!((hot / 20e-9 - 1.0).abs() < 0.15, "{hot:e}");
        assert!((cold / 1.2e-9 - 1.0).abs() < 0.15, "{cold:e}");
        assert_eq!(rms_amplitude(m, w, 0.0), 0.0);
        assert!(rms_amplitude_check(m, w, 1.0, 1.5e-6).linearization_valid);
    }

    #[test]
    fn psd_table_interpolates_log_log_and_clamps() {
        let p = Psd::Table(vec![(1e3, 1e-30), (1e5, 1e-34)]);
        let mid = p.eval(1e4);
        assert!((mid.value / 1e-32 - 1.0).abs() < 1e-9);
        assert!(!mid.clamped);
        let hi = p.eval(1e7);
        assert_eq!(hi.value, 1e-34);
        assert!(hi.clamped);
    }
}
