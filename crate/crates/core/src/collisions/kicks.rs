use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::Serialize;

use crate::constants::{HBAR, K_B};
use crate::params::{GasEnvironment, KickModel, SphereProperties};

/// Molecule-to-sphere mass ratio above which the kick formulas are suspect.
pub const MASS_RATIO_WARNING: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionRates {
    /// Per species, in the order of the gas description [1/s].
    pub per_species: Vec<f64>,
    /// [1/s]
    pub total: f64,
}

impl CollisionRates {
    /// Probability that a given collision involves each species.
    pub fn species_weights(&self) -> Vec<f64> {
        if self.total > 0.0 {
            self.per_species.iter().map(|r| r / self.total).collect()
        } else {
            vec![0.0; self.per_species.len()]
        }
    }
}

/// N = 2πr² P / √(π m_m k_B T / 2) per species, at its partial pressure.
pub fn collision_rate(gas: &GasEnvironment, sphere: &SphereProperties) -> CollisionRates {
    let area = 2.0 * PI * sphere.radius.powi(2);
    let per_species: Vec<f64> = gas
        .species
        .iter()
        .map(|s| {
            let p = gas.pressure * s.fraction;
            if p == 0.0 {
                0.0
            } else {
                area * p / (PI * s.mass * K_B * gas.temperature / 2.0).sqrt()
            }
        })
        .collect();
    CollisionRates {
        total: per_species.iter().sum(),
        per_species,
    }
}

/// Homogeneous Poisson arrivals on [0, t_end).
pub fn sample_collision_times<R: Rng>(rate: f64, t_end: f64, rng: &mut R) -> Vec<f64> {
    let mut times = Vec::new();
    if !(rate > 0.0) || !(t_end > 0.0) {
        return times;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = exp.sample(rng);
    while t < t_end {
        times.push(t);
        t += exp.sample(rng);
    }
    times
}

/// Mean elastic kick 2 k_B T m_m/(ħ ω m) [phonons].
pub fn mean_elastic_kick(
    molecule_mass: f64,
    temperature: f64,
    sphere_mass: f64,
    omega: f64,
) -> f64 {
    2.0 * K_B * temperature * molecule_mass / (HBAR * omega * sphere_mass)
}

/// Mean inelastic kick m_m k_B (√T_env + √T_sur)²/(2 ħ ω m) [phonons].
///
/// The incoming and re-emitted momenta are drawn comonotonically, so the
/// transfer along an axis is m_m (σ_env + σ_sur) z with one z ~ N(0, 1).
/// This reduces to the elastic mean at equal temperatures.
pub fn mean_inelastic_kick(
    molecule_mass: f64,
    env_temperature: f64,
    surface_temperature: f64,
    sphere_mass: f64,
    omega: f64,
) -> f64 {
    let root = env_temperature.sqrt() + surface_temperature.sqrt();
    molecule_mass * K_B * root * root / (2.0 * HBAR * omega * sphere_mass)
}

/// Draws one kick per axis with the given means. Under
/// [`KickModel::Energy`] each axis gets an independent draw of the full
/// Maxwell–Boltzmann energy law (gamma, shape 3/2); under
/// [`KickModel::Component`] axis j gets the j-th component of one standard
/// normal vector (gamma, shape 1/2).
pub fn sample_kicks<R: Rng>(means: [f64; 3], model: KickModel, rng: &mut R) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, mean) in out.iter_mut().zip(means) {
        *o = match model {
            KickModel::Component => {
                let z: f64 = rng.sample(StandardNormal);
                mean * z * z
            }
            KickModel::Energy => {
                let s: f64 = (0..3)
                    .map(|_| rng.sample::<f64, _>(StandardNormal).powi(2))
                    .sum();
                mean * s / 3.0
            }
        };
    }
    out
}

/// Phonons added along each axis by an elastic bounce:
/// n_j = 2 m_m² v²/(ħ ω_j m), with v a Maxwell–Boltzmann velocity at
/// temperature T (one component under [`KickModel::Component`], |v|²/3 of a
/// fresh 3-D draw under [`KickModel::Energy`]).
pub fn elastic_kick<R: Rng>(
    molecule_mass: f64,
    temperature: f64,
    sphere_mass: f64,
    omega: [f64; 3],
    model: KickModel,
    rng: &mut R,
) -> [f64; 3] {
    let means = omega.map(|w| mean_elastic_kick(molecule_mass, temperature, sphere_mass, w));
    sample_kicks(means, model, rng)
}

/// Phonons added by sticking and re-emission at the surface temperature.
pub fn inelastic_kick<R: Rng>(
    molecule_mass: f64,
    env_temperature: f64,
    surface_temperature: f64,
    sphere_mass: f64,
    omega: [f64; 3],
    model: KickModel,
    rng: &mut R,
) -> [f64; 3] {
    let means = omega.map(|w| {
        mean_inelastic_kick(
            molecule_mass,
            env_temperature,
            surface_temperature,
            sphere_mass,
            w,
        )
    });
    sample_kicks(means, model, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesDetectability {
    pub name: String,
    /// 2 k_B T_env > ħω m/m_m
    pub elastic: bool,
    /// 2 k_B T_env / (ħω m/m_m)
    pub elastic_margin: f64,
    /// k_B max(T_env, T_sur) > 2ħω m/m_m
    pub inelastic: bool,
    /// k_B max(T_env, T_sur) / (2ħω m/m_m)
    pub inelastic_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisDetectability {
    pub axis: crate::params::Axis,
    /// Pulse duration τ_j [s].
    pub pulse_duration: f64,
    /// τ_j < 0.1/N
    pub resolvable: bool,
    /// (0.1/N)/τ_j; absent when N = 0.
    pub resolvability_margin: Option<f64>,
    pub species: Vec<SpeciesDetectability>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectabilityReport {
    /// [1/s]
    pub collision_rate: f64,
    pub axes: Vec<AxisDetectability>,
    pub warnings: Vec<String>,
}

/// Whether single collisions can be told apart in time and whether their
/// kicks stand out, per axis and species.
pub fn detectability_report(
    gas: &GasEnvironment,
    sphere: &SphereProperties,
    sphere_mass: f64,
    omega: [f64; 3],
    pulse_duration: [f64; 3],
    rate: f64,
) -> DetectabilityReport {
    let mut warnings = Vec::new();
    for s in &gas.species {
        if s.mass / sphere_mass > MASS_RATIO_WARNING {
            warnings.push(format!(
                "species {}: m_m/m = {:.3e} is not small; kick formulas assume m_m << m",
                s.name,
                s.mass / sphere_mass
            ));
        }
    }
    let axes = crate::params::Axis::ALL
        .iter()
        .map(|&axis| {
            let j = axis.index();
            let tau = pulse_duration[j];
            let window = if rate > 0.0 { Some(0.1 / rate) } else { None };
            let resolvable = window.map_or(true, |w| tau < w);
            if !resolvable {
                warnings.push(format!(
                    "{axis} axis: pulse duration {tau:.3e} s is not below 0.1/N; pulses will overlap"
                ));
            }
            let species = gas
                .species
                .iter()
                .map(|s| {
                    let scale = HBAR * omega[j] * sphere_mass / s.mass;
                    let elastic_margin = 2.0 * K_B * gas.temperature / scale;
                    let hot = gas.temperature.max(sphere.surface_temperature);
                    let inelastic_margin = K_B * hot / (2.0 * scale);
                    SpeciesDetectability {
                        name: s.name.clone(),
                        elastic: elastic_margin > 1.0,
                        elastic_margin,
                        inelastic: inelastic_margin > 1.0,
                        inelastic_margin,
                    }
                })
                .collect();
            AxisDetectability {
                axis,
                pulse_duration: tau,
                resolvable,
                resolvability_margin: window.map(|w| w / tau),
                species,
            }
        })
        .collect();
    DetectabilityReport {
        collision_rate: rate,
        axes,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Species;
    use crate::rng::{stream, Stream};

    fn gas(pressure: f64) -> GasEnvironment {
        GasEnvironment {
            pressure,
            temperature: 300.0,
            species: vec![Species {
                name: "a".into(),
                mass: 6.63e-26,
                fraction: 1.0,
            }],
            inelastic_fraction: 0.0,
        }
    }

    fn sphere(radius: f64) -> SphereProperties {
        SphereProperties {
            radius,
            density: 1960.0,
            permittivity: 2.0,
            surface_temperature: 300.0,
        }
    }

    #[test]
    fn rate_scaling() {
        let p = 1e-10 * crate::constants::TORR;
        let n = collision_rate(&gas(p), &sphere(50e-9)).total;
        assert!((n - 10.0).abs() < 1.0, "{n}");
        assert_eq!(collision_rate(&gas(0.0), &sphere(50e-9)).total, 0.0);
        let n2 = collision_rate(&gas(p), &sphere(100e-9)).total;
        assert!((n2 / n - 4.0).abs() < 1e-12);
    }

    #[test]
    fn no_arrivals_at_zero_rate() {
        let mut rng = stream(1, Stream::CollisionTimes);
        assert!(sample_collision_times(0.0, 100.0, &mut rng).is_empty());
        let t = sample_collision_times(10.0, 100.0, &mut rng);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_temperature_gives_no_kick() {
        let mut rng = stream(1, Stream::Kicks);
        for model in [KickModel::Energy, KickModel::Component] {
            assert_eq!(
                elastic_kick(6.63e-26, 0.0, 1e-18, [1e6; 3], model, &mut rng),
                [0.0; 3]
            );
            assert_eq!(
                inelastic_kick(6.63e-26, 0.0, 0.0, 1e-18, [1e6; 3], model, &mut rng),
                [0.0; 3]
            );
        }
    }

    #[test]
    fn inelastic_mean_reduces_to_elastic() {
        let e = mean_elastic_kick(6.63e-26, 300.0, 1.03e-18, 1.2e6);
        let i = mean_inelastic_kick(6.63e-26, 300.0, 300.0, 1.03e-18, 1.2e6);
        assert!((e / i - 1.0).abs() < 1e-14);
        assert!((mean_elastic_kick(6.63e-26, 300.0, 1.03e-18, 2.4e6) / e - 0.5).abs() < 1e-14);
    }

    #[test]
    fn thresholds_as_stated() {
        let m = 1.03e-18;
        let w = 1.2e6;
        let mm = 6.63e-26;
        let scale = HBAR * w * m / mm;
        let mut g = gas(1e-8);
        g.temperature = 0.5 * scale / (2.0 * K_B);
        let mut s = sphere(50e-9);
        s.surface_temperature = 0.0;
        let r = detectability_report(&g, &s, m, [w; 3], [1e-3; 3], 1.0);
        assert!(!r.axes[0].species[0].elastic);
        assert!((r.axes[0].species[0].elastic_margin - 0.5).abs() < 1e-12);
        // inelastic threshold k T_sur > 2ħω m/m_m: the mean kick from T_sur alone is then > 1
        s.surface_temperature = 2.0 * scale / K_B * 1.01;
        let r = detectability_report(&g, &s, m, [w; 3], [1e-3; 3], 1.0);
        assert!(r.axes[0].species[0].inelastic);
        assert!(mean_inelastic_kick(mm, 0.0, s.surface_temperature, m, w) > 1.0);
    }
}
