use rand::distributions::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;
use serde::Serialize;

use super::counts::{compound_count_pmf, kick_cdf, kick_density, measured_count_pmf, sample_count};
use super::kicks::{
    collision_rate, detectability_report, mean_elastic_kick, mean_inelastic_kick,
    sample_collision_times, sample_kicks, CollisionRates, DetectabilityReport,
};
use super::{CollisionEvent, CollisionKind, DetectionRecord};
use crate::coupling::build_pairs;
use crate::dynamics::phonon_decay_time;
use crate::params::{
    Axis, DetectionSettings, GasEnvironment, KickModel, SphereProperties, SystemConfig,
};
use crate::rng::{stream, Stream};
use crate::{Error, Result};

/// One component of the per-collision kick law: a gamma law per axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KickComponent {
    pub species: usize,
    pub kind: CollisionKind,
    /// Probability that a collision falls in this component.
    pub weight: f64,
    /// Mean kick per axis [phonons].
    pub means: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KickMixture {
    pub shape: f64,
    pub components: Vec<KickComponent>,
}

impl KickMixture {
    pub fn density(&self, axis: Axis, n: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * kick_density(n, c.means[axis.index()], self.shape))
            .sum()
    }

    pub fn cdf(&self, axis: Axis, n: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * kick_cdf(n, c.means[axis.index()], self.shape))
            .sum()
    }

    /// Count probabilities p(0..=k_max) with detection efficiency `efficiency`.
    pub fn count_pmf(&self, axis: Axis, k_max: u64, efficiency: f64) -> Vec<f64> {
        let mut out = vec![0.0; k_max as usize + 1];
        for c in &self.components {
            let p = compound_count_pmf(k_max, efficiency * c.means[axis.index()], self.shape);
            for (o, p) in out.iter_mut().zip(p) {
                *o += c.weight * p;
            }
        }
        out
    }
}

/// Everything a collision run needs, resolved from a configuration.
#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    pub sphere: SphereProperties,
    /// [kg]
    pub sphere_mass: f64,
    /// [rad/s]
    pub omega: [f64; 3],
    /// Output-pulse duration τ_j per axis [s].
    pub pulse_duration: [f64; 3],
    pub gas: GasEnvironment,
    pub detection: DetectionSettings,
    pub rates: CollisionRates,
}

impl ExperimentSetup {
    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        let pairs = build_pairs(config)?;
        let mut pulse_duration = [0.0; 3];
        for axis in Axis::ALL {
            let p = pairs.pair(axis);
            let tau = phonon_decay_time(p.coupling, p.amplitude.norm(), p.kappa);
            if !tau.is_finite() {
                return Err(Error::Invalid(format!(
                    "{axis} axis is not driven, so collisions produce no output pulse"
                )));
            }
            pulse_duration[axis.index()] = tau;
        }
        Ok(Self::new(
            &config.sphere,
            config.mass(),
            config.trap.omega,
            pulse_duration,
            &config.gas,
            &config.detection,
        ))
    }

    pub fn new(
        sphere: &SphereProperties,
        sphere_mass: f64,
        omega: [f64; 3],
        pulse_duration: [f64; 3],
        gas: &GasEnvironment,
        detection: &DetectionSettings,
    ) -> Self {
        ExperimentSetup {
            sphere: sphere.clone(),
            sphere_mass,
            omega,
            pulse_duration,
            gas: gas.clone(),
            detection: detection.clone(),
            rates: collision_rate(gas, sphere),
        }
    }

    pub fn kick_model(&self) -> KickModel {
        self.detection.kick_model
    }

    pub fn elastic_means(&self, species: usize) -> [f64; 3] {
        let m = self.gas.species[species].mass;
        self.omega
            .map(|w| mean_elastic_kick(m, self.gas.temperature, self.sphere_mass, w))
    }

    pub fn inelastic_means(&self, species: usize) -> [f64; 3] {
        let m = self.gas.species[species].mass;
        self.omega.map(|w| {
            mean_inelastic_kick(
                m,
                self.gas.temperature,
                self.sphere.surface_temperature,
                self.sphere_mass,
                w,
            )
        })
    }

    /// Kick law of a random collision: species weighted by collision rate,
    /// then elastic or inelastic.
    pub fn kick_mixture(&self) -> KickMixture {
        let p_in = self.gas.inelastic_fraction;
        let mut components = Vec::new();
        for (s, w) in self.rates.species_weights().into_iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            if p_in < 1.0 {
                components.push(KickComponent {
                    species: s,
                    kind: CollisionKind::Elastic,
                    weight: w * (1.0 - p_in),
                    means: self.elastic_means(s),
                });
            }
            if p_in > 0.0 {
                components.push(KickComponent {
                    species: s,
                    kind: CollisionKind::Inelastic,
                    weight: w * p_in,
                    means: self.inelastic_means(s),
                });
            }
        }
        KickMixture {
            shape: self.kick_model().gamma_shape(),
            components,
        }
    }

    pub fn detectability(&self) -> DetectabilityReport {
        detectability_report(
            &self.gas,
            &self.sphere,
            self.sphere_mass,
            self.omega,
            self.pulse_duration,
            self.rates.total,
        )
    }

    /// Samples `duration` seconds of collisions and their detections.
    pub fn run(&self, duration: f64, seed: u64) -> Experiment {
        let times = sample_collision_times(
            self.rates.total,
            duration,
            &mut stream(seed, Stream::CollisionTimes),
        );
        self.run_at(&times, seed)
    }

    /// Samples exactly `events` collisions (arrival times still Poisson).
    pub fn run_events(&self, events: usize, seed: u64) -> Experiment {
        let mut rng = stream(seed, Stream::CollisionTimes);
        let mut times = Vec::with_capacity(events);
        let mut t = 0.0;
        if self.rates.total > 0.0 {
            let exp = rand_distr::Exp::new(self.rates.total).expect("positive rate");
            for _ in 0..events {
                t += exp.sample(&mut rng);
                times.push(t);
            }
        }
        self.run_at(&times, seed)
    }

    fn run_at(&self, times: &[f64], seed: u64) -> Experiment {
        let mut species_rng = stream(seed, Stream::Species);
        let mut kick_rng = stream(seed, Stream::Kicks);
        let mut count_rng = stream(seed, Stream::Counts);
        let weights = self.rates.species_weights();
        let chooser = WeightedIndex::new(&weights).ok();
        let model = self.kick_model();
        let eta = self.detection.efficiency;

        let mut events = Vec::with_capacity(times.len());
        let mut raw: [Vec<DetectionRecord>; 3] = Default::default();
        for &time in times {
            let species = chooser.as_ref().map_or(0, |c| c.sample(&mut species_rng));
            let inelastic = species_rng.gen::<f64>() < self.gas.inelastic_fraction;
            let (kind, means) = if inelastic {
                (CollisionKind::Inelastic, self.inelastic_means(species))
            } else {
                (CollisionKind::Elastic, self.elastic_means(species))
            };
            let kicks = sample_kicks(means, model, &mut kick_rng);
            for axis in Axis::ALL {
                let j = axis.index();
                raw[j].push(DetectionRecord {
                    axis,
                    t_start: time,
                    duration: self.pulse_duration[j],
                    count: sample_count(eta * kicks[j], &mut count_rng),
                    merged: false,
                });
            }
            events.push(CollisionEvent {
                time,
                species,
                kind,
                kicks,
            });
        }

        let mut records = Vec::with_capacity(3 * events.len());
        let mut merged_pulses = [0usize; 3];
        let mut warnings = self.detectability().warnings;
        for axis in Axis::ALL {
            let j = axis.index();
            let (merged, n) = merge_detections(&raw[j], self.pulse_duration[j]);
            merged_pulses[j] = n;
            if n > 0 {
                warnings.push(format!(
                    "{axis} axis: {n} pulses arrived within τ = {:.3e} s of the previous one and were merged",
                    self.pulse_duration[j]
                ));
            }
            records.extend(merged);
        }
        records.sort_by(|a, b| a.t_start.total_cmp(&b.t_start).then(a.axis.cmp(&b.axis)));
        let histograms = Axis::ALL
            .iter()
            .map(|&a| self.histograms(a, &events, &records))
            .collect();
        Experiment {
            events,
            records,
            histograms,
            merged_pulses,
            warnings,
        }
    }

    fn histograms(
        &self,
        axis: Axis,
        events: &[CollisionEvent],
        records: &[DetectionRecord],
    ) -> AxisHistograms {
        let j = axis.index();
        let mixture = self.kick_mixture();
        let eta = self.detection.efficiency;

        let counts: Vec<u64> = records
            .iter()
            .filter(|r| r.axis == axis)
            .map(|r| r.count)
            .collect();
        let max_mean = mixture
            .components
            .iter()
            .map(|c| c.means[j])
            .fold(0.0, f64::max);
        let k_max = counts
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
            .max((4.0 * eta * max_mean).ceil() as u64)
            .min(100_000);
        let mut count_frequencies = vec![0u64; k_max as usize + 1];
        for &k in &counts {
            count_frequencies[k as usize] += 1;
        }
        let count_expected = mixture.count_pmf(axis, k_max, eta);
        let geometric_overlay = mixture
            .components
            .iter()
            .map(|c| OverlayCurve {
                species: self.gas.species[c.species].name.clone(),
                kind: c.kind,
                weight: c.weight,
                mean: eta * c.means[j],
                values: (0..=k_max)
                    .map(|k| measured_count_pmf(k, eta * c.means[j]))
                    .collect(),
            })
            .collect();

        let bins = 50;
        let upper = if max_mean > 0.0 { 6.0 * max_mean } else { 1.0 };
        let width = upper / bins as f64;
        let kick_edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
        let mut kick_counts = vec![0u64; bins];
        let mut kick_overflow = 0u64;
        for e in events {
            let b = (e.kicks[j] / width).floor() as usize;
            match kick_counts.get_mut(b) {
                Some(c) => *c += 1,
                None => kick_overflow += 1,
            }
        }
        let centres: Vec<f64> = (0..bins).map(|i| (i as f64 + 0.5) * width).collect();
        let mixture_density = centres.iter().map(|&n| mixture.density(axis, n)).collect();
        let kick_pdf_overlay = mixture
            .components
            .iter()
            .map(|c| OverlayCurve {
                species: self.gas.species[c.species].name.clone(),
                kind: c.kind,
                weight: c.weight,
                mean: c.means[j],
                values: centres
                    .iter()
                    .map(|&n| kick_density(n, c.means[j], mixture.shape))
                    .collect(),
            })
            .collect();
        AxisHistograms {
            axis,
            count_frequencies,
            count_expected,
            geometric_overlay,
            kick_edges,
            kick_counts,
            kick_overflow,
            kick_bin_centres: centres,
            kick_density: mixture_density,
            kick_pdf_overlay,
        }
    }
}

/// Merges pulses on one axis whose start lies within `tau` of the previous
/// collision; counts add and the duration stretches to cover both.
/// Returns the merged records and the number of absorbed pulses.
pub fn merge_detections(records: &[DetectionRecord], tau: f64) -> (Vec<DetectionRecord>, usize) {
    let mut out: Vec<DetectionRecord> = Vec::with_capacity(records.len());
    let mut last_time = f64::NEG_INFINITY;
    let mut absorbed = 0;
    for r in records {
        match out.last_mut() {
            Some(prev) if r.t_start - last_time < tau => {
                prev.count += r.count;
                prev.duration = r.t_start - prev.t_start + r.duration;
                prev.merged = true;
                absorbed += 1;
            }
            _ => out.push(r.clone()),
        }
        last_time = r.t_start;
    }
    (out, absorbed)
}

/// Expected or reference curve evaluated on a histogram's support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlayCurve {
    pub species: String,
    pub kind: CollisionKind,
    /// Mixture weight of this curve.
    pub weight: f64,
    /// Mean of the curve [phonons or counts].
    pub mean: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisHistograms {
    pub axis: Axis,
    /// Frequency of count k at index k.
    pub count_frequencies: Vec<u64>,
    /// Compound-law probabilities of count k (mixture over components).
    pub count_expected: Vec<f64>,
    /// Geometric law at each component's mean kick.
    pub geometric_overlay: Vec<OverlayCurve>,
    pub kick_edges: Vec<f64>,
    pub kick_counts: Vec<u64>,
    /// Kicks beyond the last edge.
    pub kick_overflow: u64,
    pub kick_bin_centres: Vec<f64>,
    /// Mixture kick density at the bin centres [1/phonon].
    pub kick_density: Vec<f64>,
    /// Per-component kick density at the bin centres.
    pub kick_pdf_overlay: Vec<OverlayCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub events: Vec<CollisionEvent>,
    /// Sorted by start time, then axis.
    pub records: Vec<DetectionRecord>,
    /// Per axis (z, x, y).
    pub histograms: Vec<AxisHistograms>,
    /// Pulses absorbed into an earlier record, per axis.
    pub merged_pulses: [usize; 3],
    pub warnings: Vec<String>,
}

/// Runs the full collision and detection chain for `duration` seconds.
pub fn run_experiment(config: &SystemConfig, duration: f64, seed: u64) -> Result<Experiment> {
    if !(duration >= 0.0) {
        return Err(Error::Invalid(format!(
            "duration must be >= 0, got {duration}"
        )));
    }
    Ok(ExperimentSetup::from_config(config)?.run(duration, seed))
}
