//! Gas collisions with the trapped sphere and what the detectors see.
//!
//! Each collision adds phonons along all three axes. The cavity then turns
//! the excess into an output light pulse of duration τ_j whose integer
//! photon count is geometric with the kick as its mean. The module samples
//! that chain end to end and inverts it: a mixture fit recovers molecular
//! masses, and a one-parameter fit recovers the surface temperature of the
//! sphere when only re-emitted molecules give a signal.

mod counts;
mod experiment;
mod fit;
mod kicks;
mod stats;

use serde::{Deserialize, Serialize};

use crate::params::Axis;

pub use counts::{
    compound_count_pmf, kick_cdf, kick_density, kick_pdf, measured_count_pmf, sample_count,
    CompoundTable,
};
pub use experiment::{
    merge_detections, run_experiment, AxisHistograms, Experiment, ExperimentSetup, KickComponent,
    KickMixture, OverlayCurve,
};
pub use fit::{
    fit_species, fit_species_with, surface_temperature_estimate, FitComponent, FitModel,
    FitOptions, SpeciesFit, SurfaceTemperature,
};
pub use kicks::{
    collision_rate, detectability_report, elastic_kick, inelastic_kick, mean_elastic_kick,
    mean_inelastic_kick, sample_collision_times, sample_kicks, AxisDetectability, CollisionRates,
    DetectabilityReport, SpeciesDetectability, MASS_RATIO_WARNING,
};
pub use stats::{chi_square_test, ks_test, TestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionKind {
    Elastic,
    Inelastic,
}

impl CollisionKind {
    pub fn name(self) -> &'static str {
        match self {
            CollisionKind::Elastic => "elastic",
            CollisionKind::Inelastic => "inelastic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionEvent {
    /// [s]
    pub time: f64,
    /// Index into the gas species list.
    pub species: usize,
    pub kind: CollisionKind,
    /// Phonons added along (z, x, y).
    pub kicks: [f64; 3],
}

/// One detected output pulse.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRecord {
    pub axis: Axis,
    /// [s]
    pub t_start: f64,
    /// [s]
    pub duration: f64,
    pub count: u64,
    /// Built from more than one collision (pulses closer than τ_j).
    #[serde(skip)]
    pub merged: bool,
}
