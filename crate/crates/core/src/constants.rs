//! CODATA 2018 constants, SI units.

use std::f64::consts::PI;

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054571817e-34;
/// Boltzmann constant [J/K].
pub const K_B: f64 = 1.380649e-23;
/// Vacuum permittivity [F/m].
pub const EPSILON_0: f64 = 8.8541878128e-12;
/// Speed of light [m/s].
pub const C: f64 = 299_792_458.0;
/// One torr in pascal.
pub const TORR: f64 = 101_325.0 / 760.0;
/// Unified atomic mass unit [kg].
pub const AMU: f64 = 1.66053906660e-27;

pub const TWO_PI: f64 = 2.0 * PI;
