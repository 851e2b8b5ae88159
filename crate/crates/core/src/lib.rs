//! Cavity sideband cooling and single-molecule collision detection for an
//! optically levitated nanosphere.
//!
//! A single Fabry–Pérot cavity is driven on its TEM00, TEM01 and TEM10 modes;
//! each mode couples to the centre-of-mass motion of the trapped sphere along
//! one axis (z, x and y respectively). The crate is organised bottom-up:
//!
//! - [`params`]: configuration ingestion and derived physical quantities.
//! - [`coupling`]: mode potentials, single-photon couplings, intracavity
//!   amplitudes.
//! - [`dynamics`]: linearised Langevin dynamics in covariance form, stability,
//!   closed-form cooling formulas, the rotating-wave reduced model and the
//!   output pulse after a collision.
//! - [`collisions`]: Monte Carlo gas collisions, photon-count statistics and
//!   maximum-likelihood inference of molecular mass and surface temperature.
//! - [`noise`]: laser-noise heating rates and the ground-state feasibility
//!   budget.
//! - [`cli`]: the batch front end used by the `nanosphere` binary.
//!
//! All frequencies are angular (rad/s) internally.

pub mod cli;
pub mod collisions;
pub mod constants;
pub mod coupling;
pub mod dynamics;
mod error;
pub mod io;
pub mod noise;
pub mod params;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
pub use params::{Axis, SystemConfig};
