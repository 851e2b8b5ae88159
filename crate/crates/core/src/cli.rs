//! Batch front end: `derive`, `cool`, `collide`, `fit` and `budget`.
//!
//! Every subcommand reads a configuration, writes its result files plus a
//! `manifest.json` into `--out`, and prints a JSON summary on stdout. A
//! failure prints `{"error": kind, "message": ...}` on stderr and exits
//! nonzero.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::collisions::{
    fit_species, mean_elastic_kick, surface_temperature_estimate, DetectabilityReport,
    ExperimentSetup,
};
use crate::coupling::build_pairs;
use crate::dynamics::{
    build_drift_diffusion, cooling_rate, final_phonon_number, fit_exponential_decay,
    phonon_decay_time, propagate_covariance, spectral_abscissa, stability_check,
    steady_state_covariance, step_bound, CovarianceState, StabilityVerdict,
};
use crate::io::{
    format_sig, read_detections, to_json_string, write_detections, write_events, write_json,
    write_table,
};
use crate::noise::{budget, BudgetThresholds};
use crate::params::{
    kappa_from_finesse, mode_volumes, polarizability, rms_amplitude_check, zero_point_fluctuation,
    Axis, SystemConfig,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "nanosphere",
    version,
    about = "Cavity cooling and collision detection for a levitated nanosphere"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (JSON with unit strings).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for ensemble work (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derived parameters, couplings and amplitudes.
    Derive,
    /// Covariance cooling trajectories for the three axes.
    Cool {
        /// Simulated time [s].
        #[arg(long, default_value_t = 0.01)]
        t_end: f64,
    },
    /// Monte Carlo collisions and detector records.
    Collide {
        /// Simulated time [s].
        #[arg(long, default_value_t = 100.0)]
        duration: f64,
    },
    /// Species or surface-temperature fit of a detection log.
    Fit {
        /// detections.csv written by `collide`.
        detections: PathBuf,
        /// Number of species in the mixture (1, 2 or 3).
        #[arg(long, default_value_t = 1)]
        species: usize,
        /// Fit the surface temperature instead of the species masses.
        #[arg(long)]
        surface_temperature: bool,
    },
    /// Laser-noise budget and ground-state verdicts.
    Budget,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Derive => "derive",
            Command::Cool { .. } => "cool",
            Command::Collide { .. } => "collide",
            Command::Fit { .. } => "fit",
            Command::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub schema_version: String,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: u64,
    pub subcommand: String,
    pub arguments: Vec<String>,
    pub version: String,
    /// Unix time [s]; SOURCE_DATE_EPOCH overrides the clock.
    pub timestamp: u64,
}

/// Version of the files under `schemas/`.
pub const SCHEMA_VERSION: &str = "1";

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        })
}

/// A value with its unit.
fn q(value: f64, unit: &str) -> Value {
    json!({"value": value, "unit": unit})
}

fn load(path: Option<&Path>) -> Result<(SystemConfig, PathBuf, String)> {
    let path = path.ok_or_else(|| Error::config("--config", "a configuration file is required"))?;
    let text = std::fs::read_to_string(path)?;
    let hash = format!("{:x}", Sha256::digest(text.as_bytes()));
    Ok((SystemConfig::from_json(&text)?, path.to_path_buf(), hash))
}

/// Reference values for the bundled single-species configuration.
fn reference_comparison(derived: &Value) -> Value {
    let get = |ptr: &str| {
        derived
            .pointer(ptr)
            .and_then(Value::as_f64)
            .unwrap_or(f64::NAN)
    };
    let row = |name: &str, computed: f64, reference: f64, unit: &str| {
        json!({"quantity": name, "computed": computed, "reference": reference,
               "ratio": computed / reference, "unit": unit})
    };
    json!([
        row("sphere mass", get("/sphere/mass/value"), 1.03e-18, "kg"),
        row(
            "z_zpf",
            get("/trap/zero_point_fluctuation/0/value"),
            4.0e-12,
            "m"
        ),
        row(
            "x_zpf",
            get("/trap/zero_point_fluctuation/1/value"),
            4.0e-12,
            "m"
        ),
        row(
            "y_zpf",
            get("/trap/zero_point_fluctuation/2/value"),
            6.4e-12,
            "m"
        ),
        row("g_z", get("/couplings/0/g").abs(), 52.2, "rad/s"),
        row("g_x", get("/couplings/1/g").abs(), 2.2, "rad/s"),
        row("g_y", get("/couplings/2/g").abs(), 2.2, "rad/s"),
        row("collision rate", get("/collisions/rate/value"), 10.0, "1/s"),
        row(
            "mean kick, y axis",
            get("/collisions/mean_elastic_kick/0/2"),
            4.0,
            "phonons"
        ),
        row(
            "cooling rate, z axis",
            get("/cooling/0/cooling_rate/value"),
            1e2,
            "1/s"
        ),
    ])
}

pub fn cmd_derive(config: &SystemConfig, config_path: &Path) -> Result<Value> {
    let mass = config.mass();
    let pairs = build_pairs(config)?;
    let cav = &config.cavity;
    let axes = Axis::ALL;
    let kappa = cav.kappa();
    let finesse_kappa = cav.finesse().map(|f| kappa_from_finesse(cav.length, f));
    let setup = ExperimentSetup::new(
        &config.sphere,
        mass,
        config.trap.omega,
        [1.0; 3],
        &config.gas,
        &config.detection,
    );
    let cooling: Vec<Value> = axes
        .iter()
        .map(|&a| {
            let p = pairs.pair(a);
            let rate = cooling_rate(p.coupling, p.amplitude.norm(), p.kappa, p.mech_frequency);
            let floor = final_phonon_number(p.mech_frequency, p.effective_detuning, p.kappa).ok();
            json!({
                "axis": a,
                "intracavity_photons": p.photons(),
                "drive_strength": q(p.drive_strength, "rad/s"),
                "detuning": q(p.detuning, "rad/s"),
                "effective_detuning": q(p.effective_detuning, "rad/s"),
                "enhanced_coupling": q(p.enhanced_coupling(), "rad/s"),
                "stability": stability_check(p),
                "cooling_rate": q(rate.rate, "1/s"),
                "cooling_rate_printed": q(rate.printed, "1/s"),
                "weak_coupling": rate.weak_coupling,
                "phonon_decay_time": q(phonon_decay_time(p.coupling, p.amplitude.norm(), p.kappa), "s"),
                "sideband_floor": floor.map(|f| f.phonons),
                "unresolved_sideband": floor.map(|f| f.unresolved),
            })
        })
        .collect();
    let mut derived = json!({
        "sphere": {
            "mass": q(mass, "kg"),
            "volume": q(config.sphere.volume(), "m^3"),
            "polarizability": q(polarizability(&config.sphere), "C m^2/V"),
        },
        "trap": {
            "omega": axes.map(|a| q(config.trap.omega(a), "rad/s")),
            "frequency": axes.map(|a| q(config.trap.omega(a) / std::f64::consts::TAU, "Hz")),
            "zero_point_fluctuation": axes.map(|a| q(zero_point_fluctuation(mass, config.trap.omega(a)), "m")),
            "rms_amplitude_300K": axes.map(|a| rms_amplitude_check(mass, config.trap.omega(a), 300.0, cav.wavelength)),
            "rms_amplitude_1K": axes.map(|a| rms_amplitude_check(mass, config.trap.omega(a), 1.0, cav.wavelength)),
            "position": q_vec(&config.trap.position, "m"),
        },
        "cavity": {
            "kappa": q(kappa, "rad/s"),
            "finesse": cav.finesse(),
            "kappa_from_finesse": finesse_kappa.map(|k| q(k, "rad/s")),
            "kappa_ratio": finesse_kappa.map(|k| kappa / k),
            "mode_volumes": mode_volumes(cav).map(|v| q(v, "m^3")),
            "wavenumber": q(cav.wavenumber(), "1/m"),
            "mode_frequency": q(cav.mode_frequency(), "rad/s"),
        },
        "couplings": pairs.couplings,
        "cooling": cooling,
        "collisions": {
            "rate": q(setup.rates.total, "1/s"),
            "rate_per_species": setup.rates.per_species,
            "species": config.gas.species.iter().map(|s| json!({"name": s.name, "mass": q(s.mass, "kg"), "fraction": s.fraction})).collect::<Vec<_>>(),
            "mean_elastic_kick": config.gas.species.iter().map(|s| axes.map(|a| mean_elastic_kick(s.mass, config.gas.temperature, mass, config.trap.omega(a)))).collect::<Vec<_>>(),
        },
        "warnings": pairs.warnings,
    });
    if config_path.file_stem().and_then(|s| s.to_str()) == Some("paper_sec3") {
        let table = reference_comparison(&derived);
        derived["reference_comparison"] = table;
    }
    Ok(derived)
}

fn q_vec(v: &[f64; 3], unit: &str) -> Value {
    json!({"value": v, "unit": unit})
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoolAxis {
    pub axis: Axis,
    pub stability: StabilityVerdict,
    /// Largest real part of the drift eigenvalues [1/s].
    pub spectral_abscissa: f64,
    pub initial_phonons: f64,
    pub final_phonons: f64,
    /// Stationary occupation; absent for an undriven axis, whose
    /// mechanics has no damping.
    pub steady_state_phonons: Option<f64>,
    pub sideband_floor: Option<f64>,
    /// [1/s]
    pub cooling_rate: f64,
    pub cooling_rate_printed: f64,
    /// Exponential fit to the simulated phonon number [1/s].
    pub fitted_decay_rate: Option<f64>,
    pub fitted_over_formula: Option<f64>,
    /// [s]
    pub step: f64,
    pub below_one: bool,
}

pub struct CoolRun {
    pub axes: Vec<CoolAxis>,
    pub trajectories: Vec<Vec<CovarianceState>>,
    pub kappa: f64,
}

pub fn cmd_cool(config: &SystemConfig, t_end: f64) -> Result<CoolRun> {
    let pairs = build_pairs(config)?;
    let results: Vec<Result<(CoolAxis, Vec<CovarianceState>)>> = Axis::ALL
        .par_iter()
        .map(|&axis| {
            let pair = pairs.pair(axis);
            let dd = build_drift_diffusion(pair);
            let verdict = stability_check(pair);
            let abscissa = spectral_abscissa(&dd);
            if abscissa > 1e-10 * dd.drift.amax() {
                return Err(Error::Unstable(format!(
                    "{axis} axis: drift eigenvalue with real part {abscissa:.4e} /s; S1 = {:.4e}, S2 = {:.4e}, \
                     critical g|alpha| = {:.4e} rad/s",
                    verdict.s1, verdict.s2, verdict.critical_g_alpha
                )));
            }
            let n0 = config.initial_phonons[axis.index()];
            let dt = step_bound(&dd);
            let steps = (t_end / dt).ceil().max(1.0) as usize;
            let traj = propagate_covariance(&dd, &CovarianceState::thermal(n0), t_end, dt, (steps / 2000).max(1))?;
            let steady = if pair.enhanced_coupling() > 0.0 {
                Some(steady_state_covariance(&dd)?.phonons())
            } else {
                None
            };
            let rate = cooling_rate(pair.coupling, pair.amplitude.norm(), pair.kappa, pair.mech_frequency);
            let times: Vec<f64> = traj.iter().map(|s| s.time).collect();
            let n: Vec<f64> = traj.iter().map(CovarianceState::phonons).collect();
            let fitted = steady.and_then(|floor| fit_exponential_decay(&times, &n, floor, 0.05));
            let final_phonons = *n.last().expect("non-empty trajectory");
            Ok((
                CoolAxis {
                    axis,
                    stability: verdict,
                    spectral_abscissa: abscissa,
                    initial_phonons: n0,
                    final_phonons,
                    steady_state_phonons: steady,
                    sideband_floor: final_phonon_number(pair.mech_frequency, pair.effective_detuning, pair.kappa)
                        .ok()
                        .map(|f| f.phonons),
                    cooling_rate: rate.rate,
                    cooling_rate_printed: rate.printed,
                    fitted_decay_rate: fitted,
                    fitted_over_formula: fitted.map(|f| f / rate.rate),
                    step: dt,
                    below_one: final_phonons < 1.0,
                },
                traj,
            ))
        })
        .collect();
    let mut axes = Vec::new();
    let mut trajectories = Vec::new();
    for r in results {
        let (a, t) = r?;
        axes.push(a);
        trajectories.push(t);
    }
    Ok(CoolRun {
        axes,
        trajectories,
        kappa: config.cavity.kappa(),
    })
}

fn write_timeseries(path: &Path, run: &CoolRun) -> Result<()> {
    let header = [
        "axis", "t", "n_phonon", "flux", "v00", "v01", "v02", "v03", "v11", "v12", "v13", "v22",
        "v23", "v33",
    ];
    let rows = run
        .axes
        .iter()
        .zip(&run.trajectories)
        .flat_map(|(a, traj)| {
            traj.iter().map(move |s| {
                let mut row = vec![
                    a.axis.name().to_string(),
                    format_sig(s.time),
                    format_sig(s.phonons()),
                    format_sig(run.kappa * s.photons()),
                ];
                row.extend(s.upper_triangle().iter().map(|&v| format_sig(v)));
                row
            })
        });
    write_table(path, &header, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollideSummary {
    pub duration: f64,
    pub events: usize,
    pub records: usize,
    pub collision_rate: f64,
    pub merged_pulses: [usize; 3],
    pub detectability: DetectabilityReport,
    pub warnings: Vec<String>,
}

/// Runs one subcommand, writing its files into `cli.out`; returns the
/// summary printed on stdout.
pub fn execute(cli: &Cli, arguments: &[String]) -> Result<Value> {
    let (config, config_path, hash) = load(cli.config.as_deref())?;
    std::fs::create_dir_all(&cli.out)?;
    let out = |name: &str| cli.out.join(name);
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION.to_string(),
        config_path: config_path.display().to_string(),
        config_sha256: hash,
        seed: cli.seed,
        subcommand: cli.command.name().to_string(),
        arguments: arguments.to_vec(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: timestamp(),
    };
    let summary = match &cli.command {
        Command::Derive => {
            let derived = cmd_derive(&config, &config_path)?;
            write_json(&out("derived.json"), &derived)?;
            derived
        }
        Command::Cool { t_end } => {
            if !(*t_end > 0.0) {
                return Err(Error::Invalid(format!("--t-end must be > 0, got {t_end}")));
            }
            let run = cmd_cool(&config, *t_end)?;
            write_timeseries(&out("timeseries.csv"), &run)?;
            let s = json!({"t_end": t_end, "axes": run.axes});
            write_json(&out("cool.json"), &s)?;
            s
        }
        Command::Collide { duration } => {
            if !(*duration >= 0.0) {
                return Err(Error::Invalid(format!(
                    "--duration must be >= 0, got {duration}"
                )));
            }
            let setup = ExperimentSetup::from_config(&config)?;
            let exp = setup.run(*duration, cli.seed);
            write_events(&out("events.csv"), &exp.events)?;
            write_detections(&out("detections.csv"), &exp.records)?;
            let mixture = setup.kick_mixture();
            write_json(
                &out("histograms.json"),
                &json!({
                    "kick_model": setup.kick_model(),
                    "kick_shape": mixture.shape,
                    "efficiency": setup.detection.efficiency,
                    "components": mixture.components,
                    "species": config.gas.species.iter().map(|s| &s.name).collect::<Vec<_>>(),
                    "axes": exp.histograms,
                }),
            )?;
            let s = CollideSummary {
                duration: *duration,
                events: exp.events.len(),
                records: exp.records.len(),
                collision_rate: setup.rates.total,
                merged_pulses: exp.merged_pulses,
                detectability: setup.detectability(),
                warnings: exp.warnings,
            };
            write_json(&out("collide.json"), &s)?;
            serde_json::to_value(&s)?
        }
        Command::Fit {
            detections,
            species,
            surface_temperature,
        } => {
            let records = read_detections(detections)?;
            let setup = ExperimentSetup::from_config(&config)?;
            let s = if *surface_temperature {
                json!({"surface_temperature": surface_temperature_estimate(&records, &setup)?})
            } else {
                json!({"species_fit": fit_species(&records, *species, &setup)?})
            };
            write_json(&out("fit.json"), &s)?;
            s
        }
        Command::Budget => {
            let pairs = build_pairs(&config)?;
            let report = budget(&config, &pairs, BudgetThresholds::default());
            write_json(&out("budget.json"), &report)?;
            eprint!("{}", report.table());
            serde_json::to_value(&report)?
        }
    };
    write_json(&out("manifest.json"), &manifest)?;
    Ok(summary)
}

/// Entry point of the binary; returns the process exit code.
pub fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    match execute(&cli, &args[1..]) {
        Ok(summary) => match to_json_string(&summary) {
            Ok(s) => {
                print!("{s}");
                0
            }
            Err(e) => report(&e),
        },
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
    1
}
