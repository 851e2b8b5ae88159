use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::counts::CompoundTable;
use super::experiment::ExperimentSetup;
use super::kicks::mean_inelastic_kick;
use super::DetectionRecord;
use crate::constants::{HBAR, K_B};
use crate::{Error, Result};

/// How a molecular mass maps onto the mean count of each axis:
/// μ_j = scale_j · m_m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitModel {
    /// [1/kg]
    pub scale: [f64; 3],
    /// Gamma shape of the kick law.
    pub shape: f64,
}

impl FitModel {
    /// Elastic collisions at the gas temperature, including detector
    /// efficiency: scale_j = η · 2 k_B T/(ħ ω_j m).
    pub fn elastic(setup: &ExperimentSetup) -> Self {
        let eta = setup.detection.efficiency;
        FitModel {
            scale: setup
                .omega
                .map(|w| eta * 2.0 * K_B * setup.gas.temperature / (HBAR * w * setup.sphere_mass)),
            shape: setup.kick_model().gamma_shape(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Relative change of the log-likelihood that ends EM.
    pub tolerance: f64,
    /// Grid step in ln μ of the count-law table.
    pub grid_step: f64,
    pub min_events: usize,
    /// Relative mass separation below which two components count as one.
    pub collapse_separation: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 20,
            max_iterations: 500,
            tolerance: 1e-10,
            grid_step: 0.01,
            min_events: 500,
            collapse_separation: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitComponent {
    /// Estimated molecular mass [kg].
    pub mass: f64,
    /// 95% interval from the observed information; absent when singular.
    pub mass_interval: Option<(f64, f64)>,
    pub weight: f64,
    pub weight_interval: Option<(f64, f64)>,
    /// n̂_j0 per axis (z, x, y) implied by `mass`, before detector losses.
    pub mean_kick: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesFit {
    /// Sorted by mass.
    pub components: Vec<FitComponent>,
    pub log_likelihood: f64,
    /// Best fit with one component fewer; absent for K = 1.
    pub log_likelihood_fewer: Option<f64>,
    pub events: usize,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
    /// Components that cannot be told apart.
    pub collapsed: bool,
    pub warnings: Vec<String>,
}

/// Counts of one collision on each axis; `None` where no record carries
/// this start time.
type EventCounts = [Option<u64>; 3];

/// Regroups per-axis records into collisions by their start time, leaving
/// out records built from more than one collision. Those are flagged, or
/// longer than the shortest pulse on their axis; which pulses merge depends
/// only on the collision times, so dropping them does not bias the counts.
/// Returns the events and the number of records left out.
fn group_events(records: &[DetectionRecord]) -> (Vec<EventCounts>, usize) {
    let mut shortest = [f64::INFINITY; 3];
    for r in records {
        let j = r.axis.index();
        shortest[j] = shortest[j].min(r.duration);
    }
    let mut by_time: BTreeMap<u64, EventCounts> = BTreeMap::new();
    let mut dropped = 0;
    for r in records {
        if r.merged || r.duration > shortest[r.axis.index()] * (1.0 + 1e-9) {
            dropped += 1;
            continue;
        }
        // Non-negative floats order like their bit patterns.
        let e = by_time
            .entry(r.t_start.max(0.0).to_bits())
            .or_insert([None; 3]);
        let slot = &mut e[r.axis.index()];
        *slot = Some(slot.unwrap_or(0) + r.count);
    }
    (by_time.into_values().collect(), dropped)
}

fn merged_warning(dropped: usize) -> Option<String> {
    (dropped > 0).then(|| format!("{dropped} records built from overlapping pulses were left out"))
}

/// Events with counts replaced by indices into per-axis distinct values.
struct Compressed {
    values: [Vec<u64>; 3],
    events: Vec<[Option<usize>; 3]>,
}

fn compress(events: &[EventCounts]) -> Compressed {
    let mut values: [Vec<u64>; 3] = Default::default();
    let mut index: [HashMap<u64, usize>; 3] = Default::default();
    let events = events
        .iter()
        .map(|e| {
            let mut out = [None; 3];
            for j in 0..3 {
                if let Some(k) = e[j] {
                    let next = values[j].len();
                    let i = *index[j].entry(k).or_insert_with(|| {
                        values[j].push(k);
                        next
                    });
                    out[j] = Some(i);
                }
            }
            out
        })
        .collect();
    Compressed { values, events }
}

struct Problem<'a> {
    data: &'a Compressed,
    table: &'a CompoundTable,
    ln_scale: [f64; 3],
    bounds: (f64, f64),
}

impl Problem<'_> {
    /// ln p(k | m) for every distinct count of every axis.
    fn ln_pmf(&self, ln_m: f64) -> [Vec<f64>; 3] {
        std::array::from_fn(|j| {
            let x = ln_m + self.ln_scale[j];
            self.data.values[j]
                .iter()
                .map(|&k| self.table.ln_pmf(k, x))
                .collect()
        })
    }

    fn event_terms(
        &self,
        lp: &[[Vec<f64>; 3]],
        ln_w: &[f64],
        e: &[Option<usize>; 3],
        out: &mut [f64],
    ) {
        for (s, o) in out.iter_mut().enumerate() {
            *o = ln_w[s];
            for j in 0..3 {
                if let Some(i) = e[j] {
                    *o += lp[s][j][i];
                }
            }
        }
    }

    fn log_likelihood(&self, ln_m: &[f64], weights: &[f64]) -> f64 {
        if weights.iter().any(|&w| !(w > 0.0)) {
            return f64::NEG_INFINITY;
        }
        let lp: Vec<_> = ln_m.iter().map(|&x| self.ln_pmf(x)).collect();
        let ln_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        let mut terms = vec![0.0; ln_m.len()];
        self.data
            .events
            .iter()
            .map(|e| {
                self.event_terms(&lp, &ln_w, e, &mut terms);
                log_sum_exp(&terms)
            })
            .sum()
    }

    /// EM from the given start; returns (ln m, weights, log-likelihood,
    /// iterations, converged).
    fn em(
        &self,
        mut ln_m: Vec<f64>,
        mut weights: Vec<f64>,
        opts: &FitOptions,
    ) -> (Vec<f64>, Vec<f64>, f64, usize, bool) {
        let k = ln_m.len();
        let n = self.data.events.len() as f64;
        let mut prev = f64::NEG_INFINITY;
        let mut ll = prev;
        let mut terms = vec![0.0; k];
        for it in 1..=opts.max_iterations {
            let lp: Vec<_> = ln_m.iter().map(|&x| self.ln_pmf(x)).collect();
            let ln_w: Vec<f64> = weights.iter().map(|w| w.max(1e-300).ln()).collect();
            let mut resp_total = vec![0.0; k];
            let mut stats: Vec<[Vec<f64>; 3]> = (0..k)
                .map(|_| std::array::from_fn(|j| vec![0.0; self.data.values[j].len()]))
                .collect();
            ll = 0.0;
            for e in &self.data.events {
                self.event_terms(&lp, &ln_w, e, &mut terms);
                let lse = log_sum_exp(&terms);
                ll += lse;
                for s in 0..k {
                    let r = (terms[s] - lse).exp();
                    resp_total[s] += r;
                    for j in 0..3 {
                        if let Some(i) = e[j] {
                            stats[s][j][i] += r;
                        }
                    }
                }
            }
            for s in 0..k {
                weights[s] = resp_total[s] / n;
                if resp_total[s] > 0.0 {
                    let objective = |x: f64| {
                        let lp = self.ln_pmf(x);
                        (0..3)
                            .map(|j| {
                                stats[s][j]
                                    .iter()
                                    .zip(&lp[j])
                                    .map(|(w, l)| w * l)
                                    .sum::<f64>()
                            })
                            .sum::<f64>()
                    };
                    let lo = (ln_m[s] - 1.5).max(self.bounds.0);
                    let hi = (ln_m[s] + 1.5).min(self.bounds.1);
                    ln_m[s] = golden_max(objective, lo, hi, 1e-9);
                }
            }
            if (ll - prev).abs() <= opts.tolerance * ll.abs() {
                return (ln_m, weights, ll, it, true);
            }
            prev = ll;
        }
        (ln_m, weights, ll, opts.max_iterations, false)
    }
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Maximum of a unimodal function on [lo, hi] by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol * (1.0 + lo.abs().max(hi.abs())) {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    (lo + hi) / 2.0
}

/// Deterministic starting points: events are ranked by a per-event mass
/// proxy and split at quantiles (b/K)^γ, with γ swept over the restarts.
fn initial_points(p: &Problem, k: usize, restarts: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let scale = p.ln_scale.map(f64::exp);
    let mut proxy: Vec<f64> = p
        .data
        .events
        .iter()
        .map(|e| {
            let (mut sum, mut n) = (0.0, 0.0);
            for j in 0..3 {
                if let Some(i) = e[j] {
                    sum += p.data.values[j][i] as f64 / scale[j];
                    n += 1.0;
                }
            }
            if n > 0.0 {
                sum / n
            } else {
                0.0
            }
        })
        .collect();
    proxy.sort_by(f64::total_cmp);
    let total = proxy.len();
    let overall = proxy.iter().sum::<f64>() / total as f64;
    let floor = (0.05 * overall).max(p.bounds.0.exp());
    (0..restarts)
        .map(|r| {
            let gamma = if restarts > 1 {
                (-0.7 + 1.4 * r as f64 / (restarts - 1) as f64).exp()
            } else {
                1.0
            };
            let mut cuts: Vec<usize> = (0..=k)
                .map(|b| ((b as f64 / k as f64).powf(gamma) * total as f64).round() as usize)
                .collect();
            cuts[k] = total;
            let mut ln_m = Vec::with_capacity(k);
            let mut w = Vec::with_capacity(k);
            for s in 0..k {
                let (a, b) = (cuts[s], cuts[s + 1].max(cuts[s] + 1).min(total));
                let slice = &proxy[a.min(total - 1)..b];
                let mean = slice.iter().sum::<f64>() / slice.len() as f64;
                let mut m = mean.max(floor) * (1.0 + 0.2 * s as f64);
                if let Some(&prev) = ln_m.last() {
                    m = m.max(f64::exp(prev) * 1.2);
                }
                ln_m.push(m.ln().clamp(p.bounds.0, p.bounds.1));
                w.push((slice.len() as f64 / total as f64).max(1e-3));
            }
            let sum: f64 = w.iter().sum();
            (ln_m, w.into_iter().map(|x| x / sum).collect())
        })
        .collect()
}

/// Central-difference Hessian of the log-likelihood in (ln m_1..K,
/// w_1..w_{K−1}), with w_K = 1 − Σ w.
fn hessian(p: &Problem, ln_m: &[f64], weights: &[f64]) -> DMatrix<f64> {
    let k = ln_m.len();
    let dim = 2 * k - 1;
    let x0: Vec<f64> = ln_m
        .iter()
        .copied()
        .chain(weights[..k - 1].iter().copied())
        .collect();
    let eval = |x: &[f64]| {
        let mut w: Vec<f64> = x[k..].to_vec();
        w.push(1.0 - w.iter().sum::<f64>());
        p.log_likelihood(&x[..k], &w)
    };
    let h: Vec<f64> = (0..dim).map(|i| if i < k { 1e-3 } else { 1e-4 }).collect();
    let f0 = eval(&x0);
    let mut hess = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let at = |di: f64, dj: f64| {
                let mut x = x0.clone();
                x[i] += di * h[i];
                x[j] += dj * h[j];
                eval(&x)
            };
            let v = if i == j {
                (at(1.0, 0.0) - 2.0 * f0 + at(-1.0, 0.0)) / (h[i] * h[i])
            } else {
                (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0))
                    / (4.0 * h[i] * h[j])
            };
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// K-component mixture fit of elastic-collision count records.
pub fn fit_species(
    records: &[DetectionRecord],
    components: usize,
    setup: &ExperimentSetup,
) -> Result<SpeciesFit> {
    fit_species_with(
        records,
        components,
        &FitModel::elastic(setup),
        &FitOptions::default(),
    )
}

pub fn fit_species_with(
    records: &[DetectionRecord],
    components: usize,
    model: &FitModel,
    opts: &FitOptions,
) -> Result<SpeciesFit> {
    if !(1..=3).contains(&components) {
        return Err(Error::Invalid(format!(
            "number of species must be 1, 2 or 3, got {components}"
        )));
    }
    let (events, dropped) = group_events(records);
    if events.len() < opts.min_events {
        return Err(Error::InsufficientData(format!(
            "{} collision events, at least {} are needed for a species fit",
            events.len(),
            opts.min_events
        )));
    }
    let data = compress(&events);
    let k_max = data.values.iter().flatten().copied().max().unwrap_or(0);
    let (mu_min, mu_max) = (1e-3, 1e4);
    let table = CompoundTable::new(model.shape, k_max, mu_min, mu_max, opts.grid_step);
    let ln_scale = model.scale.map(f64::ln);
    let hi_scale = ln_scale.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo_scale = ln_scale.iter().copied().fold(f64::INFINITY, f64::min);
    let bounds = (mu_min.ln() - lo_scale, mu_max.ln() - hi_scale);
    if !(bounds.0 < bounds.1) {
        return Err(Error::Invalid(
            "axis scales span more than the count-law table".into(),
        ));
    }
    let problem = Problem {
        data: &data,
        table: &table,
        ln_scale,
        bounds,
    };

    let best = |k: usize| {
        let runs: Vec<_> = initial_points(&problem, k, opts.restarts)
            .into_par_iter()
            .map(|(m, w)| problem.em(m, w, opts))
            .collect();
        runs.into_iter()
            .reduce(|a, b| {
                let tie = (a.2 - b.2).abs() <= 1e-9 * a.2.abs().max(1.0);
                let sum = |x: &Vec<f64>| x.iter().map(|v| v.exp()).sum::<f64>();
                if tie {
                    if sum(&b.0) < sum(&a.0) {
                        b
                    } else {
                        a
                    }
                } else if b.2 > a.2 {
                    b
                } else {
                    a
                }
            })
            .expect("at least one restart")
    };
    let (ln_m, weights, ll, iterations, converged) = best(components);
    let ll_fewer = (components > 1).then(|| best(components - 1).2);

    let info = -hessian(&problem, &ln_m, &weights);
    let cov = info
        .clone()
        .try_inverse()
        .filter(|c| (0..c.nrows()).all(|i| c[(i, i)] > 0.0));
    let mut order: Vec<usize> = (0..components).collect();
    order.sort_by(|&a, &b| ln_m[a].total_cmp(&ln_m[b]));
    let eta_free = |m: f64| model.scale.map(|s| s * m);
    let se_weight = |s: usize| -> Option<f64> {
        let c = cov.as_ref()?;
        let k = components;
        if k == 1 {
            return Some(0.0);
        }
        if s < k - 1 {
            Some(c[(k + s, k + s)].sqrt())
        } else {
            // w_K = 1 − Σ w_i
            let g = DVector::from_fn(2 * k - 1, |i, _| if i >= k { -1.0 } else { 0.0 });
            Some((g.transpose() * c * g)[(0, 0)].max(0.0).sqrt())
        }
    };
    let comps: Vec<FitComponent> = order
        .iter()
        .map(|&s| {
            let mass = ln_m[s].exp();
            let mass_interval = cov.as_ref().map(|c| {
                let se = c[(s, s)].sqrt();
                ((ln_m[s] - 1.96 * se).exp(), (ln_m[s] + 1.96 * se).exp())
            });
            let weight_interval = se_weight(s).map(|se| {
                (
                    (weights[s] - 1.96 * se).max(0.0),
                    (weights[s] + 1.96 * se).min(1.0),
                )
            });
            FitComponent {
                mass,
                mass_interval,
                weight: weights[s],
                weight_interval,
                mean_kick: eta_free(mass),
            }
        })
        .collect();

    let mut warnings: Vec<String> = merged_warning(dropped).into_iter().collect();
    let mut collapsed = false;
    for pair in comps.windows(2) {
        if pair[1].mass / pair[0].mass - 1.0 < opts.collapse_separation {
            collapsed = true;
            warnings.push(format!(
                "collapse: components at {:.4e} kg and {:.4e} kg are within {}% of each other",
                pair[0].mass,
                pair[1].mass,
                100.0 * opts.collapse_separation
            ));
        }
    }
    if let Some(w) = comps.iter().find(|c| c.weight < 0.01) {
        collapsed = true;
        warnings.push(format!(
            "collapse: a component carries only {:.2e} of the events",
            w.weight
        ));
    }
    if let Some(l0) = ll_fewer {
        // likelihood-ratio test for one more component (2 extra parameters), 1% level
        if 2.0 * (ll - l0) < 9.21 {
            collapsed = true;
            warnings.push(format!(
                "collapse: {components} components improve the log-likelihood by only {:.3} over {}",
                ll - l0,
                components - 1
            ));
        }
    }
    if !converged {
        warnings.push(format!(
            "EM stopped after {} iterations without converging",
            opts.max_iterations
        ));
    }
    if cov.is_none() {
        warnings.push("observed information is singular; no confidence intervals".into());
    }
    Ok(SpeciesFit {
        components: comps,
        log_likelihood: ll,
        log_likelihood_fewer: ll_fewer,
        events: data.events.len(),
        iterations,
        restarts: opts.restarts,
        converged,
        collapsed,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceTemperature {
    /// Maximum-likelihood T_sur [K]; absent when the data only bound it.
    pub estimate: Option<f64>,
    /// 95% profile-likelihood interval [K].
    pub lower: f64,
    pub upper: f64,
    pub log_likelihood: f64,
    pub events: usize,
    pub bound_only: bool,
    pub warnings: Vec<String>,
}

/// ln p(k | μ) of the compound count law for each k in `ks`, in log space.
fn ln_compound_many(ks: &[u64], mu: f64, shape: f64) -> Vec<f64> {
    if !(mu > 0.0) {
        return ks
            .iter()
            .map(|&k| if k == 0 { 0.0 } else { -700.0 })
            .collect();
    }
    let k_max = ks.iter().copied().max().unwrap_or(0) as f64;
    let step = 0.1;
    let lo = -40.0 / shape;
    let hi = (k_max + shape + 10.0 * (k_max + shape).sqrt() + 60.0).ln();
    let n = ((hi - lo) / step).ceil() as usize;
    let theta = mu / shape;
    let lg = ln_gamma(shape);
    let nodes: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let u = lo + i as f64 * step;
            let t = u.exp();
            let x = theta * t;
            let ln_1px = x.ln_1p();
            (x.ln() - ln_1px, shape * u - t - lg + step.ln() - ln_1px)
        })
        .collect();
    ks.par_iter()
        .map(|&k| {
            let k = k as f64;
            let m = nodes
                .iter()
                .map(|&(lr, lw)| k * lr + lw)
                .fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = nodes.iter().map(|&(lr, lw)| (k * lr + lw - m).exp()).sum();
            (m + s.ln()).max(-700.0)
        })
        .collect()
}

/// Maximum-likelihood surface temperature from records taken with the
/// elastic channel frozen out. Species and the elastic/inelastic split are
/// taken as known from `setup`; only T_sur is fitted.
pub fn surface_temperature_estimate(
    records: &[DetectionRecord],
    setup: &ExperimentSetup,
) -> Result<SurfaceTemperature> {
    let p_in = setup.gas.inelastic_fraction;
    if p_in == 0.0 {
        return Err(Error::Invalid(
            "gas.inelastic_fraction is 0, so the counts carry no surface-temperature information"
                .into(),
        ));
    }
    let (events, dropped) = group_events(records);
    if events.is_empty() {
        return Err(Error::InsufficientData("no detection records".into()));
    }
    let data = compress(&events);
    let eta = setup.detection.efficiency;
    let shape = setup.kick_model().gamma_shape();
    let weights = setup.rates.species_weights();
    let t_env = setup.gas.temperature;

    // Elastic components do not depend on T_sur.
    let mut fixed: Vec<(f64, [Vec<f64>; 3])> = Vec::new();
    if p_in < 1.0 {
        for (s, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                let means = setup.elastic_means(s);
                fixed.push((
                    w * (1.0 - p_in),
                    std::array::from_fn(|j| {
                        ln_compound_many(&data.values[j], eta * means[j], shape)
                    }),
                ));
            }
        }
    }
    let log_likelihood = |root_t: f64| -> f64 {
        let t = root_t * root_t;
        let mut comps: Vec<(f64, [Vec<f64>; 3])> = fixed.clone();
        for (s, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                let m = setup.gas.species[s].mass;
                comps.push((
                    w * p_in,
                    std::array::from_fn(|j| {
                        let mu = eta
                            * mean_inelastic_kick(m, t_env, t, setup.sphere_mass, setup.omega[j]);
                        ln_compound_many(&data.values[j], mu, shape)
                    }),
                ));
            }
        }
        let mut terms = vec![0.0; comps.len()];
        data.events
            .iter()
            .map(|e| {
                for (c, o) in comps.iter().zip(terms.iter_mut()) {
                    *o = c.0.ln();
                    for j in 0..3 {
                        if let Some(i) = e[j] {
                            *o += c.1[j][i];
                        }
                    }
                }
                log_sum_exp(&terms)
            })
            .sum()
    };

    let all_zero = events.iter().all(|e| e.iter().all(|k| k.unwrap_or(0) == 0));
    // Moment guess of √T_sur from the mean count per unit of inelastic scale.
    let m_bar: f64 = weights
        .iter()
        .zip(&setup.gas.species)
        .map(|(w, s)| w * s.mass)
        .sum();
    let (mut num, mut den) = (0.0, 0.0);
    for e in &events {
        for j in 0..3 {
            if let Some(k) = e[j] {
                let unit = eta * m_bar * K_B / (2.0 * HBAR * setup.omega[j] * setup.sphere_mass);
                num += k as f64 / p_in;
                den += unit;
            }
        }
    }
    let guess = ((num / den).sqrt() - t_env.sqrt()).max(0.0);
    let span = 3.0 * guess + 1.0;
    let grid = 60;
    let scan: Vec<(f64, f64)> = (0..=grid)
        .map(|i| {
            let s = span * i as f64 / grid as f64;
            (s, log_likelihood(s))
        })
        .collect();
    let (i_best, _) = scan
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty scan");
    let lo = scan[i_best.saturating_sub(1)].0;
    let hi = scan[(i_best + 1).min(grid)].0;
    let s_hat = golden_max(&log_likelihood, lo, hi, 1e-8);
    let ll_hat = log_likelihood(s_hat);
    let target = ll_hat - 1.92;

    let crossing = |mut inside: f64, mut outside: f64| {
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if log_likelihood(mid) > target {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    let lower = if log_likelihood(0.0) > target {
        0.0
    } else {
        crossing(s_hat, 0.0)
    };
    let mut far = s_hat.max(1.0) * 2.0;
    while log_likelihood(far) > target && far < 1e4 {
        far *= 2.0;
    }
    let upper = crossing(s_hat, far);

    let mut warnings: Vec<String> = merged_warning(dropped).into_iter().collect();
    if all_zero {
        warnings.push(
            "all counts are zero: only an upper bound on the surface temperature is available"
                .into(),
        );
    }
    Ok(SurfaceTemperature {
        estimate: (!all_zero).then_some(s_hat * s_hat),
        lower: lower * lower,
        upper: upper * upper,
        log_likelihood: ll_hat,
        events: events.len(),
        bound_only: all_zero,
        warnings,
    })
}
