use rand::Rng;
use rand_distr::{Distribution, Geometric};
use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::gamma::ln_gamma;

/// Normalised Maxwell–Boltzmann energy density of a kick,
/// f(n) = (2/√π) a^{3/2} √n e^{−an}, with a = 3/(2 n̄) so that the mean is
/// `mean`. The √n factor is what makes the density integrate to one.
pub fn kick_pdf(n: f64, mean: f64) -> f64 {
    kick_density(n, mean, 1.5)
}

/// Gamma density with the given shape and mean.
pub fn kick_density(n: f64, mean: f64, shape: f64) -> f64 {
    if n < 0.0 || !(mean > 0.0) {
        return 0.0;
    }
    if n == 0.0 {
        return if shape < 1.0 { f64::INFINITY } else { 0.0 };
    }
    let rate = shape / mean;
    (shape * rate.ln() + (shape - 1.0) * n.ln() - rate * n - ln_gamma(shape)).exp()
}

/// Gamma distribution function with the given shape and mean.
pub fn kick_cdf(n: f64, mean: f64, shape: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if !(mean > 0.0) {
        return 1.0;
    }
    Gamma::new(shape, shape / mean)
        .expect("positive parameters")
        .cdf(n)
}

/// Geometric (thermal) count law p(k) = n̄^k/(1 + n̄)^{k+1}.
pub fn measured_count_pmf(k: u64, mean: f64) -> f64 {
    if !(mean > 0.0) {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * (mean / (1.0 + mean)).ln() - (1.0 + mean).ln()).exp()
}

/// Draws a count from the geometric law with the given mean.
pub fn sample_count<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    Geometric::new(1.0 / (1.0 + mean))
        .expect("p in (0, 1]")
        .sample(rng)
}

const NODE_STEP: f64 = 0.1;

/// Quadrature nodes in u = ln t for ∫ g(t) t^{α−1} e^{−t} dt; returns
/// (t_i, weight_i) with the gamma density and step folded into the weight.
fn gamma_nodes(shape: f64, k_max: u64) -> Vec<(f64, f64)> {
    let k = k_max as f64;
    let lo = -40.0 / shape;
    let hi = (k + shape + 10.0 * (k + shape).sqrt() + 60.0).ln();
    let n = ((hi - lo) / NODE_STEP).ceil() as usize;
    let lg = ln_gamma(shape);
    (0..=n)
        .map(|i| {
            let u = lo + i as f64 * NODE_STEP;
            let t = u.exp();
            (t, (shape * u - t - lg).exp() * NODE_STEP)
        })
        .collect()
}

/// Probabilities p(0..=k_max) of the count when the geometric mean is itself
/// gamma distributed with `shape` and mean `mean`.
pub fn compound_count_pmf(k_max: u64, mean: f64, shape: f64) -> Vec<f64> {
    let mut out = vec![0.0; k_max as usize + 1];
    if !(mean > 0.0) {
        out[0] = 1.0;
        return out;
    }
    let theta = mean / shape;
    for (t, w) in gamma_nodes(shape, k_max) {
        let x = theta * t;
        let r = x / (1.0 + x);
        let mut term = w / (1.0 + x);
        for p in out.iter_mut() {
            *p += term;
            term *= r;
            if term == 0.0 {
                break;
            }
        }
    }
    out
}

/// ln p(k | μ) of the compound count law on a grid in ln μ, for k up to
/// `k_max`, with cubic interpolation between grid points.
#[derive(Debug, Clone)]
pub struct CompoundTable {
    pub shape: f64,
    pub k_max: u64,
    ln_mu_min: f64,
    step: f64,
    /// rows indexed by grid point, columns by k
    ln_p: Vec<Vec<f64>>,
}

/// Floor applied to ln p to keep the likelihood finite.
const LN_P_FLOOR: f64 = -700.0;

impl CompoundTable {
    pub fn new(shape: f64, k_max: u64, mu_min: f64, mu_max: f64, step: f64) -> Self {
        let ln_mu_min = mu_min.ln();
        let n = ((mu_max.ln() - ln_mu_min) / step).ceil() as usize + 1;
        use rayon::prelude::*;
        let ln_p = (0..n)
            .into_par_iter()
            .map(|i| {
                let mu = (ln_mu_min + i as f64 * step).exp();
                compound_count_pmf(k_max, mu, shape)
                    .into_iter()
                    .map(|p| {
                        if p > 0.0 {
                            p.ln().max(LN_P_FLOOR)
                        } else {
                            LN_P_FLOOR
                        }
                    })
                    .collect()
            })
            .collect();
        CompoundTable {
            shape,
            k_max,
            ln_mu_min,
            step,
            ln_p,
        }
    }

    pub fn ln_mu_range(&self) -> (f64, f64) {
        (
            self.ln_mu_min,
            self.ln_mu_min + (self.ln_p.len() - 1) as f64 * self.step,
        )
    }

    /// ln p(k | μ = e^{ln_mu}); ln μ is clamped to the grid.
    pub fn ln_pmf(&self, k: u64, ln_mu: f64) -> f64 {
        let k = k.min(self.k_max) as usize;
        let n = self.ln_p.len();
        let x = ((ln_mu - self.ln_mu_min) / self.step).clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n - 2);
        let s = x - i as f64;
        let at = |j: isize| self.ln_p[j.clamp(0, n as isize - 1) as usize][k];
        let (p0, p1, p2, p3) = (
            at(i as isize - 1),
            at(i as isize),
            at(i as isize + 1),
            at(i as isize + 2),
        );
        // Catmull–Rom
        p1 + 0.5
            * s
            * (p2 - p0
                + s * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + s * (3.0 * (p1 - p2) + p3 - p0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_law() {
        assert_eq!(measured_count_pmf(0, 0.0), 1.0);
        assert_eq!(measured_count_pmf(3, 0.0), 0.0);
        assert!((measured_count_pmf(0, 4.0) - 0.2).abs() < 1e-15);
        let (mut sum, mut mean) = (0.0, 0.0);
        for k in 0..=10_000u64 {
            let p = measured_count_pmf(k, 4.0);
            sum += p;
            mean += k as f64 * p;
        }
        let tail = (4.0f64 / 5.0).powi(10_001);
        assert!((sum - (1.0 - tail)).abs() < 1e-12);
        assert!((mean - 4.0).abs() < 1e-9);
    }

    #[test]
    fn kick_density_mode_and_mean() {
        let mean = 4.0;
        let a = 1.5 / mean;
        // mode of √n e^{−an} at 1/(2a)
        let m = 1.0 / (2.0 * a);
        assert!(kick_pdf(m, mean) > kick_pdf(m * 1.01, mean));
        assert!(kick_pdf(m, mean) > kick_pdf(m * 0.99, mean));
        assert!((kick_cdf(1e9, mean, 1.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compound_law_normalised_with_right_mean() {
        for shape in [0.5, 1.5] {
            for mu in [0.01, 1.0, 4.0, 30.0] {
                let k_max = (300.0 * mu + 400.0) as u64;
                let p = compound_count_pmf(k_max, mu, shape);
                let sum: f64 = p.iter().sum();
                let mean: f64 = p.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
                assert!((sum - 1.0).abs() < 1e-9, "shape {shape} mu {mu}: {sum}");
                assert!(
                    (mean / mu - 1.0).abs() < 1e-6,
                    "shape {shape} mu {mu}: {mean}"
                );
            }
        }
    }

    #[test]
    fn table_interpolates_direct_values() {
        let table = CompoundTable::new(1.5, 40, 1e-2, 1e2, 0.02);
        for mu in [0.0314f64, 0.77, 3.3, 12.9] {
            let direct = compound_count_pmf(40, mu, 1.5);
            for k in [0u64, 1, 5, 20] {
                let t = table.ln_pmf(k, mu.ln());
                assert!((t - direct[k as usize].ln()).abs() < 1e-6, "mu {mu} k {k}");
            }
        }
    }
}
