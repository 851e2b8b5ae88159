use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom (chi-square) or sample size (KS).
    pub dof: usize,
}

impl TestResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Asymptotic Kolmogorov survival function Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against a continuous distribution
/// function, with the Stephens small-sample correction.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> TestResult {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x.iter().enumerate().fold(0.0f64, |d, (i, &v)| {
        let f = cdf(v);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    });
    let sn = n.sqrt();
    TestResult {
        statistic: d,
        p_value: kolmogorov_q((sn + 0.12 + 0.11 / sn) * d),
        dof: x.len(),
    }
}

/// Pearson chi-square goodness of fit of integer counts `observed[k]`
/// against probabilities `probs[k]` (the last bin may be an open tail).
/// Adjacent bins are pooled from the top until every expected count is at
/// least `min_expected`.
pub fn chi_square_test(
    observed: &[u64],
    probs: &[f64],
    min_expected: f64,
    fitted_params: usize,
) -> TestResult {
    assert_eq!(observed.len(), probs.len());
    let total: f64 = observed.iter().sum::<u64>() as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &p) in observed.iter().zip(probs) {
        o += ob as f64;
        e += p * total;
        if e >= min_expected {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    let stat: f64 = bins
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else { 0.0 })
        .sum();
    let dof = bins.len().saturating_sub(1 + fitted_params).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(stat);
    TestResult {
        statistic: stat,
        p_value,
        dof,
    }
}
