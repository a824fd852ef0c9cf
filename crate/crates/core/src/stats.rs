//! Small statistics helpers: moments, proportion intervals, two-sample KS.

/// Normal 97.5% quantile.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Running mean/variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> MeanEstimate {
        let stderr = if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        };
        MeanEstimate {
            mean: self.mean,
            stderr,
            samples: self.n,
        }
    }
}

pub fn mean_estimate(xs: impl IntoIterator<Item = f64>) -> MeanEstimate {
    let mut w = Welford::default();
    for x in xs {
        w.push(x);
    }
    w.estimate()
}

/// Normal-approximation 95% half-width of a binomial proportion.
pub fn proportion_halfwidth(p_hat: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    Z95 * (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic Kolmogorov
/// distribution and the Stephens small-sample correction.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS needs nonempty samples");
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let v = x[i].min(y[j]);
        while i < n1 && x[i] <= v {
            i += 1;
        }
        while j < n2 && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    let sq = ne.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
        n1,
        n2,
    }
}

/// Q_KS(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²).
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let a2 = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut prev = 0.0f64;
    for k in 1..=200 {
        let term = sign * 2.0 * (a2 * (k * k) as f64).exp();
        sum += term;
        if term.abs() <= 1e-12 * prev.abs() || term.abs() <= 1e-300 {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
        prev = term;
    }
    1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let e = mean_estimate(xs);
        assert!((e.mean - 4.0).abs() < 1e-12);
        // var = (9+0+4+16+1)/4 = 7.5
        assert!((e.stderr - (7.5f64 / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ks_disjoint_samples() {
        let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..200).map(|i| 1000.0 + i as f64).collect();
        let r = ks_two_sample(&a, &b);
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn kolmogorov_tail_reference_value() {
        // Q(1.3581) ≈ 0.05
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-3);
    }
}
