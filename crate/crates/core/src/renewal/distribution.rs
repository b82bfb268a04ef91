use rand::Rng;

use crate::error::{invalid, Result};

/// Free-path (step length) law: a finite mixture of exponentials.
///
/// `Exponential(mu)` is stored as the one-component mixture `[(1, mu)]`, so
/// both spellings behave identically everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    weights: Vec<f64>,
    rates: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StepDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::hyperexponential(&[1.0], &[rate])
    }

    pub fn hyperexponential(weights: &[f64], rates: &[f64]) -> Result<Self> {
        if weights.is_empty() || weights.len() != rates.len() {
            return Err(invalid("mixture needs matching, nonempty weights and rates"));
        }
        if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(invalid(format!("rate must be finite and > 0, got {r}")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && **w <= 1.0)) {
            return Err(invalid(format!("weight must lie in (0, 1], got {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("weights must sum to 1, got {total}")));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            weights: weights.to_vec(),
            rates: rates.to_vec(),
            cumulative,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Number of mixture components.
    pub fn order(&self) -> usize {
        self.rates.len()
    }

    /// `Some(mu)` for a single-rate law.
    pub fn single_rate(&self) -> Option<f64> {
        (self.rates.len() == 1).then(|| self.rates[0])
    }

    pub fn mean(&self) -> f64 {
        self.components().map(|(a, mu)| a / mu).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.components().map(|(a, mu)| 2.0 * a / (mu * mu)).sum()
    }

    /// `E[exp(-s Y)] = sum a_i mu_i / (mu_i + s)`, defined for `s > -min(mu)`.
    pub fn laplace(&self, s: f64) -> f64 {
        self.components().map(|(a, mu)| a * mu / (mu + s)).sum()
    }

    /// Derivative of [`Self::laplace`] with respect to `s`.
    pub fn laplace_derivative(&self, s: f64) -> f64 {
        self.components()
            .map(|(a, mu)| -a * mu / ((mu + s) * (mu + s)))
            .sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        self.components().map(|(a, mu)| a * (-(-mu * y).exp_m1())).sum()
    }

    pub fn components(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.weights.iter().copied().zip(self.rates.iter().copied())
    }

    /// One strictly positive draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let rate = if self.rates.len() == 1 {
            self.rates[0]
        } else {
            let u: f64 = rng.gen();
            let k = self
                .cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or(self.rates.len() - 1);
            self.rates[k]
        };
        exp_inverse(rate, open_unit(rng))
    }
}

/// Inverse CDF of Exp(rate) written as `-ln(u) / rate`.
pub fn exp_inverse(rate: f64, u: f64) -> f64 {
    -u.ln() / rate
}

/// Uniform draw on the open interval (0, 1).
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn sample_mean_var(d: &StepDistribution, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = stream(seed, 0);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let y = d.sample(&mut rng);
            assert!(y > 0.0);
            s += y;
            s2 += y * y;
        }
        let m = s / n as f64;
        (m, s2 / n as f64 - m * m)
    }

    #[test]
    fn inverse_cdf_at_inverse_e() {
        let y = exp_inverse(2.0, (-1.0f64).exp());
        assert!((y - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exponential_mean_within_clt_bound() {
        let d = StepDistribution::exponential(1.0).unwrap();
        let (m, _) = sample_mean_var(&d, 1_000_000, 11);
        assert!((0.997..=1.003).contains(&m), "mean {m}");
    }

    #[test]
    fn degenerate_mixture_matches_exponential() {
        let e = StepDistribution::exponential(1.7).unwrap();
        let h = StepDistribution::hyperexponential(&[1.0], &[1.7]).unwrap();
        assert_eq!(e, h);
        let (m1, v1) = sample_mean_var(&e, 1_000_000, 1);
        let (m2, v2) = sample_mean_var(&h, 1_000_000, 2);
        let se = ((v1 + v2) / 1e6).sqrt();
        assert!((m1 - m2).abs() < 3.0 * se);
    }

    #[test]
    fn mixture_moments() {
        let d = StepDistribution::hyperexponential(&[0.5, 0.5], &[1.0, 2.0]).unwrap();
        assert!((d.mean() - 0.75).abs() < 1e-15);
        let (m, _) = sample_mean_var(&d, 400_000, 5);
        let sd = (d.second_moment() - d.mean().powi(2)).sqrt();
        assert!((m - 0.75).abs() < 4.0 * sd / 400_000f64.sqrt());
        assert!((d.laplace(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(StepDistribution::exponential(0.0).is_err());
        assert!(StepDistribution::exponential(-1.0).is_err());
        assert!(StepDistribution::hyperexponential(&[0.5, 0.4], &[1.0, 2.0]).is_err());
        assert!(StepDistribution::hyperexponential(&[1.0, 0.0], &[1.0, 2.0]).is_err());
        assert!(StepDistribution::hyperexponential(&[1.0], &[1.0, 2.0]).is_err());
    }
}
