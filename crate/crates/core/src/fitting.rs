//! Single-rate exponential fits of free-path samples.
//!
//! Maximum likelihood gives `1 / mean`. The least-squares fit matches
//! `mu exp(-mu x)` to a density-normalized histogram at bin centres,
//! minimized by a log-spaced scan followed by golden-section refinement
//! inside `[0.01, 100]` times the MLE rate.

use std::path::Path;

use crate::error::{invalid, Error, Result};

pub const DEFAULT_BINS: usize = 50;
/// Upper histogram edge as a sample quantile.
pub const HISTOGRAM_QUANTILE: f64 = 0.999;

const BRACKET_LO: f64 = 0.01;
const BRACKET_HI: f64 = 100.0;
const SCAN_POINTS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Count in bin divided by (total count * bin width).
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpFit {
    pub mu_mle: f64,
    pub mu_ls: f64,
    pub n_samples: usize,
    /// Against `Exp(mu_mle)`.
    pub ks_stat: f64,
    pub histogram: Histogram,
}

fn check_samples(samples: &[f64], min: usize) -> Result<()> {
    if samples.len() < min {
        return Err(invalid(format!(
            "need at least {min} samples, got {}",
            samples.len()
        )));
    }
    if let Some(v) = samples.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(invalid(format!("samples must be positive and finite, found {v}")));
    }
    Ok(())
}

pub fn fit_mle(samples: &[f64]) -> Result<f64> {
    check_samples(samples, 2)?;
    Ok(samples.len() as f64 / samples.iter().sum::<f64>())
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Empirical quantile by the nearest-rank rule.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

/// Equal-width histogram of `samples` on `[0, upper]`; larger samples are dropped
/// from the counts but kept in the normalizing total.
pub fn histogram(samples: &[f64], n_bins: usize, upper: f64) -> Result<Histogram> {
    if n_bins == 0 || !(upper > 0.0 && upper.is_finite()) {
        return Err(invalid("histogram needs bins and a positive upper edge"));
    }
    let width = upper / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    for &v in samples {
        if (0.0..=upper).contains(&v) {
            counts[((v / width) as usize).min(n_bins - 1)] += 1;
        }
    }
    let norm = 1.0 / (samples.len() as f64 * width);
    Ok(Histogram {
        edges: (0..=n_bins).map(|k| k as f64 * width).collect(),
        density: counts.iter().map(|&c| c as f64 * norm).collect(),
    })
}

fn ls_objective(h: &Histogram, mu: f64) -> f64 {
    h.centers()
        .zip(&h.density)
        .map(|(x, p)| {
            let r = mu * (-mu * x).exp() - p;
            r * r
        })
        .sum()
}

/// Least-squares rate for a given histogram, searched around `guess`.
pub fn fit_least_squares_histogram(h: &Histogram, guess: f64) -> Result<f64> {
    if !(guess > 0.0 && guess.is_finite()) {
        return Err(invalid(format!("rate guess must be positive, got {guess}")));
    }
    let nonempty = h.density.iter().filter(|p| **p > 0.0).count();
    if nonempty < 2 {
        return Err(Error::Numerical(format!(
            "degenerate histogram: {nonempty} nonempty bin(s), no exponential shape to fit"
        )));
    }
    let (lo, hi) = ((BRACKET_LO * guess).ln(), (BRACKET_HI * guess).ln());
    let f = |t: f64| ls_objective(h, t.exp());
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let (k_best, _) = (0..SCAN_POINTS)
        .map(|k| (k, f(lo + k as f64 * step)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if k_best == 0 || k_best == SCAN_POINTS - 1 {
        return Err(Error::Numerical(format!(
            "least-squares minimum at bracket edge {:.6e} of [{:.6e}, {:.6e}]",
            (lo + k_best as f64 * step).exp(),
            lo.exp(),
            hi.exp()
        )));
    }
    let (mut a, mut b) = (lo + (k_best - 1) as f64 * step, lo + (k_best + 1) as f64 * step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if (b - a).abs() >= 1e-10 {
        return Err(Error::Numerical(format!(
            "golden section did not converge: bracket [{:.6e}, {:.6e}]",
            a.exp(),
            b.exp()
        )));
    }
    Ok((0.5 * (a + b)).exp())
}

pub fn fit_least_squares(samples: &[f64], n_bins: usize) -> Result<f64> {
    check_samples(samples, 2)?;
    if n_bins < 5 {
        return Err(invalid(format!("need at least 5 bins, got {n_bins}")));
    }
    let s = sorted(samples);
    let h = histogram(&s, n_bins, quantile_sorted(&s, HISTOGRAM_QUANTILE))?;
    fit_least_squares_histogram(&h, fit_mle(samples)?)
}

/// Kolmogorov–Smirnov distance between the sample and `1 - exp(-mu x)`.
pub fn ks_statistic(samples: &[f64], mu: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid(format!("rate must be positive, got {mu}")));
    }
    let s = sorted(samples);
    let n = s.len() as f64;
    Ok(s.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let cdf = if x > 0.0 { -(-mu * x).exp_m1() } else { 0.0 };
        acc.max(cdf - i as f64 / n).max((i + 1) as f64 / n - cdf)
    }))
}

pub fn fit_exponential(samples: &[f64], n_bins: usize) -> Result<ExpFit> {
    let mu_mle = fit_mle(samples)?;
    if n_bins < 5 {
        return Err(invalid(format!("need at least 5 bins, got {n_bins}")));
    }
    let s = sorted(samples);
    let histogram = histogram(&s, n_bins, quantile_sorted(&s, HISTOGRAM_QUANTILE))?;
    let mu_ls = fit_least_squares_histogram(&histogram, mu_mle)?;
    Ok(ExpFit {
        mu_mle,
        mu_ls,
        n_samples: samples.len(),
        ks_stat: ks_statistic(&s, mu_mle)?,
        histogram,
    })
}

/// One value per line; blank lines and `#` comments are skipped.
pub fn parse_samples(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| Error::Parse {
            line: i + 1,
            msg: format!("not a number: {t:?}"),
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    parse_samples(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::exp_inverse;
    use crate::rng::stream;
    use rand::Rng;

    fn draws(mu: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut r = stream(seed, 0);
        (0..n).map(|_| exp_inverse(mu, 1.0 - r.gen::<f64>())).collect()
    }

    #[test]
    fn mle_trivial_cases() {
        assert_eq!(fit_mle(&[2.0, 2.0, 2.0]).unwrap(), 0.5);
        assert_eq!(fit_mle(&[1.0, 3.0]).unwrap(), 0.5);
        assert!(fit_mle(&[1.0]).is_err());
        assert!(fit_mle(&[1.0, 0.0]).is_err());
        assert!(fit_mle(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn mle_within_asymptotic_band() {
        let mu = fit_mle(&draws(2.0, 1_000_000, 1)).unwrap();
        assert!((mu - 2.0).abs() < 3.0 * 2.0 / 1000.0, "{mu}");
    }

    #[test]
    fn least_squares_on_exact_histogram() {
        // bin-average densities differ from centre values by O(width^2 / 24);
        // fine bins push that below 1e-6
        let n_bins = 4_000;
        let upper = -(0.001f64).ln();
        let w = upper / n_bins as f64;
        let h = Histogram {
            edges: (0..=n_bins).map(|k| k as f64 * w).collect(),
            density: (0..n_bins)
                .map(|k| ((-(k as f64) * w).exp() - (-((k + 1) as f64) * w).exp()) / w)
                .collect(),
        };
        let mu = fit_least_squares_histogram(&h, 1.0).unwrap();
        assert!((mu - 1.0).abs() < 1e-6, "{mu}");
    }

    #[test]
    fn least_squares_on_draws() {
        let s = draws(2.0, 1_000_000, 2);
        let mu = fit_least_squares(&s, 50).unwrap();
        assert!((1.9..=2.1).contains(&mu), "{mu}");
        let mle = fit_mle(&s).unwrap();
        assert!((mu - mle).abs() / mle < 0.05);
    }

    #[test]
    fn constant_samples_fail_to_fit() {
        let s = vec![1.5; 1000];
        assert!(matches!(fit_least_squares(&s, 50), Err(Error::Numerical(_))));
    }

    #[test]
    fn ks_on_exact_quantiles() {
        let n = 1000;
        let s: Vec<f64> = (0..n)
            .map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln() / 1.5)
            .collect();
        assert!(ks_statistic(&s, 1.5).unwrap() <= 0.5 / n as f64 + 1e-12);
    }

    #[test]
    fn ks_detects_wrong_rate() {
        let s = draws(1.0, 10_000, 3);
        assert!(ks_statistic(&s, 1.0).unwrap() < 1.63 / 100.0);
        assert!(ks_statistic(&s, 3.0).unwrap() > 0.3);
    }

    #[test]
    fn parse_reports_line_numbers() {
        assert_eq!(parse_samples("1.5\n# c\n\n2e-1\n").unwrap(), vec![1.5, 0.2]);
        assert_eq!(
            parse_samples("1\n2\nx\n"),
            Err(Error::Parse {
                line: 3,
                msg: "not a number: \"x\"".into()
            })
        );
    }
}
