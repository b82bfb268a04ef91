//! Roots of the Cramér–Lundberg equation `p L+(g) + q L-(g) = 1/alpha`
//! for hyperexponential step laws, where `L+(g) = E[e^{gY}]` is the
//! transform of an upward step and `L-(g) = E[e^{-gY}]` of a downward one.
//!
//! The rational equation is cleared to a polynomial of degree `2m`, whose
//! roots come from the eigenvalues of its companion matrix. Real roots are
//! then polished by damped Newton iterations on the rational form.

use nalgebra::DMatrix;

use super::StepDistribution;
use crate::error::{invalid, Error, Result};

/// Maximum accepted residual of a returned root.
pub const ROOT_TOLERANCE: f64 = 1e-10;
/// Roots closer than this are treated as coincident.
pub const DISTINCT_TOLERANCE: f64 = 1e-8;

/// Left-hand side minus right-hand side of the Cramér–Lundberg equation.
pub fn cl_residual(dist: &StepDistribution, p: f64, alpha: f64, gamma: f64) -> f64 {
    p * dist.laplace(-gamma) + (1.0 - p) * dist.laplace(gamma) - 1.0 / alpha
}

fn cl_derivative(dist: &StepDistribution, p: f64, gamma: f64) -> f64 {
    -p * dist.laplace_derivative(-gamma) + (1.0 - p) * dist.laplace_derivative(gamma)
}

/// All real roots split by sign.
///
/// `nonpositive` and `nonnegative` each hold exactly `m` roots. At
/// `alpha = 1` the value 0 is a root; for a driftless walk (`p = 1/2`) it is
/// a double root and then appears in both lists with `double_zero` set.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub alpha: f64,
    pub p: f64,
    pub nonpositive: Vec<f64>,
    pub nonnegative: Vec<f64>,
    pub double_zero: bool,
}

type Poly = Vec<f64>;

fn poly_mul(a: &[f64], b: &[f64]) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add_scaled(acc: &mut Poly, p: &[f64], s: f64) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0.0);
    }
    for (a, x) in acc.iter_mut().zip(p) {
        *a += s * x;
    }
}

fn product(factors: impl Iterator<Item = [f64; 2]>) -> Poly {
    factors.fold(vec![1.0], |acc, f| poly_mul(&acc, &f))
}

/// Ascending coefficients of the cleared polynomial
/// `prod(mu_j^2 - g^2) * (p L+(g) + q L-(g) - 1/alpha)`.
fn cleared_polynomial(dist: &StepDistribution, p: f64, alpha: f64) -> Poly {
    let q = 1.0 - p;
    let rates = dist.rates();
    let mut poly = vec![0.0; 2 * rates.len() + 1];
    let mu_plus_g = product(rates.iter().map(|&m| [m, 1.0]));
    let mu_minus_g = product(rates.iter().map(|&m| [m, -1.0]));
    for (i, (a, mu)) in dist.components().enumerate() {
        // p a mu / (mu - g) times the full denominator
        let up = poly_mul(
            &mu_plus_g,
            &product(rates.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &m)| [m, -1.0])),
        );
        let down = poly_mul(
            &mu_minus_g,
            &product(rates.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &m)| [m, 1.0])),
        );
        poly_add_scaled(&mut poly, &up, p * a * mu);
        poly_add_scaled(&mut poly, &down, q * a * mu);
    }
    // prod(mu^2 - g^2) built from quadratic factors
    let quad = rates
        .iter()
        .fold(vec![1.0], |acc, &m| poly_mul(&acc, &[m * m, 0.0, -1.0]));
    poly_add_scaled(&mut poly, &quad, -1.0 / alpha);
    poly
}

fn companion_roots(poly: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mut coeffs = poly.to_vec();
    while coeffs.len() > 1 && coeffs.last().is_some_and(|c| *c == 0.0) {
        coeffs.pop();
    }
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[degree];
    let mut m = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        m[(i, degree - 1)] = -coeffs[i] / lead;
    }
    let eig = m
        .try_schur(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("companion-matrix Schur decomposition did not converge".into()))?
        .complex_eigenvalues();
    Ok(eig.iter().map(|z| (z.re, z.im)).collect())
}

fn polish(dist: &StepDistribution, p: f64, alpha: f64, start: f64) -> f64 {
    let mut g = start;
    let mut r = cl_residual(dist, p, alpha, g);
    for _ in 0..100 {
        if r == 0.0 {
            break;
        }
        let d = cl_derivative(dist, p, g);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let mut step = r / d;
        let mut improved = false;
        for _ in 0..40 {
            let cand = g - step;
            let rc = cl_residual(dist, p, alpha, cand);
            if rc.is_finite() && rc.abs() < r.abs() {
                g = cand;
                r = rc;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    g
}

/// Real roots of the Cramér–Lundberg equation, classified by sign.
pub fn cramer_lundberg_all_roots(dist: &StepDistribution, p: f64, alpha: f64) -> Result<RootSet> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("p must lie in [0, 1], got {p}")));
    }
    let m = dist.order();
    let mut poly = cleared_polynomial(dist, p, alpha);
    let scale = poly.iter().fold(0.0f64, |s, c| s.max(c.abs()));

    let mut zero_mult = 0usize;
    if alpha == 1.0 {
        // g = 0 solves the equation exactly at alpha = 1; deflate it, and once
        // more when the walk has no drift.
        poly.remove(0);
        zero_mult = 1;
        if poly[0].abs() <= 1e-10 * scale {
            poly.remove(0);
            zero_mult = 2;
        }
    }

    let mut negative = Vec::new();
    let mut positive = Vec::new();
    for (re, im) in companion_roots(&poly)? {
        if im.abs() > 1e-7 * (1.0 + re.abs()) {
            return Err(Error::Numerical(format!(
                "complex Cramér–Lundberg root {re}{im:+}i for alpha = {alpha}"
            )));
        }
        let g = polish(dist, p, alpha, re);
        let res = cl_residual(dist, p, alpha, g);
        if !(res.abs() < ROOT_TOLERANCE) {
            return Err(Error::Numerical(format!(
                "root {g} did not polish below {ROOT_TOLERANCE} (residual {res:e}) for alpha = {alpha}"
            )));
        }
        if g < 0.0 {
            negative.push(g);
        } else {
            positive.push(g);
        }
    }
    negative.sort_by(|a, b| b.total_cmp(a));
    positive.sort_by(|a, b| a.total_cmp(b));

    let mut nonpositive = negative;
    let mut nonnegative = positive;
    let double_zero = zero_mult == 2;
    match zero_mult {
        2 => {
            nonpositive.insert(0, 0.0);
            nonnegative.insert(0, 0.0);
        }
        1 => {
            // the zero belongs to whichever side is one short
            if nonpositive.len() < m {
                nonpositive.insert(0, 0.0);
            } else {
                nonnegative.insert(0, 0.0);
            }
        }
        _ => {}
    }
    if nonpositive.len() != m || nonnegative.len() != m {
        return Err(Error::Numerical(format!(
            "expected {m} roots on each side, found {} nonpositive and {} nonnegative (alpha = {alpha}, p = {p})",
            nonpositive.len(),
            nonnegative.len()
        )));
    }
    for set in [&nonpositive, &nonnegative] {
        check_distinct(set, alpha)?;
    }
    Ok(RootSet {
        alpha,
        p,
        nonpositive,
        nonnegative,
        double_zero,
    })
}

fn check_distinct(roots: &[f64], alpha: f64) -> Result<()> {
    for (i, a) in roots.iter().enumerate() {
        for b in &roots[i + 1..] {
            if (a - b).abs() < DISTINCT_TOLERANCE {
                return Err(Error::Numerical(format!(
                    "near-degenerate roots {a} and {b} for alpha = {alpha}"
                )));
            }
        }
    }
    Ok(())
}

/// The `m` nonpositive roots, sorted from 0 downwards.
pub fn cramer_lundberg_roots(dist: &StepDistribution, p: f64, alpha: f64) -> Result<Vec<f64>> {
    Ok(cramer_lundberg_all_roots(dist, p, alpha)?.nonpositive)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(mu: f64) -> StepDistribution {
        StepDistribution::exponential(mu).unwrap()
    }

    #[test]
    fn exponential_closed_form_root() {
        let roots = cramer_lundberg_roots(&exp(1.0), 0.5, 0.5).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] + 0.5f64.sqrt()).abs() < 1e-12, "{roots:?}");
        assert!(cl_residual(&exp(1.0), 0.5, 0.5, roots[0]).abs() < 1e-12);
    }

    #[test]
    fn exponential_root_scales_with_rate() {
        for &(mu, alpha) in &[(2.0, 0.3), (0.4, 0.9), (5.0, 0.01)] {
            let g = cramer_lundberg_roots(&exp(mu), 0.5, alpha).unwrap()[0];
            assert!((g + mu * (1.0f64 - alpha).sqrt()).abs() < 1e-10 * mu);
        }
    }

    #[test]
    fn alpha_one_gives_zero_root() {
        let rs = cramer_lundberg_all_roots(&exp(1.0), 0.5, 1.0).unwrap();
        assert_eq!(rs.nonpositive, vec![0.0]);
        assert_eq!(rs.nonnegative, vec![0.0]);
        assert!(rs.double_zero);
    }

    #[test]
    fn mixture_roots_satisfy_equation() {
        let d = StepDistribution::hyperexponential(&[0.5, 0.5], &[1.0, 2.0]).unwrap();
        let rs = cramer_lundberg_all_roots(&d, 0.5, 0.8).unwrap();
        assert_eq!(rs.nonpositive.len(), 2);
        for &g in rs.nonpositive.iter().chain(&rs.nonnegative) {
            let r = 0.5 * d.laplace(g) + 0.5 * d.laplace(-g) - 1.25;
            assert!(r.abs() < 1e-10, "root {g} residual {r}");
        }
        // symmetric walk: roots come in +/- pairs
        for (a, b) in rs.nonpositive.iter().zip(&rs.nonnegative) {
            assert!((a + b).abs() < 1e-9);
        }
    }

    #[test]
    fn mixture_at_alpha_one_keeps_single_zero_per_side() {
        let d = StepDistribution::hyperexponential(&[0.3, 0.7], &[1.0, 4.0]).unwrap();
        let rs = cramer_lundberg_all_roots(&d, 0.5, 1.0).unwrap();
        assert!(rs.double_zero);
        assert_eq!(rs.nonpositive[0], 0.0);
        assert!(rs.nonpositive[1] < 0.0);
    }

    #[test]
    fn drifting_walk_at_alpha_one() {
        // exponential: roots 0 and (q - p) mu
        let rs = cramer_lundberg_all_roots(&exp(2.0), 0.3, 1.0).unwrap();
        assert!(!rs.double_zero);
        assert_eq!(rs.nonpositive, vec![0.0]);
        assert!((rs.nonnegative[0] - 0.8).abs() < 1e-10);
        let rs = cramer_lundberg_all_roots(&exp(2.0), 0.7, 1.0).unwrap();
        assert!((rs.nonpositive[0] + 0.8).abs() < 1e-10);
        assert_eq!(rs.nonnegative, vec![0.0]);
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(cramer_lundberg_roots(&exp(1.0), 0.5, 0.0).is_err());
        assert!(cramer_lundberg_roots(&exp(1.0), 0.5, 1.5).is_err());
    }

    #[test]
    fn three_component_mixture() {
        let d = StepDistribution::hyperexponential(&[0.2, 0.3, 0.5], &[0.5, 2.0, 7.0]).unwrap();
        for &alpha in &[0.1, 0.5, 0.95, 1.0] {
            let rs = cramer_lundberg_all_roots(&d, 0.5, alpha).unwrap();
            assert_eq!(rs.nonpositive.len(), 3);
            for &g in &rs.nonpositive {
                assert!(cl_residual(&d, 0.5, alpha, g).abs() < ROOT_TOLERANCE);
            }
        }
    }
}
