//! Joint generating function of exit time and overshoot for the one-sided walk:
//! `E[alpha^T exp(-zeta Z)] = sum_i c_i exp(gamma_i x)`.

use nalgebra::{DMatrix, DVector};

use super::roots::cramer_lundberg_roots;
use super::StepDistribution;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OneSidedMgf {
    pub alpha: f64,
    pub zeta: f64,
    pub roots: Vec<f64>,
    pub coeffs: Vec<f64>,
}

/// `R+(v) = prod_j (mu_j + v)`.
fn r_plus(dist: &StepDistribution, v: f64) -> f64 {
    dist.rates().iter().map(|mu| mu + v).product()
}

fn check_zeta(dist: &StepDistribution, zeta: f64) -> Result<()> {
    let min_rate = dist.rates().iter().copied().fold(f64::INFINITY, f64::min);
    if !(zeta.is_finite() && zeta > -min_rate) {
        return Err(invalid(format!("zeta must exceed -{min_rate}, got {zeta}")));
    }
    Ok(())
}

/// `c_i = R+(g_i)/R+(zeta) * prod_{j != i} (zeta - g_j) / (g_i - g_j)`.
pub fn one_sided_coefficients(dist: &StepDistribution, roots: &[f64], zeta: f64) -> Vec<f64> {
    let rz = r_plus(dist, zeta);
    roots
        .iter()
        .enumerate()
        .map(|(i, &gi)| {
            let ratio: f64 = roots
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &gj)| (zeta - gj) / (gi - gj))
                .product();
            r_plus(dist, gi) / rz * ratio
        })
        .collect()
}

/// Same coefficients from the boundary conditions
/// `sum_k c_k / (mu_i + g_k) = 1 / (mu_i + zeta)`, one row per mixture rate.
pub fn one_sided_coefficients_by_solve(
    dist: &StepDistribution,
    roots: &[f64],
    zeta: f64,
) -> Result<Vec<f64>> {
    let m = roots.len();
    let rates = dist.rates();
    let a = DMatrix::from_fn(m, m, |i, k| 1.0 / (rates[i] + roots[k]));
    let b = DVector::from_fn(m, |i, _| 1.0 / (rates[i] + zeta));
    a.lu()
        .solve(&b)
        .map(|c| c.iter().copied().collect())
        .ok_or_else(|| Error::Numerical("singular one-sided boundary system".into()))
}

impl OneSidedMgf {
    pub fn new(dist: &StepDistribution, p: f64, alpha: f64, zeta: f64) -> Result<Self> {
        check_zeta(dist, zeta)?;
        let roots = cramer_lundberg_roots(dist, p, alpha)?;
        let coeffs = one_sided_coefficients(dist, &roots, zeta);
        Ok(Self {
            alpha,
            zeta,
            roots,
            coeffs,
        })
    }

    pub fn value(&self, x: f64) -> f64 {
        self.roots
            .iter()
            .zip(&self.coeffs)
            .map(|(g, c)| c * (g * x).exp())
            .sum()
    }
}

/// `E[alpha^T exp(-zeta Z)]` for the symmetric one-sided walk started at `x`.
pub fn mgf_one_sided(dist: &StepDistribution, x: f64, alpha: f64, zeta: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(invalid(format!("start depth must be >= 0, got {x}")));
    }
    Ok(OneSidedMgf::new(dist, 0.5, alpha, zeta)?.value(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> StepDistribution {
        StepDistribution::exponential(1.0).unwrap()
    }

    #[test]
    fn exponential_coefficient_closed_form() {
        let m = OneSidedMgf::new(&exp1(), 0.5, 0.5, 0.0).unwrap();
        assert!((m.value(0.0) - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
        assert!((m.value(0.0) - 0.29289).abs() < 5e-6);
        let at2 = 0.2928932188134524 * (-0.7071067811865476f64 * 2.0).exp();
        assert!((m.value(2.0) - at2).abs() < 1e-12);
        assert!((m.value(2.0) - 0.07120).abs() < 1e-5);

        let with_zeta = OneSidedMgf::new(&exp1(), 0.5, 0.5, 1.0).unwrap();
        assert!((with_zeta.coeffs[0] - (1.0 - 0.5f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn certain_exit_has_unit_mass() {
        let dists = [
            exp1(),
            StepDistribution::hyperexponential(&[0.5, 0.5], &[1.0, 2.0]).unwrap(),
            StepDistribution::hyperexponential(&[0.2, 0.3, 0.5], &[0.5, 2.0, 7.0]).unwrap(),
        ];
        for d in &dists {
            for &x in &[0.0, 0.3, 1.0, 5.0] {
                let v = mgf_one_sided(d, x, 1.0, 0.0).unwrap();
                assert!((v - 1.0).abs() < 1e-10, "x = {x}: {v}");
            }
        }
    }

    #[test]
    fn closed_form_matches_linear_solve() {
        let d = StepDistribution::hyperexponential(&[0.2, 0.3, 0.5], &[0.5, 2.0, 7.0]).unwrap();
        for &alpha in &[0.2, 0.7, 0.99, 1.0] {
            for &zeta in &[0.0, 0.4, 3.0] {
                let roots = cramer_lundberg_roots(&d, 0.5, alpha).unwrap();
                let a = one_sided_coefficients(&d, &roots, zeta);
                let b = one_sided_coefficients_by_solve(&d, &roots, zeta).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-10, "alpha {alpha} zeta {zeta}: {a:?} vs {b:?}");
                }
            }
        }
    }

    #[test]
    fn overshoot_of_exponential_steps_is_exponential() {
        // alpha = 1: E[e^{-zeta Z}] = mu / (mu + zeta) at every depth
        let d = StepDistribution::exponential(2.5).unwrap();
        for &x in &[0.0, 1.0, 4.0] {
            for &zeta in &[0.5, 2.0] {
                let v = mgf_one_sided(&d, x, 1.0, zeta).unwrap();
                assert!((v - 2.5 / (2.5 + zeta)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(mgf_one_sided(&exp1(), -1.0, 0.5, 0.0).is_err());
        assert!(mgf_one_sided(&exp1(), 1.0, 0.0, 0.0).is_err());
        assert!(mgf_one_sided(&exp1(), 1.0, 0.5, -2.0).is_err());
    }
}
