//! Closed-form reflectivity estimates for homogenized slabs.
//!
//! One-sided (semi-infinite, absorbing matrix with dissipation `beta`):
//! the renewal estimate `rho_hat`, its Cauchy–Schwarz upper bound and the
//! delta-method overshoot correction. Two-sided (height `h`, no
//! absorption): the exact reflectivity for exponential free paths.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::renewal::{cramer_lundberg_roots, one_sided_coefficients, StepDistribution};

/// Default finite-difference step for the delta correction when a finite
/// step is requested without a value.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Dissipation factor (inverse length).
    pub beta: f64,
    /// Free-path rate (inverse length).
    pub mu: f64,
    /// Incidence angle from the slab normal, radians.
    pub theta: f64,
    /// Slab height; `None` for a one-sided (semi-infinite) slab.
    pub height: Option<f64>,
}

impl MediumParams {
    pub fn one_sided(beta: f64, mu: f64, theta: f64) -> Result<Self> {
        let m = Self { beta, mu, theta, height: None };
        m.validate()?;
        Ok(m)
    }

    pub fn two_sided(mu: f64, h: f64, theta: f64) -> Result<Self> {
        let m = Self { beta: 0.0, mu, theta, height: Some(h) };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(invalid(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(invalid(format!("mu must be > 0, got {}", self.mu)));
        }
        check_theta(self.theta)?;
        if let Some(h) = self.height {
            if !(h.is_finite() && h > 0.0) {
                return Err(invalid(format!("height must be > 0, got {h}")));
            }
        }
        Ok(())
    }

    /// `beta / mu`.
    pub fn eta(&self) -> f64 {
        self.beta / self.mu
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..PI / 2.0).contains(&theta) {
        return Err(invalid(format!("theta must lie in [0, pi/2), got {theta}")));
    }
    Ok(())
}

fn require_one_sided(m: &MediumParams) -> Result<()> {
    m.validate()?;
    if m.height.is_some() {
        return Err(invalid("one-sided estimate requested for a two-sided slab"));
    }
    Ok(())
}

/// `sqrt(2 eta / (1 + 2 eta))`, i.e. `-gamma / mu` for `alpha = E[e^{-2 beta Y}]`.
fn root_ratio(eta: f64) -> f64 {
    (2.0 * eta / (1.0 + 2.0 * eta)).sqrt()
}

/// Renewal estimate for exponential free paths at incidence `theta`:
/// `(1 - s)(1 + eta) / (1 + (eta + s) cos(theta))` with `s = sqrt(2 eta/(1 + 2 eta))`.
pub fn rho_hat_exponential(m: &MediumParams) -> Result<f64> {
    require_one_sided(m)?;
    let eta = m.eta();
    let s = root_ratio(eta);
    Ok((1.0 - s) * (1.0 + eta) / (1.0 + (eta + s) * m.theta.cos()))
}

/// Upper bound at normal incidence, finite only for `mu > 2 beta`.
pub fn rho_upper_exponential(m: &MediumParams) -> Result<f64> {
    require_one_sided(m)?;
    if m.theta != 0.0 {
        return Err(invalid("the upper bound is only available at normal incidence"));
    }
    if !(m.mu > 2.0 * m.beta) {
        return Err(Error::UpperBoundInvalid { mu: m.mu, beta: m.beta });
    }
    let eta = m.eta();
    let s = root_ratio(eta);
    Ok((1.0 - s).sqrt() * (1.0 / (1.0 - 2.0 * eta)).sqrt() / (1.0 + eta + 0.5 * s))
}

/// Exact reflectivity of the exponential-step model at normal incidence,
/// `1 / (1 + 2 eta + 2 sqrt(eta (1 + eta)))`.
///
/// With exponential steps the depth follows a two-stream process: the
/// direction flips at rate `mu / 2` per unit path and weight decays at rate
/// `beta`. Its semi-infinite reflectance is the Kubelka–Munk value for
/// `K / S = 2 eta`. Used to measure the error of [`rho_hat_exponential`].
pub fn rho_exact_normal(eta: f64) -> Result<f64> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(invalid(format!("eta must be finite and >= 0, got {eta}")));
    }
    Ok(1.0 / (1.0 + 2.0 * eta + 2.0 * (eta * (1.0 + eta)).sqrt()))
}

/// How the overshoot correction `1 - beta * Delta_eps E[e^{-eps Z / xbar}]` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DeltaMode {
    /// `eps -> 0`, where the correction becomes `1 + beta E[Z]`.
    #[default]
    Limit,
    Finite(f64),
}

/// Overshoot law of the exiting walk averaged over first depths `x cos(theta)`,
/// `x ~ dist`: returns `s -> E[e^{-s Z}]` pieces (roots, `E[e^{g x cos}]`).
struct OvershootLaw<'a> {
    dist: &'a StepDistribution,
    roots: Vec<f64>,
    depth_mgf: Vec<f64>,
}

impl<'a> OvershootLaw<'a> {
    fn new(dist: &'a StepDistribution, cos_theta: f64) -> Result<Self> {
        let roots = cramer_lundberg_roots(dist, 0.5, 1.0)?;
        let depth_mgf = roots
            .iter()
            .map(|g| dist.laplace(-g * cos_theta))
            .collect();
        Ok(Self { dist, roots, depth_mgf })
    }

    /// `E[exp(-s Z)]`.
    fn mgf(&self, s: f64) -> f64 {
        one_sided_coefficients(self.dist, &self.roots, s)
            .iter()
            .zip(&self.depth_mgf)
            .map(|(c, w)| c * w)
            .sum()
    }

    /// `E[Z] = -d/ds E[exp(-s Z)]` at `s = 0`, differentiated in closed form.
    fn mean(&self) -> f64 {
        let rates = self.dist.rates();
        let r_plus = |v: f64| rates.iter().map(|mu| mu + v).product::<f64>();
        let log_r_plus_slope: f64 = rates.iter().map(|mu| 1.0 / mu).sum();
        let r0 = r_plus(0.0);
        let mut slope = 0.0;
        for (i, &gi) in self.roots.iter().enumerate() {
            let others: Vec<f64> = self
                .roots
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &g)| g)
                .collect();
            let denom: f64 = others.iter().map(|g| gi - g).product();
            let numer: f64 = others.iter().map(|g| -g).product();
            let numer_slope: f64 = (0..others.len())
                .map(|l| {
                    others
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != l)
                        .map(|(_, g)| -g)
                        .product::<f64>()
                })
                .sum();
            let dc = r_plus(gi) / denom / r0 * (numer_slope - numer * log_r_plus_slope);
            slope += dc * self.depth_mgf[i];
        }
        -slope
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(invalid(format!("beta must be >= 0, got {beta}")));
    }
    Ok(())
}

fn delta_correction_with(
    dist: &StepDistribution,
    beta: f64,
    mode: DeltaMode,
    cos_theta: f64,
) -> Result<f64> {
    check_beta(beta)?;
    if beta == 0.0 {
        return Ok(1.0);
    }
    let law = OvershootLaw::new(dist, cos_theta)?;
    match mode {
        DeltaMode::Limit => Ok(1.0 + beta * law.mean()),
        DeltaMode::Finite(eps) => {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(invalid(format!("epsilon must be > 0, got {eps}")));
            }
            let xbar = dist.mean() * cos_theta;
            let s = eps / xbar;
            let delta = (law.mgf(2.0 * s) - law.mgf(s)) / s;
            Ok(1.0 - beta * delta)
        }
    }
}

/// `1 - beta (f(2 eps) - f(eps)) / (eps / xbar)` with `f(e) = E[e^{-e Z / xbar}]`
/// and `xbar` the mean first-scattering depth.
pub fn delta_correction(dist: &StepDistribution, beta: f64, epsilon: f64) -> Result<f64> {
    delta_correction_with(dist, beta, DeltaMode::Finite(epsilon), 1.0)
}

/// `eps -> 0` limit of [`delta_correction`]: `1 + beta E[Z]`.
pub fn delta_correction_limit(dist: &StepDistribution, beta: f64) -> Result<f64> {
    delta_correction_with(dist, beta, DeltaMode::Limit, 1.0)
}

/// Renewal estimate for any hyperexponential free-path law:
/// `E_x[e^{-beta x~} E alpha^{T_x~}] * correction`, `x~ = x cos(theta)`,
/// `alpha = E[e^{-2 beta Y}]`.
pub fn rho_hat_general(
    dist: &StepDistribution,
    beta: f64,
    theta: f64,
    mode: DeltaMode,
) -> Result<f64> {
    check_beta(beta)?;
    check_theta(theta)?;
    let cos = theta.cos();
    let alpha = dist.laplace(2.0 * beta);
    let roots = cramer_lundberg_roots(dist, 0.5, alpha)?;
    let coeffs = one_sided_coefficients(dist, &roots, 0.0);
    let discounted: f64 = roots
        .iter()
        .zip(&coeffs)
        .map(|(g, c)| c * dist.laplace((beta - g) * cos))
        .sum();
    Ok(discounted * delta_correction_with(dist, beta, mode, cos)?)
}

/// Exact two-sided reflectivity for exponential free paths, no absorption:
/// `((1 - cos)(1 - e^{-h mu / cos}) + h mu) / (h mu + 2)`.
pub fn rho_two_sided(mu: f64, h: f64, theta: f64) -> Result<f64> {
    MediumParams::two_sided(mu, h, theta)?;
    let c = theta.cos();
    let hm = h * mu;
    Ok(((1.0 - c) * (-(-hm / c).exp_m1()) + hm) / (hm + 2.0))
}

/// Bottom-exit probability of a two-sided walk from the first-scattering
/// depth `x cos(theta)` given the mean overshoots on each side.
pub fn rho_two_sided_from_overshoots(
    x_depth: f64,
    h: f64,
    ez_plus: f64,
    ez_minus: f64,
    theta: f64,
) -> Result<f64> {
    check_theta(theta)?;
    if !(h > 0.0 && ez_plus > 0.0 && ez_minus > 0.0 && x_depth >= 0.0) {
        return Err(invalid("need h > 0, positive overshoot means and x >= 0"));
    }
    let depth = x_depth * theta.cos();
    if depth > h {
        return Err(Error::PassThrough { depth, h });
    }
    Ok((h - depth + ez_plus) / (ez_minus + ez_plus + h))
}

/// Whether the upper bound is finite: `lambda > 4 pi k / mu`, i.e. `mu > 2 beta`
/// with `beta = 2 pi k / lambda`.
pub fn near_field_validity(k_index: f64, lambda: f64, mu: f64) -> bool {
    lambda > 4.0 * PI * k_index / mu
}

/// Dissipation factor `2 pi k / lambda` for extinction index `k`.
pub fn beta_from_index(k_index: f64, lambda: f64) -> f64 {
    2.0 * PI * k_index / lambda
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub eta: f64,
    pub rho_hat: f64,
    pub rho_upper: Option<f64>,
    /// The bound was evaluated (`mu > 2 beta`, normal incidence).
    pub upper_valid: bool,
    /// The bound was refused because the medium is not near-field (`mu <= 2 beta`).
    pub near_field_required: bool,
    /// `rho_hat` fell outside [0, 1] and was clamped.
    pub clamped: bool,
}

/// One-sided estimate plus bound, with `rho_hat` clamped to [0, 1].
pub fn estimate_one_sided(m: &MediumParams) -> Result<EstimateResult> {
    let raw = rho_hat_exponential(m)?;
    let rho_hat = raw.clamp(0.0, 1.0);
    let (rho_upper, near_field_required) = match rho_upper_exponential(m) {
        Ok(u) => (Some(u), false),
        Err(Error::UpperBoundInvalid { .. }) => (None, true),
        Err(Error::InvalidParameter(_)) if m.theta != 0.0 => (None, false),
        Err(e) => return Err(e),
    };
    Ok(EstimateResult {
        eta: m.eta(),
        rho_hat,
        upper_valid: rho_upper.is_some(),
        rho_upper,
        near_field_required,
        clamped: rho_hat != raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(eta: f64, theta: f64) -> MediumParams {
        MediumParams::one_sided(eta, 1.0, theta).unwrap()
    }

    fn exp(mu: f64) -> StepDistribution {
        StepDistribution::exponential(mu).unwrap()
    }

    #[test]
    fn exact_normal_reflectivity() {
        assert_eq!(rho_exact_normal(0.0).unwrap(), 1.0);
        for eta in [0.05f64, 0.3, 1.0, 7.0] {
            let s = (eta * (1.0 + eta)).sqrt();
            let r = rho_exact_normal(eta).unwrap();
            assert!((r - (1.0 + eta - s) / (1.0 + eta + s)).abs() < 1e-14);
            assert!((r - (1.0 + 2.0 * eta - 2.0 * s)).abs() < 1e-12);
            assert!(r > rho_hat_exponential(&one(eta, 0.0)).unwrap());
        }
        assert!(rho_exact_normal(-1.0).is_err());
    }

    #[test]
    fn rho_hat_reference_values() {
        assert_eq!(rho_hat_exponential(&one(0.0, 0.7)).unwrap(), 1.0);
        assert!((rho_hat_exponential(&one(1.0, 0.0)).unwrap() - 0.13031).abs() < 1e-5);
        assert!((rho_hat_exponential(&one(0.25, 0.0)).unwrap() - 0.289114).abs() < 1e-6);
    }

    #[test]
    fn normal_incidence_matches_left_form() {
        for i in 0..100 {
            let eta = i as f64 * 0.05;
            let s = root_ratio(eta);
            let left = (1.0 - s) / (eta + 1.0 + s) * (1.0 + eta);
            let v = rho_hat_exponential(&one(eta, 0.0)).unwrap();
            assert!((v - left).abs() <= 4.0 * f64::EPSILON, "eta {eta}");
        }
    }

    #[test]
    fn upper_bound_values() {
        assert_eq!(rho_upper_exponential(&one(0.0, 0.0)).unwrap(), 1.0);
        assert!((rho_upper_exponential(&one(0.25, 0.0)).unwrap() - 0.59753).abs() < 1e-5);
        assert!(matches!(
            rho_upper_exponential(&one(0.5, 0.0)),
            Err(Error::UpperBoundInvalid { .. })
        ));
        assert!(rho_upper_exponential(&one(0.1, 0.3)).is_err());
    }

    #[test]
    fn two_sided_params_rejected_by_one_sided_estimators() {
        let m = MediumParams::two_sided(1.0, 2.0, 0.0).unwrap();
        assert!(rho_hat_exponential(&m).is_err());
        assert!(rho_upper_exponential(&m).is_err());
    }

    #[test]
    fn delta_correction_values() {
        let near_zero = delta_correction(&exp(1.0), 1.0, 1e-6).unwrap();
        assert!((near_zero - 2.0).abs() < 1e-5);
        assert_eq!(delta_correction(&exp(3.0), 0.0, 0.1).unwrap(), 1.0);
        let v = delta_correction(&exp(2.0), 1.0, 0.5).unwrap();
        assert!((v - (1.0 + 0.5 / 3.0)).abs() < 1e-12, "{v}");
        assert!(delta_correction(&exp(1.0), 1.0, 0.0).is_err());
        assert!(delta_correction(&exp(1.0), 1.0, -1.0).is_err());
    }

    #[test]
    fn delta_correction_exponential_closed_form() {
        for &(mu, beta, eps) in &[(1.0, 0.3, 0.2), (4.0, 2.0, 1e-3), (0.5, 1.0, 3.0)] {
            let v = delta_correction(&exp(mu), beta, eps).unwrap();
            let expect = 1.0 + (beta / mu) / ((2.0 * eps + 1.0) * (eps + 1.0));
            assert!((v - expect).abs() < 1e-10);
        }
        assert!((delta_correction_limit(&exp(2.0), 1.0).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn mixture_limit_matches_small_step() {
        let d = StepDistribution::hyperexponential(&[0.3, 0.7], &[0.8, 4.0]).unwrap();
        let limit = delta_correction_limit(&d, 0.6).unwrap();
        let finite = delta_correction(&d, 0.6, 1e-6).unwrap();
        assert!((limit - finite).abs() < 1e-5, "{limit} vs {finite}");
        assert!(limit > 1.0);
    }

    #[test]
    fn general_reduces_to_exponential() {
        for &eta in &[0.0, 0.05, 0.3, 1.0, 4.0] {
            for &deg in &[0.0f64, 30.0, 75.0] {
                let theta = deg.to_radians();
                let m = MediumParams::one_sided(eta * 2.0, 2.0, theta).unwrap();
                let a = rho_hat_exponential(&m).unwrap();
                let b = rho_hat_general(&exp(2.0), eta * 2.0, theta, DeltaMode::Limit).unwrap();
                let c = rho_hat_general(
                    &StepDistribution::hyperexponential(&[1.0], &[2.0]).unwrap(),
                    eta * 2.0,
                    theta,
                    DeltaMode::Limit,
                )
                .unwrap();
                assert!((a - b).abs() < 1e-12, "eta {eta} deg {deg}: {a} vs {b}");
                assert_eq!(b, c);
            }
        }
    }

    #[test]
    fn two_sided_values() {
        assert!((rho_two_sided(1.0, 2.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((rho_two_sided(2.0, 1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(rho_two_sided(1.0, 1e-12, 1.0).unwrap() < 1e-11);
        let v = rho_two_sided(1.0, 4.0, 60f64.to_radians()).unwrap();
        assert!((v - 0.74997).abs() < 1e-5);
        assert!(rho_two_sided(1.0, 0.0, 0.0).is_err());
        assert!(rho_two_sided(1.0, 1.0, PI / 2.0).is_err());
    }

    #[test]
    fn lemma_form_values() {
        let (mu, h) = (2.0, 3.0);
        let top = rho_two_sided_from_overshoots(h, h, 1.0 / mu, 1.0 / mu, 0.0).unwrap();
        assert!((top - (1.0 / mu) / (2.0 / mu + h)).abs() < 1e-15);
        let bottom = rho_two_sided_from_overshoots(0.0, h, 1.0 / mu, 1.0 / mu, 0.0).unwrap();
        assert!((bottom - (h + 1.0 / mu) / (h + 2.0 / mu)).abs() < 1e-15);
        assert!(matches!(
            rho_two_sided_from_overshoots(4.0, h, 0.5, 0.5, 0.0),
            Err(Error::PassThrough { .. })
        ));
        // the projected depth is what matters
        assert!(rho_two_sided_from_overshoots(4.0, h, 0.5, 0.5, 60f64.to_radians()).is_ok());
    }

    #[test]
    fn near_field_threshold() {
        assert!(near_field_validity(0.0, 1e-9, 1e-9));
        assert!(near_field_validity(1.0, 1.0, 4.0 * PI + 0.1));
        assert!(!near_field_validity(1.0, 1.0, 4.0 * PI - 0.1));
        for &(k, lambda, mu) in &[(0.1, 1.0, 0.5), (0.1, 1.0, 5.0), (0.02, 0.5, 1.0)] {
            let beta = beta_from_index(k, lambda);
            let m = MediumParams::one_sided(beta, mu, 0.0).unwrap();
            assert_eq!(near_field_validity(k, lambda, mu), rho_upper_exponential(&m).is_ok());
        }
    }

    #[test]
    fn estimate_flags() {
        let r = estimate_one_sided(&one(1.0, 0.0)).unwrap();
        assert!(r.rho_upper.is_none() && r.near_field_required && !r.upper_valid);
        let r = estimate_one_sided(&one(0.1, 0.0)).unwrap();
        assert!(r.upper_valid && r.rho_upper.unwrap() >= r.rho_hat);
        assert!(!r.clamped);
        let r = estimate_one_sided(&one(0.1, 0.4)).unwrap();
        assert!(r.rho_upper.is_none() && !r.near_field_required);
    }
}
