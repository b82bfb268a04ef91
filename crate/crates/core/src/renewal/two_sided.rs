//! Two-sided walk on `[0, h]`:
//! `E[alpha^T (A e^{-zeta Z-} 1{Bottom} + B e^{-xi Z+} 1{Top})]` as a
//! combination of exponentials in the start depth.
//!
//! One basis function per Cramér–Lundberg root. Nonnegative roots use the
//! shifted basis `exp(delta (x - h))` so coefficients stay bounded for tall
//! slabs; the paper-form coefficient is `d_i = d_scaled_i * exp(-delta_i h)`.
//! When 0 is a double root (`alpha = 1`, symmetric walk) the second zero
//! contributes the confluent basis function `x`.

use nalgebra::{DMatrix, DVector};

use super::roots::{cramer_lundberg_all_roots, DISTINCT_TOLERANCE};
use super::StepDistribution;
use crate::error::{invalid, Error, Result};

/// Largest accepted equation residual of the coefficient solve.
pub const SYSTEM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Basis {
    /// `exp(rate * (x - shift))`
    Exp { rate: f64, shift: f64 },
    /// `x`, paired with a double root at 0.
    Linear,
}

impl Basis {
    fn eval(&self, x: f64) -> f64 {
        match *self {
            Basis::Exp { rate, shift } => (rate * (x - shift)).exp(),
            Basis::Linear => x,
        }
    }

    /// Coefficient on `exp(-mu x)` left over by downward steps, negated and
    /// divided by `mu`.
    fn bottom_entry(&self, mu: f64) -> f64 {
        match *self {
            Basis::Exp { rate, shift } => (-rate * shift).exp() / (mu + rate),
            Basis::Linear => -1.0 / (mu * mu),
        }
    }

    /// Same for `exp(-mu (h - x))` left over by upward steps.
    fn top_entry(&self, mu: f64, h: f64) -> f64 {
        match *self {
            Basis::Exp { rate, shift } => (rate * (h - shift)).exp() / (mu - rate),
            Basis::Linear => h / mu + 1.0 / (mu * mu),
        }
    }
}

/// Right-hand side weights of the two-sided generating function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideWeights {
    /// Weight `A` on bottom exits.
    pub bottom: f64,
    /// Discount `zeta` on the bottom overshoot.
    pub zeta: f64,
    /// Weight `B` on top exits.
    pub top: f64,
    /// Discount `xi` on the top overshoot.
    pub xi: f64,
}

impl SideWeights {
    pub fn bottom_only(zeta: f64) -> Self {
        Self { bottom: 1.0, zeta, top: 0.0, xi: 0.0 }
    }

    pub fn top_only(xi: f64) -> Self {
        Self { bottom: 0.0, zeta: 0.0, top: 1.0, xi }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedSolution {
    pub h: f64,
    pub alpha: f64,
    /// Nonpositive roots `gamma_i`.
    pub gammas: Vec<f64>,
    /// Nonnegative roots `delta_i`.
    pub deltas: Vec<f64>,
    /// Coefficients of `exp(gamma_i x)`.
    pub c: Vec<f64>,
    /// Coefficients of `exp(delta_i (x - h))` (or of `x` for a confluent zero).
    pub d_scaled: Vec<f64>,
    basis: Vec<Basis>,
    /// Largest absolute equation residual after the solve.
    pub max_residual: f64,
}

impl TwoSidedSolution {
    pub fn solve(
        dist: &StepDistribution,
        p: f64,
        h: f64,
        alpha: f64,
        weights: SideWeights,
    ) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("slab height must be > 0, got {h}")));
        }
        let min_rate = dist.rates().iter().copied().fold(f64::INFINITY, f64::min);
        if !(weights.zeta > -min_rate && weights.xi > -min_rate) {
            return Err(invalid("overshoot discounts must exceed -min(rate)"));
        }
        let roots = cramer_lundberg_all_roots(dist, p, alpha)?;
        if !roots.double_zero {
            for g in &roots.nonpositive {
                for d in &roots.nonnegative {
                    if (g - d).abs() < DISTINCT_TOLERANCE {
                        return Err(Error::Numerical(format!(
                            "near-degenerate roots {g} and {d} for h = {h}, alpha = {alpha}"
                        )));
                    }
                }
            }
        }

        let m = dist.order();
        let mut basis: Vec<Basis> = roots
            .nonpositive
            .iter()
            .map(|&rate| Basis::Exp { rate, shift: 0.0 })
            .collect();
        for &rate in &roots.nonnegative {
            if roots.double_zero && rate == 0.0 {
                basis.push(Basis::Linear);
            } else {
                basis.push(Basis::Exp { rate, shift: h });
            }
        }

        let rates = dist.rates();
        let n = 2 * m;
        let mat = DMatrix::from_fn(n, n, |row, k| {
            if row < m {
                basis[k].bottom_entry(rates[row])
            } else {
                basis[k].top_entry(rates[row - m], h)
            }
        });
        let rhs = DVector::from_fn(n, |row, _| {
            if row < m {
                weights.bottom / (rates[row] + weights.zeta)
            } else {
                weights.top / (rates[row - m] + weights.xi)
            }
        });
        let sol = mat
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularSystem { h, alpha })?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem { h, alpha });
        }
        let max_residual = (&mat * &sol - &rhs).amax();
        if !(max_residual < SYSTEM_TOLERANCE) {
            return Err(Error::Numerical(format!(
                "two-sided system residual {max_residual:e} exceeds {SYSTEM_TOLERANCE:e} for h = {h}, alpha = {alpha}"
            )));
        }
        Ok(Self {
            h,
            alpha,
            gammas: roots.nonpositive,
            deltas: roots.nonnegative,
            c: sol.rows(0, m).iter().copied().collect(),
            d_scaled: sol.rows(m, m).iter().copied().collect(),
            basis,
            max_residual,
        })
    }

    /// Generating function at start depth `x` in `[0, h]`.
    pub fn value(&self, x: f64) -> f64 {
        self.c
            .iter()
            .chain(&self.d_scaled)
            .zip(&self.basis)
            .map(|(coef, b)| coef * b.eval(x))
            .sum()
    }
}

/// Symmetric-walk coefficients for weights `A`, `B` and discounts `zeta`, `xi`.
#[allow(clippy::too_many_arguments)]
pub fn two_sided_coefficients(
    dist: &StepDistribution,
    h: f64,
    alpha: f64,
    zeta: f64,
    xi: f64,
    a: f64,
    b: f64,
) -> Result<TwoSidedSolution> {
    TwoSidedSolution::solve(
        dist,
        0.5,
        h,
        alpha,
        SideWeights { bottom: a, zeta, top: b, xi },
    )
}

/// Probability that the symmetric walk started at `x` leaves through 0.
pub fn exit_bottom_probability(dist: &StepDistribution, h: f64, x: f64) -> Result<f64> {
    if !(0.0..=h).contains(&x) {
        return Err(invalid(format!("start depth {x} outside [0, {h}]")));
    }
    Ok(two_sided_coefficients(dist, h, 1.0, 0.0, 0.0, 1.0, 0.0)?.value(x))
}
