//! Pack-free Monte Carlo: the homogenized 1-D renewal model with Beer
//! attenuation, no explicit particles.

use rand::Rng;

use super::tally::{TallyAccumulator, TallyResult};
use crate::error::{invalid, Result};
use crate::estimators::MediumParams;
use crate::renewal::{
    sample_walk, Barrier, CensorReason, ExitSide, StepDistribution, WalkConfig, WalkEnd,
    WalkLimits, DEFAULT_MAX_STEPS,
};
use crate::rng;

/// Weight below which a ray is dropped as absorbed.
pub const DEFAULT_WEIGHT_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub workers: usize,
    pub max_steps: u64,
    pub weight_cutoff: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            max_steps: DEFAULT_MAX_STEPS,
            weight_cutoff: DEFAULT_WEIGHT_CUTOFF,
        }
    }
}

/// What happened to one pack-free ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayFate {
    Reflected(f64),
    Transmitted(f64),
    /// Still inside with weight below the cutoff.
    Cutoff,
    Censored,
}

fn record(acc: &mut TallyAccumulator, fate: RayFate) {
    match fate {
        RayFate::Reflected(w) => acc.reflect(w),
        RayFate::Transmitted(w) => acc.transmit(w),
        RayFate::Cutoff => acc.absorb_cutoff(),
        RayFate::Censored => acc.absorb_censored(),
    }
}

/// Reflected Beer weight of one walk that entered with first depth
/// `depth`: `exp(-beta (depth + L - Z))`, the in-medium path length.
pub fn reflected_weight(beta: f64, depth: f64, end: &WalkEnd) -> RayFate {
    match end {
        WalkEnd::Exited(o) => RayFate::Reflected((-beta * (depth + o.travel_l - o.z_minus)).exp()),
        WalkEnd::Censored {
            reason: CensorReason::TravelBudget,
            ..
        } => RayFate::Cutoff,
        WalkEnd::Censored { .. } => RayFate::Censored,
    }
}

/// Walk limits that stop a ray once its weight is certainly below `cutoff`.
/// The final weight is at most `exp(-beta (depth + travel so far))`.
pub fn one_sided_limits(beta: f64, depth: f64, opts: &SimOptions) -> WalkLimits {
    let max_travel = if beta > 0.0 && opts.weight_cutoff > 0.0 {
        -opts.weight_cutoff.ln() / beta - depth
    } else {
        f64::INFINITY
    };
    WalkLimits {
        max_steps: opts.max_steps,
        max_travel,
    }
}

/// One ray through a semi-infinite slab: first flight `x ~ dist` along the
/// ray, projected depth `x cos(theta)` attenuated by `exp(-beta x cos(theta))`,
/// then a symmetric one-sided walk.
pub fn one_sided_ray<R: Rng + ?Sized>(
    m: &MediumParams,
    dist: &StepDistribution,
    opts: &SimOptions,
    rng: &mut R,
) -> RayFate {
    let depth = dist.sample(rng) * m.theta.cos();
    let cfg = WalkConfig {
        x0: depth,
        p: 0.5,
        step: dist.clone(),
        barrier: Barrier::OneSided,
    };
    let end = sample_walk(&cfg, &one_sided_limits(m.beta, depth, opts), rng);
    reflected_weight(m.beta, depth, &end)
}

fn check_run(n: u64, opts: &SimOptions) -> Result<()> {
    if n == 0 {
        return Err(invalid("number of rays must be >= 1"));
    }
    if opts.workers == 0 {
        return Err(invalid("workers must be >= 1"));
    }
    Ok(())
}

pub fn simulate_1d_one_sided(
    m: &MediumParams,
    dist: &StepDistribution,
    n: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<TallyResult> {
    m.validate()?;
    if m.height.is_some() {
        return Err(invalid("one-sided simulation requested for a two-sided slab"));
    }
    check_run(n, opts)?;
    let acc = rng::sharded(
        n,
        opts.workers,
        TallyAccumulator::default(),
        |range| {
            let mut acc = TallyAccumulator::default();
            for i in range {
                record(&mut acc, one_sided_ray(m, dist, opts, &mut rng::stream(seed, i)));
            }
            acc
        },
        TallyAccumulator::merge,
    )?;
    Ok(acc.finish())
}

/// One ray through a non-absorbing slab of height `h`.
pub fn two_sided_ray<R: Rng + ?Sized>(
    dist: &StepDistribution,
    h: f64,
    cos_theta: f64,
    opts: &SimOptions,
    rng: &mut R,
) -> RayFate {
    let depth = dist.sample(rng) * cos_theta;
    if depth > h {
        return RayFate::Transmitted(1.0);
    }
    let cfg = WalkConfig {
        x0: depth,
        p: 0.5,
        step: dist.clone(),
        barrier: Barrier::TwoSided { h },
    };
    let limits = WalkLimits {
        max_steps: opts.max_steps,
        max_travel: f64::INFINITY,
    };
    match sample_walk(&cfg, &limits, rng) {
        WalkEnd::Exited(o) if o.exit_side == ExitSide::Bottom => RayFate::Reflected(1.0),
        WalkEnd::Exited(_) => RayFate::Transmitted(1.0),
        WalkEnd::Censored { .. } => RayFate::Censored,
    }
}

pub fn simulate_1d_two_sided(
    mu: f64,
    h: f64,
    theta: f64,
    n: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<TallyResult> {
    MediumParams::two_sided(mu, h, theta)?;
    check_run(n, opts)?;
    let dist = StepDistribution::exponential(mu)?;
    let cos = theta.cos();
    let acc = rng::sharded(
        n,
        opts.workers,
        TallyAccumulator::default(),
        |range| {
            let mut acc = TallyAccumulator::default();
            for i in range {
                record(&mut acc, two_sided_ray(&dist, h, cos, opts, &mut rng::stream(seed, i)));
            }
            acc
        },
        TallyAccumulator::merge,
    )?;
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{rho_two_sided, rho_upper_exponential};

    fn exp(mu: f64) -> StepDistribution {
        StepDistribution::exponential(mu).unwrap()
    }

    #[test]
    fn no_dissipation_reflects_everything() {
        let m = MediumParams::one_sided(0.0, 1.0, 0.0).unwrap();
        let opts = SimOptions {
            max_steps: 100_000,
            ..Default::default()
        };
        let t = simulate_1d_one_sided(&m, &exp(1.0), 2_000, 1, &opts).unwrap();
        // every exited ray carries weight exactly 1
        assert_eq!(t.rho, (t.n_rays - t.censored) as f64 / t.n_rays as f64);
        assert!(t.conservation_error().abs() < 1e-12);
    }

    #[test]
    fn bounded_by_upper_bound() {
        let m = MediumParams::one_sided(0.25, 1.0, 0.0).unwrap();
        let t = simulate_1d_one_sided(&m, &exp(1.0), 200_000, 3, &SimOptions::default()).unwrap();
        assert!(t.rho <= rho_upper_exponential(&m).unwrap() + 3.0 * t.rho_stderr);
        assert_eq!(t.censored, 0);
        assert!(t.conservation_error().abs() < 1e-9);
    }

    #[test]
    fn two_sided_matches_exact_value() {
        let opts = SimOptions::default();
        for &(hm, deg) in &[(2.0, 0.0f64), (4.0, 60.0)] {
            let theta = deg.to_radians();
            let t = simulate_1d_two_sided(1.0, hm, theta, 200_000, 5, &opts).unwrap();
            let exact = rho_two_sided(1.0, hm, theta).unwrap();
            assert!((t.rho - exact).abs() < 4.0 * t.rho_stderr, "{} vs {exact}", t.rho);
            assert_eq!(t.absorbed.abs() < 1e-12, true);
        }
    }

    #[test]
    fn tall_two_sided_slab_reflects_almost_all() {
        let t = simulate_1d_two_sided(1.0, 1000.0, 0.0, 20_000, 8, &SimOptions::default()).unwrap();
        let exact = rho_two_sided(1.0, 1000.0, 0.0).unwrap();
        assert!(t.rho > 0.99);
        assert!((t.rho - exact).abs() < 4.0 * t.rho_stderr.max(1e-4));
    }

    #[test]
    fn worker_count_does_not_change_tally() {
        let m = MediumParams::one_sided(0.4, 1.0, 0.3).unwrap();
        let a = simulate_1d_one_sided(&m, &exp(1.0), 40_000, 9, &SimOptions::default()).unwrap();
        let b = simulate_1d_one_sided(
            &m,
            &exp(1.0),
            40_000,
            9,
            &SimOptions {
                workers: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_empty_runs_and_wrong_geometry() {
        let m = MediumParams::one_sided(0.4, 1.0, 0.0).unwrap();
        assert!(simulate_1d_one_sided(&m, &exp(1.0), 0, 1, &SimOptions::default()).is_err());
        let two = MediumParams::two_sided(1.0, 1.0, 0.0).unwrap();
        assert!(simulate_1d_one_sided(&two, &exp(1.0), 10, 1, &SimOptions::default()).is_err());
        assert!(simulate_1d_two_sided(1.0, -1.0, 0.0, 10, 1, &SimOptions::default()).is_err());
    }
}
