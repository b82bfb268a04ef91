//! Stopped renewal walks and their analytic generating functions.

mod distribution;
mod empirical;
mod mgf;
mod roots;
mod two_sided;
mod walk;

pub use distribution::{exp_inverse, open_unit, StepDistribution};
pub use empirical::{empirical_mean, empirical_mgf, MeanEstimate};
pub(crate) use empirical::mean_with_stderr;
pub use mgf::{mgf_one_sided, one_sided_coefficients, one_sided_coefficients_by_solve, OneSidedMgf};
pub use roots::{
    cl_residual, cramer_lundberg_all_roots, cramer_lundberg_roots, RootSet, DISTINCT_TOLERANCE,
    ROOT_TOLERANCE,
};
pub use two_sided::{
    exit_bottom_probability, two_sided_coefficients, Basis, SideWeights, TwoSidedSolution,
    SYSTEM_TOLERANCE,
};
pub use walk::{
    sample_walk, Barrier, CensorReason, ExitSide, WalkConfig, WalkEnd, WalkLimits, WalkOutcome,
    DEFAULT_MAX_STEPS,
};

use crate::error::Result;
use crate::rng;

/// Draw one step length.
pub fn sample_step<R: rand::Rng + ?Sized>(dist: &StepDistribution, rng: &mut R) -> f64 {
    dist.sample(rng)
}

/// `n` independent walks; walk `i` uses stream `(seed, i)`.
pub fn simulate_walks(
    cfg: &WalkConfig,
    limits: &WalkLimits,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<WalkEnd>> {
    rng::sharded(
        n,
        workers,
        Vec::with_capacity(n as usize),
        |range| {
            range
                .map(|i| sample_walk(cfg, limits, &mut rng::stream(seed, i)))
                .collect::<Vec<_>>()
        },
        |mut acc, part| {
            acc.extend(part);
            acc
        },
    )
}
