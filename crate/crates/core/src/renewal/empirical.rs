use super::walk::{WalkEnd, WalkOutcome};
use crate::error::{Error, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
    /// Walks that never exited; they contribute 0 to the mean.
    pub censored: usize,
}

/// Mean and standard error of `f(outcome)` over all walks, with censored
/// walks contributing 0.
pub fn empirical_mean<F>(ends: &[WalkEnd], f: F) -> Result<MeanEstimate>
where
    F: Fn(&WalkOutcome) -> f64,
{
    if ends.is_empty() {
        return Err(Error::Empty("walk outcomes"));
    }
    let (mut s, mut s2, mut censored) = (0.0, 0.0, 0usize);
    for e in ends {
        match e {
            WalkEnd::Exited(o) => {
                let v = f(o);
                s += v;
                s2 += v * v;
            }
            WalkEnd::Censored { .. } => censored += 1,
        }
    }
    Ok(mean_with_stderr(s, s2, ends.len(), censored))
}

pub(crate) fn mean_with_stderr(sum: f64, sum_sq: f64, n: usize, censored: usize) -> MeanEstimate {
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 {
        ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    MeanEstimate {
        estimate: mean,
        stderr: (var / nf).sqrt(),
        n,
        censored,
    }
}

/// Empirical `E[alpha^T exp(-zeta Z-)]`.
///
/// A censored walk stopped after `s` steps would have contributed less than
/// `alpha^s`, so treating it as 0 biases the estimate by at most that much.
pub fn empirical_mgf(ends: &[WalkEnd], alpha: f64, zeta: f64) -> Result<MeanEstimate> {
    empirical_mean(ends, |o| alpha.powf(o.t as f64) * (-zeta * o.z_minus).exp())
}
