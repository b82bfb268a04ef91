//! End-to-end 2-D run: bed, ray tracing, exponential fit of the free
//! paths, closed-form estimates at the fitted rate and a pack-free run at
//! that rate.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::estimators::{rho_exact_normal, rho_hat_exponential, MediumParams};
use crate::fitting::{fit_exponential, ExpFit, DEFAULT_BINS};
use crate::mcrt::{
    beerian_depth, build_bed, simulate_1d_one_sided, simulate_2d, BedDensity, BedSpec, Sim2dOptions,
    SimOptions, TallyResult, TraceOptions,
};
use crate::renewal::StepDistribution;
use crate::validation::{wald_audit, WaldAudit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Bed,
    Trace,
    Fit,
    Estimate,
    PackFree,
    Audit,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Bed => "bed",
            Stage::Trace => "trace",
            Stage::Fit => "fit",
            Stage::Estimate => "estimate",
            Stage::PackFree => "pack-free",
            Stage::Audit => "audit",
        })
    }
}

fn staged(stage: Stage, e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::InvalidParameter(format!("{stage}: {m}")),
        other => Error::Numerical(format!("{stage}: {other}")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub bed: BedSpec,
    pub beta: f64,
    pub theta: f64,
    pub n: u64,
    pub seed: u64,
    pub workers: usize,
    pub n_bins: usize,
    pub trace: TraceOptions,
    /// Walks for the Wald-step audit at the fitted `eta`; 0 skips it.
    pub audit_walks: u64,
}

/// Line-intersection rate `2 r lambda` of a Boolean disc model at coverage `vf`.
pub fn boolean_free_path_rate(radius: f64, vf: f64) -> f64 {
    let lambda = -(1.0 - vf).ln() / (PI * radius * radius);
    2.0 * radius * lambda
}

/// Bed depth: `ln(1e9) / beta` when absorbing, else 50 expected free paths.
pub fn default_bed_depth(beta: f64, radius: f64, vf: f64) -> f64 {
    if beta > 0.0 {
        beerian_depth(beta)
    } else {
        let rate = boolean_free_path_rate(radius, vf);
        if rate > 0.0 {
            50.0 / rate
        } else {
            200.0 * radius
        }
    }
}

impl PipelineConfig {
    /// Radius 1, width 200 radii, periodic, bed depth from [`default_bed_depth`].
    pub fn dilute(vf: f64, beta: f64, n: u64, seed: u64) -> Self {
        Self {
            bed: BedSpec {
                radius: 1.0,
                density: BedDensity::VolumeFraction(vf),
                width: 200.0,
                depth: default_bed_depth(beta, 1.0, vf),
                periodic: true,
                seed,
            },
            beta,
            theta: 0.0,
            n,
            seed,
            workers: 1,
            n_bins: DEFAULT_BINS,
            trace: TraceOptions::default(),
            audit_walks: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub n_discs: usize,
    pub expected_coverage: f64,
    pub bed_depth: f64,
    pub tally: TallyResult,
    pub scattered_rays: u64,
    pub n_paths: usize,
    pub fit: Option<ExpFit>,
    pub rho_hat_mle: Option<f64>,
    pub rho_hat_ls: Option<f64>,
    /// Pack-free 1-D run at the MLE rate.
    pub pack_free: Option<TallyResult>,
    /// Exact 1-D value at the MLE rate; normal incidence only.
    pub rho_exact_mle: Option<f64>,
    pub wald: Option<WaldAudit>,
    /// No ray reached a disc.
    pub non_scattering: bool,
    pub stage_errors: Vec<(Stage, String)>,
    pub warnings: Vec<String>,
}

impl PipelineReport {
    pub fn rho_mcrt(&self) -> f64 {
        self.tally.rho
    }

    /// `|rho_hat(mu_mle) - rho_mcrt| / rho_mcrt`.
    pub fn relative_error(&self) -> Option<f64> {
        let hat = self.rho_hat_mle?;
        (self.tally.rho > 0.0).then(|| (hat - self.tally.rho).abs() / self.tally.rho)
    }
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    let mut warnings: Vec<String> = cfg.bed.warning().into_iter().collect();
    let bed = build_bed(&cfg.bed).map_err(|e| staged(Stage::Bed, e))?;
    let opts = Sim2dOptions {
        workers: cfg.workers,
        trace: cfg.trace,
        ..Default::default()
    };
    let sim = simulate_2d(&bed, cfg.beta, cfg.theta, cfg.n, cfg.seed, &opts)
        .map_err(|e| staged(Stage::Trace, e))?;
    if sim.tally.censored > 0 {
        warnings.push(format!("{} rays hit a trace guard", sim.tally.censored));
    }

    let mut stage_errors = Vec::new();
    let fit = match fit_exponential(&sim.free_paths, cfg.n_bins) {
        Ok(f) => Some(f),
        Err(e) => {
            stage_errors.push((Stage::Fit, e.to_string()));
            None
        }
    };
    let mut estimate = |mu: f64| match MediumParams::one_sided(cfg.beta, mu, cfg.theta)
        .and_then(|m| rho_hat_exponential(&m))
    {
        Ok(v) => Some(v),
        Err(e) => {
            stage_errors.push((Stage::Estimate, e.to_string()));
            None
        }
    };
    let rho_hat_mle = fit.as_ref().and_then(|f| estimate(f.mu_mle));
    let rho_hat_ls = fit.as_ref().and_then(|f| estimate(f.mu_ls));

    let mut pack_free = None;
    let mut rho_exact_mle = None;
    let mut wald = None;
    if let Some(f) = &fit {
        let eta = cfg.beta / f.mu_mle;
        let run = MediumParams::one_sided(cfg.beta, f.mu_mle, cfg.theta).and_then(|m| {
            let sim_opts = SimOptions {
                workers: cfg.workers,
                ..Default::default()
            };
            simulate_1d_one_sided(&m, &StepDistribution::exponential(f.mu_mle)?, cfg.n, cfg.seed ^ 1, &sim_opts)
        });
        match run {
            Ok(t) => pack_free = Some(t),
            Err(e) => stage_errors.push((Stage::PackFree, e.to_string())),
        }
        if cfg.theta == 0.0 {
            rho_exact_mle = rho_exact_normal(eta).ok();
        }
        if cfg.audit_walks > 0 && eta > 0.0 {
            match wald_audit(eta, cfg.audit_walks, cfg.seed ^ 2, cfg.workers) {
                Ok(w) => wald = Some(w),
                Err(e) => stage_errors.push((Stage::Audit, e.to_string())),
            }
        }
    }

    Ok(PipelineReport {
        n_discs: bed.centers.len(),
        expected_coverage: bed.expected_coverage(),
        bed_depth: bed.depth,
        scattered_rays: sim.scattered_rays,
        n_paths: sim.free_paths.len(),
        non_scattering: sim.scattered_rays == 0,
        tally: sim.tally,
        fit,
        rho_hat_mle,
        rho_hat_ls,
        pack_free,
        rho_exact_mle,
        wald,
        stage_errors,
        warnings,
    })
}
