//! Command implementations. Each returns the process exit code.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use porous_renewal::estimators::{
    estimate_one_sided, rho_hat_exponential, rho_hat_general, rho_two_sided, DeltaMode,
    MediumParams,
};
use porous_renewal::fitting::{fit_exponential, read_samples};
use porous_renewal::mcrt::{
    build_bed, simulate_1d_one_sided, simulate_1d_two_sided, simulate_2d as run_2d, write_samples,
    BedDensity, BedGeometry, BedSpec, ScatterLaw, Sim2dOptions, SimOptions, TallyResult,
    TraceOptions,
};
use porous_renewal::pipeline::{default_bed_depth, run_pipeline, PipelineConfig};
use porous_renewal::renewal::StepDistribution;
use porous_renewal::report::{format_opt, format_sig};
use porous_renewal::validation::{self, Mutation, ValidationConfig};
use porous_renewal::{Error, Result};

use crate::config::{ConfigFile, RunConfig};
use crate::{Common, MutateArg, Scatter, SweepVar, EXIT_ACCEPTANCE};

const DIGITS: usize = 12;

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Flags over config file over defaults.
pub fn resolve(c: &Common) -> Result<RunConfig> {
    let file = match &c.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let cfg = RunConfig {
        beta: c.beta.or(file.get("beta")?),
        mu: c.mu.or(file.get("mu")?),
        theta_deg: c.theta_deg.or(file.get("theta_deg")?).unwrap_or(0.0),
        h: c.h.or(file.get("h")?),
        n: c.n.or(file.get("n")?),
        seed: c.seed.or(file.get("seed")?),
        workers: c.workers.or(file.get("workers")?).unwrap_or(1),
        epsilon: c.epsilon.or(file.get("epsilon")?),
        out: c.out.clone().or(file.get::<String>("out")?.map(PathBuf::from)),
        bed_radius: c.bed_radius.or(file.get("bed_radius")?).unwrap_or(1.0),
        bed_vf: c.bed_vf.or(file.get("bed_vf")?).unwrap_or(0.2),
        bed_width: c.bed_width.or(file.get("bed_width")?),
        bed_depth: c.bed_depth.or(file.get("bed_depth")?),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// The given seed, or a fresh one announced on stderr.
fn seed_or_generate(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        eprintln!("seed = {s}");
        s
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn kv(s: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(s, "{key} = {value}");
}

fn num(v: f64) -> String {
    format_sig(v, DIGITS)
}

enum Model {
    OneSided { beta: f64, mu: f64 },
    TwoSided { mu: f64, h: f64 },
}

fn model(cfg: &RunConfig) -> Result<Model> {
    match (cfg.beta, cfg.mu, cfg.h) {
        (Some(_), _, Some(_)) => Err(usage(
            "--beta and --h select different models: the two-sided slab is non-absorbing",
        )),
        (Some(beta), Some(mu), None) => Ok(Model::OneSided { beta, mu }),
        (None, Some(mu), Some(h)) => Ok(Model::TwoSided { mu, h }),
        _ => Err(usage(
            "need --beta and --mu (one-sided) or --mu and --h (two-sided)",
        )),
    }
}

pub fn estimate(c: &Common) -> Result<u8> {
    let cfg = resolve(c)?;
    let theta = cfg.theta();
    let mut s = String::new();
    match model(&cfg)? {
        Model::OneSided { beta, mu } => {
            let m = MediumParams::one_sided(beta, mu, theta)?;
            let r = estimate_one_sided(&m)?;
            kv(&mut s, "model", "one-sided");
            kv(&mut s, "eta", num(r.eta));
            kv(&mut s, "beta", num(beta));
            kv(&mut s, "mu", num(mu));
            kv(&mut s, "theta_deg", num(cfg.theta_deg));
            kv(&mut s, "rho_hat", num(r.rho_hat));
            match r.rho_upper {
                Some(u) => kv(&mut s, "rho_upper", num(u)),
                None if r.near_field_required => kv(
                    &mut s,
                    "rho_upper",
                    format!("refused: {}", Error::UpperBoundInvalid { mu, beta }),
                ),
                None => kv(&mut s, "rho_upper", "refused: normal incidence only"),
            }
            if r.clamped {
                kv(&mut s, "clamped", "true");
            }
            if let Some(eps) = cfg.epsilon {
                let d = StepDistribution::exponential(mu)?;
                let v = rho_hat_general(&d, beta, theta, DeltaMode::Finite(eps))?;
                kv(&mut s, "rho_hat_epsilon", num(v));
            }
        }
        Model::TwoSided { mu, h } => {
            let rho = rho_two_sided(mu, h, theta)?;
            kv(&mut s, "model", "two-sided");
            kv(&mut s, "mu", num(mu));
            kv(&mut s, "h", num(h));
            kv(&mut s, "theta_deg", num(cfg.theta_deg));
            kv(&mut s, "rho", num(rho));
            kv(&mut s, "tau", num(1.0 - rho));
        }
    }
    emit(cfg.out.as_deref(), &s)?;
    Ok(0)
}

const TALLY_HEADER: &str = "n_rays,rho,tau,absorbed,rho_stderr,tau_stderr,censored,cutoff";

fn tally_lines(s: &mut String, t: &TallyResult) {
    kv(s, "n_rays", t.n_rays);
    kv(s, "rho", num(t.rho));
    kv(s, "rho_stderr", num(t.rho_stderr));
    kv(s, "tau", num(t.tau));
    kv(s, "tau_stderr", num(t.tau_stderr));
    kv(s, "absorbed", num(t.absorbed));
    kv(s, "censored", t.censored);
    kv(s, "cutoff", t.cutoff);
}

fn sim_opts(cfg: &RunConfig) -> SimOptions {
    SimOptions {
        workers: cfg.workers,
        ..Default::default()
    }
}

pub fn simulate_1d(c: &Common, weights: &[f64], rates: &[f64]) -> Result<u8> {
    let cfg = resolve(c)?;
    let n = cfg.n.unwrap_or(1_000_000);
    let theta = cfg.theta();
    let seed = seed_or_generate(cfg.seed);
    let mut s = String::new();
    let (tally, reference) = if !weights.is_empty() || !rates.is_empty() {
        let (Some(beta), None) = (cfg.beta, cfg.h) else {
            return Err(usage("--weights/--rates need a one-sided medium (--beta, no --h)"));
        };
        let d = StepDistribution::hyperexponential(weights, rates)?;
        // mu only enters through eta; the mixture mean sets the scale
        let m = MediumParams::one_sided(beta, 1.0 / d.mean(), theta)?;
        kv(&mut s, "model", "one-sided hyperexponential");
        let t = simulate_1d_one_sided(&m, &d, n, seed, &sim_opts(&cfg))?;
        (t, ("rho_hat_general", rho_hat_general(&d, beta, theta, DeltaMode::Limit)?))
    } else {
        match model(&cfg)? {
            Model::OneSided { beta, mu } => {
                let m = MediumParams::one_sided(beta, mu, theta)?;
                kv(&mut s, "model", "one-sided");
                let t = simulate_1d_one_sided(&m, &StepDistribution::exponential(mu)?, n, seed, &sim_opts(&cfg))?;
                (t, ("rho_hat", rho_hat_exponential(&m)?))
            }
            Model::TwoSided { mu, h } => {
                kv(&mut s, "model", "two-sided");
                let t = simulate_1d_two_sided(mu, h, theta, n, seed, &sim_opts(&cfg))?;
                (t, ("rho_exact", rho_two_sided(mu, h, theta)?))
            }
        }
    };
    kv(&mut s, "seed", seed);
    tally_lines(&mut s, &tally);
    kv(&mut s, reference.0, num(reference.1));
    if tally.censored > 0 {
        eprintln!("warning: {} rays hit the step cap and were counted as absorbed", tally.censored);
    }
    print!("{s}");
    if let Some(p) = &cfg.out {
        emit(Some(p), &format!("{TALLY_HEADER}\n{}\n", validation::tally_csv(&tally)))?;
    }
    Ok(0)
}

fn trace_options(scatter: Scatter) -> TraceOptions {
    TraceOptions {
        scatter: match scatter {
            Scatter::Hemispheric => ScatterLaw::HemisphericUniform,
            Scatter::Lambertian => ScatterLaw::Lambertian,
        },
        ..Default::default()
    }
}

fn bed_spec(cfg: &RunConfig, beta: f64, seed: u64, periodic: bool) -> BedSpec {
    let r = cfg.bed_radius;
    BedSpec {
        radius: r,
        density: BedDensity::VolumeFraction(cfg.bed_vf),
        width: cfg.bed_width.unwrap_or(200.0 * r),
        depth: cfg
            .bed_depth
            .unwrap_or_else(|| default_bed_depth(beta, r, cfg.bed_vf)),
        periodic,
        seed,
    }
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn simulate_2d(c: &Common, scatter: Scatter, bed_file: Option<&Path>, no_wrap: bool) -> Result<u8> {
    let cfg = resolve(c)?;
    let beta = cfg.beta.unwrap_or(1.0);
    let n = cfg.n.unwrap_or(10_000);
    let seed = seed_or_generate(cfg.seed);
    let bed: BedGeometry = match bed_file {
        Some(p) => BedGeometry::read(p)?,
        None => {
            let spec = bed_spec(&cfg, beta, seed, !no_wrap);
            if let Some(w) = spec.warning() {
                eprintln!("warning: {w}");
            }
            build_bed(&spec)?
        }
    };
    let opts = Sim2dOptions {
        workers: cfg.workers,
        trace: trace_options(scatter),
        ..Default::default()
    };
    let res = run_2d(&bed, beta, cfg.theta(), n, seed, &opts)?;
    let mut s = String::new();
    kv(&mut s, "seed", seed);
    kv(&mut s, "discs", bed.centers.len());
    kv(&mut s, "bed_width", num(bed.width));
    kv(&mut s, "bed_depth", num(bed.depth));
    tally_lines(&mut s, &res.tally);
    kv(&mut s, "scattered_rays", res.scattered_rays);
    kv(&mut s, "free_paths", res.free_paths.len());
    if !res.free_paths.is_empty() {
        let mean = res.free_paths.iter().sum::<f64>() / res.free_paths.len() as f64;
        kv(&mut s, "mean_free_path", num(mean));
    }
    print!("{s}");
    if let Some(p) = &cfg.out {
        write_samples(p, &res.free_paths)?;
        res.flux.write_csv(&with_suffix(p, ".flux.csv"))?;
        bed.write(&with_suffix(p, ".bed.txt"))?;
        eprintln!(
            "wrote {}, {}.flux.csv, {}.bed.txt",
            p.display(),
            p.display(),
            p.display()
        );
    }
    Ok(0)
}

pub fn fit(c: &Common, input: &Path, bins: usize) -> Result<u8> {
    let cfg = resolve(c)?;
    let samples = read_samples(input)?;
    let f = fit_exponential(&samples, bins)?;
    let mut s = String::new();
    kv(&mut s, "n_samples", f.n_samples);
    kv(&mut s, "mu_mle", num(f.mu_mle));
    kv(&mut s, "mu_ls", num(f.mu_ls));
    kv(&mut s, "ks_stat", num(f.ks_stat));
    if let Some(beta) = cfg.beta {
        for (name, mu) in [("rho_hat_mle", f.mu_mle), ("rho_hat_ls", f.mu_ls)] {
            let m = MediumParams::one_sided(beta, mu, cfg.theta())?;
            kv(&mut s, name, num(rho_hat_exponential(&m)?));
        }
    }
    print!("{s}");
    if let Some(p) = &cfg.out {
        let mut csv = String::from("bin_lo,bin_hi,density,model_mle,model_ls\n");
        let h = &f.histogram;
        for (k, d) in h.density.iter().enumerate() {
            let x = 0.5 * (h.edges[k] + h.edges[k + 1]);
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                num(h.edges[k]),
                num(h.edges[k + 1]),
                num(*d),
                num(f.mu_mle * (-f.mu_mle * x).exp()),
                num(f.mu_ls * (-f.mu_ls * x).exp())
            );
        }
        emit(Some(p), &csv)?;
    }
    Ok(0)
}

pub const SWEEP_HEADER: &str =
    "case,eta,beta,mu,theta_deg,h,rho_hat,rho_upper,rho_mc,rho_mc_stderr,n_rays,seed";

fn sweep_points(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && from.is_finite() && to.is_finite()) || to < from {
        return Err(usage("sweep needs finite --from <= --to and --step > 0"));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    // round through the printed precision so 0.1 + 2*0.05 prints as 0.2
    Ok((0..count)
        .map(|k| num(from + k as f64 * step).parse().expect("formatted number"))
        .collect())
}

pub fn sweep(c: &Common, var: SweepVar, from: f64, to: f64, step: f64, mc: bool) -> Result<u8> {
    let cfg = resolve(c)?;
    let points = sweep_points(from, to, step)?;
    let mu = cfg.mu.unwrap_or(1.0);
    let theta = cfg.theta();
    let n = cfg.n.unwrap_or(100_000);
    let master = if mc { Some(seed_or_generate(cfg.seed)) } else { None };
    let mut csv = format!("{SWEEP_HEADER}\n");
    let mut worst: Option<(f64, f64)> = None;
    for (k, &v) in points.iter().enumerate() {
        let seed = master.map(|s| s.wrapping_add(k as u64));
        let (case, eta, beta, h, rho_hat, rho_upper) = match var {
            SweepVar::Eta => {
                let beta = v * mu;
                let m = MediumParams::one_sided(beta, mu, theta)?;
                let r = estimate_one_sided(&m)?;
                ("one-sided", v, beta, None, r.rho_hat, r.rho_upper)
            }
            SweepVar::Hmu => {
                let h = v / mu;
                ("two-sided", 0.0, 0.0, Some(h), rho_two_sided(mu, h, theta)?, None)
            }
        };
        let tally = match seed {
            None => None,
            Some(s) => Some(match var {
                SweepVar::Eta => {
                    let m = MediumParams::one_sided(beta, mu, theta)?;
                    simulate_1d_one_sided(&m, &StepDistribution::exponential(mu)?, n, s, &sim_opts(&cfg))?
                }
                SweepVar::Hmu => simulate_1d_two_sided(mu, h.expect("two-sided"), theta, n, s, &sim_opts(&cfg))?,
            }),
        };
        if let Some(t) = &tally {
            let d = (t.rho - rho_hat).abs();
            if worst.is_none_or(|(w, _)| d > w) {
                worst = Some((d, v));
            }
        }
        let _ = writeln!(
            csv,
            "{case},{},{},{},{},{},{},{},{},{},{},{}",
            num(eta),
            num(beta),
            num(mu),
            num(cfg.theta_deg),
            format_opt(h, DIGITS),
            num(rho_hat),
            format_opt(rho_upper, DIGITS),
            format_opt(tally.as_ref().map(|t| t.rho), DIGITS),
            format_opt(tally.as_ref().map(|t| t.rho_stderr), DIGITS),
            tally.as_ref().map(|t| t.n_rays.to_string()).unwrap_or_default(),
            seed.map(|s| s.to_string()).unwrap_or_default(),
        );
    }
    emit(cfg.out.as_deref(), &csv)?;
    if let Some((d, at)) = worst {
        let name = match var {
            SweepVar::Eta => "eta",
            SweepVar::Hmu => "hmu",
        };
        eprintln!("max |rho_mc - rho_hat| = {} at {name} = {}", num(d), num(at));
    }
    Ok(0)
}

pub fn pipeline_2d(c: &Common, scatter: Scatter) -> Result<u8> {
    let cfg = resolve(c)?;
    let beta = cfg.beta.unwrap_or(1.0);
    let seed = seed_or_generate(cfg.seed);
    let pc = PipelineConfig {
        bed: bed_spec(&cfg, beta, seed, true),
        beta,
        theta: cfg.theta(),
        n: cfg.n.unwrap_or(100_000),
        seed,
        workers: cfg.workers,
        n_bins: porous_renewal::fitting::DEFAULT_BINS,
        trace: trace_options(scatter),
        audit_walks: 1_000_000,
    };
    let r = run_pipeline(&pc)?;
    let mut rows: Vec<(&str, String)> = vec![
        ("seed", seed.to_string()),
        ("discs", r.n_discs.to_string()),
        ("expected_coverage", num(r.expected_coverage)),
        ("bed_depth", num(r.bed_depth)),
        ("n_rays", r.tally.n_rays.to_string()),
        ("scattered_rays", r.scattered_rays.to_string()),
        ("free_paths", r.n_paths.to_string()),
        ("mu_mle", format_opt(r.fit.as_ref().map(|f| f.mu_mle), DIGITS)),
        ("mu_ls", format_opt(r.fit.as_ref().map(|f| f.mu_ls), DIGITS)),
        ("ks_stat", format_opt(r.fit.as_ref().map(|f| f.ks_stat), DIGITS)),
        ("rho_mcrt", num(r.tally.rho)),
        ("rho_mcrt_stderr", num(r.tally.rho_stderr)),
        ("rho_hat_mle", format_opt(r.rho_hat_mle, DIGITS)),
        ("rho_hat_ls", format_opt(r.rho_hat_ls, DIGITS)),
        ("rho_pack_free", format_opt(r.pack_free.as_ref().map(|t| t.rho), DIGITS)),
        ("rho_pack_free_stderr", format_opt(r.pack_free.as_ref().map(|t| t.rho_stderr), DIGITS)),
        ("rho_exact_mle", format_opt(r.rho_exact_mle, DIGITS)),
        ("relative_error_mle", format_opt(r.relative_error(), DIGITS)),
        ("wald_rel_gap", format_opt(r.wald.as_ref().map(|w| w.rel_gap), DIGITS)),
    ];
    if r.non_scattering {
        rows.push(("non_scattering", "true".into()));
    }
    let mut s = String::new();
    for (k, v) in &rows {
        kv(&mut s, k, v);
    }
    if r.non_scattering {
        s.push_str("non-scattering medium: no ray reached a particle\n");
    }
    for (stage, msg) in &r.stage_errors {
        let _ = writeln!(s, "error[{stage}]: {msg}");
    }
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    print!("{s}");
    if let Some(p) = &cfg.out {
        let mut csv = String::from("quantity,value\n");
        for (k, v) in &rows {
            let _ = writeln!(csv, "{k},{v}");
        }
        emit(Some(p), &csv)?;
    }
    Ok(0)
}

pub fn validate(c: &Common, only: &[u32], scale: f64, mutate: Option<MutateArg>) -> Result<u8> {
    let cfg = resolve(c)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(usage(format!("--scale must be > 0, got {scale}")));
    }
    let vc = ValidationConfig {
        seed: cfg.seed.unwrap_or(ValidationConfig::default().seed),
        workers: cfg.workers,
        scale,
        mutation: match mutate {
            Some(MutateArg::FlipTwoSidedSign) => Mutation::FlipTwoSidedSign,
            None => Mutation::None,
        },
    };
    let report = if only.is_empty() {
        validation::run_all(&vc)?
    } else {
        validation::run(only, &vc)?
    };
    let text = report.to_text();
    print!("{text}");
    if let Some(prefix) = &cfg.out {
        emit(Some(&with_suffix(prefix, ".txt")), &text)?;
        emit(Some(&with_suffix(prefix, ".csv")), &report.to_csv())?;
        for t in report.tables() {
            emit(Some(&with_suffix(prefix, &format!("_{}.csv", t.name))), &t.to_csv())?;
        }
    }
    Ok(if report.passed() { 0 } else { EXIT_ACCEPTANCE })
}
