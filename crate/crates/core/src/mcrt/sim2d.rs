//! Many-ray 2-D simulation over one bed.

use std::io::Write;
use std::path::Path;

use super::bed::BedGeometry;
use super::flux::{FluxProfile, FluxTally};
use super::tally::{TallyAccumulator, TallyResult};
use super::trace::{TraceExit, TraceOptions, Tracer};
use crate::error::{invalid, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sim2dOptions {
    pub workers: usize,
    pub trace: TraceOptions,
    pub flux_bins: usize,
}

impl Default for Sim2dOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            trace: TraceOptions::default(),
            flux_bins: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sim2dResult {
    pub tally: TallyResult,
    /// Inter-scattering distances of all rays, in ray order.
    pub free_paths: Vec<f64>,
    /// Entry-to-first-hit distances, kept out of `free_paths`.
    pub first_flights: Vec<f64>,
    pub flux: FluxProfile,
    /// Rays that reached the first disc.
    pub scattered_rays: u64,
}

struct Partial {
    acc: TallyAccumulator,
    free_paths: Vec<f64>,
    first_flights: Vec<f64>,
    flux: FluxTally,
    scattered: u64,
}

impl Partial {
    fn merge(mut self, mut o: Self) -> Self {
        self.acc = self.acc.merge(o.acc);
        self.free_paths.append(&mut o.free_paths);
        self.first_flights.append(&mut o.first_flights);
        self.flux.merge(&o.flux);
        self.scattered += o.scattered;
        self
    }
}

pub fn simulate_2d(
    bed: &BedGeometry,
    beta: f64,
    theta: f64,
    n: u64,
    seed: u64,
    opts: &Sim2dOptions,
) -> Result<Sim2dResult> {
    if n == 0 {
        return Err(invalid("number of rays must be >= 1"));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be finite and >= 0, got {beta}")));
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(invalid(format!("theta must lie in [0, pi/2), got {theta}")));
    }
    let tracer = Tracer::new(bed, opts.trace);
    let empty = || -> Result<Partial> {
        Ok(Partial {
            acc: TallyAccumulator::default(),
            free_paths: Vec::new(),
            first_flights: Vec::new(),
            flux: FluxTally::new(bed.depth, opts.flux_bins)?,
            scattered: 0,
        })
    };
    let init = empty()?;
    let out = rng::sharded(
        n,
        opts.workers,
        init,
        |range| {
            let mut part = empty().expect("validated above");
            for i in range {
                let rec = tracer.trace_ray(beta, theta, &mut rng::stream(seed, i), Some(&mut part.flux));
                match (rec.exit, rec.censored, rec.cutoff) {
                    (_, true, _) => part.acc.absorb_censored(),
                    (_, _, true) => part.acc.absorb_cutoff(),
                    (TraceExit::ReflectedBottom, ..) => part.acc.reflect(rec.final_weight),
                    (TraceExit::TransmittedTop, ..) => part.acc.transmit(rec.final_weight),
                    (TraceExit::Absorbed, ..) => part.acc.absorb(),
                }
                if let Some(f) = rec.first_flight {
                    part.first_flights.push(f);
                    part.scattered += 1;
                }
                part.free_paths.extend(rec.free_paths);
            }
            part
        },
        Partial::merge,
    )?;
    Ok(Sim2dResult {
        tally: out.acc.finish(),
        free_paths: out.free_paths,
        first_flights: out.first_flights,
        flux: out.flux.finish(n),
        scattered_rays: out.scattered,
    })
}

/// One value per line, shortest round-trip decimal form.
pub fn write_samples(path: &Path, samples: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for v in samples {
        writeln!(f, "{v}")?;
    }
    f.flush()?;
    Ok(())
}
