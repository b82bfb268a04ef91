//! Monte Carlo oracles: the pack-free 1-D model and a 2-D geometric
//! tracer over beds of overlapping opaque discs.

mod bed;
mod flux;
mod pack_free;
mod sim2d;
mod tally;
mod trace;

pub use bed::{beerian_depth, build_bed, BedDensity, BedGeometry, BedSpec, VF_WARNING};
pub use flux::{FluxProfile, FluxTally};
pub use pack_free::{
    one_sided_limits, one_sided_ray, reflected_weight, simulate_1d_one_sided,
    simulate_1d_two_sided, two_sided_ray, RayFate, SimOptions, DEFAULT_WEIGHT_CUTOFF,
};
pub use sim2d::{simulate_2d, write_samples, Sim2dOptions, Sim2dResult};
pub use tally::{TallyAccumulator, TallyResult};
pub use trace::{ray_circle_entry, trace_ray, ScatterLaw, TraceExit, TraceOptions, TraceRecord, Tracer};
