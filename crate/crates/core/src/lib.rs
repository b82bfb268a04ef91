//! Reflectivity of homogenized porous slabs from stopped renewal walks.
//!
//! The depth of a ray at consecutive scattering events inside an infinitely
//! wide slab is modelled as a symmetric random walk with i.i.d. step
//! lengths. Exit-time and overshoot generating functions of that walk
//! (Cramér–Lundberg roots) give closed-form reflectivity estimates, which
//! are checked against two Monte Carlo oracles: a 1-D pack-free walk
//! simulation and a 2-D geometric ray tracer over overlapping opaque discs.
//!
//! Module map:
//!
//! - [`renewal`]: step laws, walk sampling, Cramér–Lundberg roots, MGFs.
//! - [`estimators`]: closed-form reflectivity estimates and bounds.
//! - [`mcrt`]: pack-free 1-D simulation and the 2-D bed tracer.
//! - [`fitting`]: exponential fits of free-path samples.
//! - [`pipeline`]: bed, trace, fit and estimate in one run.
//! - [`validation`]: the acceptance grid shared by tests and the CLI.

pub mod error;
pub mod estimators;
pub mod fitting;
pub mod mcrt;
pub mod pipeline;
pub mod report;
pub mod renewal;
pub mod rng;
pub mod validation;

pub use error::{Error, Result};
