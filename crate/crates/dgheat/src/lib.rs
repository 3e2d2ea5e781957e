//! Space-time Galerkin solver for the heat equation on intervals and squares:
//! discontinuous Galerkin dG(q) in time, conforming finite elements cG(r) in
//! space, plus an experiment harness that measures smoothing constants,
//! maximal-regularity ratios, resolvent bounds, and convergence orders.

pub mod band;
pub mod error;
pub mod exact;
pub mod lab;
pub mod norms;
pub mod problems;
pub mod rational;
pub mod report;
pub mod spatial;
pub mod stepper;
pub mod time_partition;

pub use error::{Error, Result};
