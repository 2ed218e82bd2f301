//! Front tracking solvers for one-dimensional hyperbolic conservation laws and
//! for their weakly nonlinear geometric optics expansions, together with the
//! experiment harness used to measure how well the expansion approximates the
//! entropy solution.

pub mod error;
pub mod geo_optics;
pub mod harness;
pub mod models;
pub mod piecewise;
pub mod scalar_ft;
pub mod system_ft;
pub mod system_riemann;
pub mod tracking;

pub use error::{Error, Result};
pub use piecewise::PiecewiseConstantFn;
