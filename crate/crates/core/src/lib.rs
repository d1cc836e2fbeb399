//! 2D acoustic wave simulation and waveform-based earthquake location.
//!
//! The crate simulates scalar pressure waves from a point source in a
//! heterogeneous half-plane, measures waveform misfits against observed
//! seismograms, and inverts for the source position and origin time with
//! a Gauss-Newton loop driven by adjoint sensitivity kernels. A
//! cross-correlation shift step with automatic receiver selection keeps
//! the inversion on track when the initial guess is far from the truth.

pub mod adjoint;
pub mod align;
pub mod basin;
pub mod error;
pub mod exec;
pub mod locator;
pub mod model;
pub mod wave;

pub use error::{Error, Result};
