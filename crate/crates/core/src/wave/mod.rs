//! Wavefield engines and the interface the locator drives them through.
//!
//! Two engines produce interchangeable output: a finite-difference solver
//! for arbitrary velocity models and a closed-form fast path for uniform
//! media. Both expose synthetics, synthetic derivatives with respect to
//! the trial source coordinates, and reversed-time sensitivity fields
//! through the [`Propagator`] trait, so the location loop is written once.

pub mod analytic;
pub mod fd;
pub mod io;
mod seis;

pub use analytic::{analytic_u, HomogeneousPropagator, KERNEL_OFFSET};
pub use fd::{record_field_at, solve_forward, FdEngine};
pub use seis::{FieldHistory, Seismogram, SeismogramSet};

use crate::model::{Point, ReceiverArray, SourceParams};
use crate::Result;

/// Derivatives of every synthetic trace with respect to the trial source
/// coordinates (x, z, origin time).
pub struct SyntheticGradients {
    pub wrt_x: SeismogramSet,
    pub wrt_z: SeismogramSet,
    pub wrt_tau: SeismogramSet,
}

/// A solver the locator can drive. All engines share one clock: `nt`
/// samples spaced `dt` starting at t = 0.
pub trait Propagator: Sync {
    fn dt(&self) -> f64;
    fn nt(&self) -> usize;
    fn receivers(&self) -> &ReceiverArray;

    /// Synthetics at every receiver for a trial source.
    fn synthesize(&self, source: &SourceParams) -> Result<SeismogramSet>;

    /// Derivatives of those synthetics in the source coordinates.
    fn gradients(&self, source: &SourceParams) -> Result<SyntheticGradients>;

    /// Field at `query` when `injected` (given in forward-time order) is
    /// driven at station `station` and propagated in reversed time: the
    /// value at time t collects what the injection emits at later times.
    fn adjoint_history(&self, station: usize, injected: &[f64], query: Point)
        -> Result<FieldHistory>;
}
