//! Iterative source location from waveform misfits.
//!
//! Each iteration linearizes every used station's misfit about the
//! trial source, stacks the normalized rows into one least-squares
//! system for the position and origin-time step, and applies the step.
//! The full method re-estimates the origin time first by aligning
//! synthetics to the data in time and keeps only the stations whose
//! shifts agree; the conventional baseline skips that stage and uses
//! every station directly. The time-shift stage is what lets the
//! iteration start far from the true source without falling into a
//! secondary misfit basin.

use crate::adjoint::{self, SensitivityKernels};
use crate::align;
use crate::error::Result;
use crate::exec::ExecMode;
use crate::model::{Point, Rect, SourceParams};
use crate::wave::{Propagator, SeismogramSet};
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Time-shift origin estimation plus shift-consistent station
    /// selection before each position step.
    New,
    /// Plain misfit minimization over all stations, origin time updated
    /// from the linear system every iteration.
    Conventional,
}

/// How the per-station sensitivities are produced. Both routes agree to
/// rounding on a shared discretization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelStrategy {
    /// Correlate residuals with the synthetic's derivative traces: one
    /// shared set of derivative solves per iteration, station count
    /// free.
    ForwardGradient,
    /// Propagate each station's residual backwards and read the adjoint
    /// field at the trial source: one solve per station.
    Adjoint,
}

#[derive(Clone, Copy, Debug)]
pub struct LocateOptions {
    pub mode: Mode,
    /// Convergence tolerance on the position step, km.
    pub epsilon: f64,
    /// Divergence threshold on the position step, km.
    pub sigma: f64,
    pub max_iters: usize,
    /// Stations kept by the shift-agreement selection (full method).
    pub subset_size: usize,
    /// Initial origin time, s.
    pub tau0: f64,
    /// Cap on the alignment shift scan, s; None scans every overlapping
    /// shift.
    pub scan_half_width: Option<f64>,
    pub kernels: KernelStrategy,
    /// Admissible region for trial positions; iterates are clamped into
    /// it. The surface z = 0 is always enforced.
    pub clamp: Option<Rect>,
    pub exec: ExecMode,
}

impl Default for LocateOptions {
    fn default() -> Self {
        Self {
            mode: Mode::New,
            epsilon: 0.01,
            sigma: 100.0,
            max_iters: 30,
            subset_size: 6,
            tau0: 0.0,
            scan_half_width: None,
            kernels: KernelStrategy::ForwardGradient,
            clamp: None,
            exec: ExecMode::Parallel,
        }
    }
}

impl LocateOptions {
    fn validate(&self) {
        assert!(self.epsilon > 0.0, "epsilon must be positive");
        assert!(self.sigma > self.epsilon, "sigma must exceed epsilon");
        assert!(self.max_iters >= 1, "need at least one iteration");
        assert!(self.subset_size >= 1, "subset size must be at least 1");
        assert!(self.tau0.is_finite());
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    Diverged,
    MaxIters,
}

/// State at the top of one iteration, after any origin-time
/// re-estimation, with the step the iteration then produced.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryStep {
    pub iter: usize,
    pub xi: Point,
    pub tau: f64,
    /// Norm of the position step produced by this iteration, km.
    pub step_norm: f64,
    /// Total misfit over the stations used this iteration.
    pub chi_total: f64,
}

#[derive(Clone, Debug)]
pub struct LocationResult {
    pub trajectory: Vec<TrajectoryStep>,
    pub final_xi: Point,
    pub final_tau: f64,
    pub status: Status,
    pub iterations: usize,
}

/// Kernel rows scaled by their own misfit, so every station asks for a
/// first-order misfit change of -1 regardless of its raw amplitude.
/// Stations whose misfit is already zero carry no information and are
/// dropped.
#[derive(Clone, Debug)]
pub struct NormalizedSystem {
    /// One row per contributing station: (k_x, k_z, k_tau) / chi.
    pub rows: Vec<[f64; 3]>,
    /// Station behind each row, 1-based.
    pub stations: Vec<usize>,
}

pub fn build_system(kernels: &[SensitivityKernels]) -> NormalizedSystem {
    let mut rows = Vec::new();
    let mut stations = Vec::new();
    for k in kernels {
        if k.chi > 0.0 {
            rows.push([k.k_x / k.chi, k.k_z / k.chi, k.k_tau / k.chi]);
            stations.push(k.receiver_index);
        }
    }
    NormalizedSystem { rows, stations }
}

/// Minimum-norm least-squares step (dx, dz, dtau) for the system with
/// unit right-hand side. Singular values below 1e-10 of the largest are
/// treated as zero.
pub fn solve_update(sys: &NormalizedSystem) -> (f64, f64, f64) {
    if sys.rows.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let m = DMatrix::from_fn(sys.rows.len(), 3, |i, j| sys.rows[i][j]);
    let b = DVector::from_element(sys.rows.len(), 1.0);
    let svd = m.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let x = svd.solve(&b, 1e-10 * smax).expect("svd backsubstitution");
    (x[0], x[1], x[2])
}

fn admissible(mut p: Point, clamp: &Option<Rect>) -> Point {
    if let Some(rect) = clamp {
        p = rect.clamp(p);
    }
    if p.z > 0.0 {
        p.z = 0.0;
    }
    p
}

/// Runs the location loop on observed data. `pulse` supplies the source
/// wavelet shape; its position and origin time are ignored.
pub fn locate<P: Propagator + ?Sized>(
    engine: &P,
    observed: &SeismogramSet,
    pulse: &SourceParams,
    xi0: Point,
    opts: &LocateOptions,
) -> Result<LocationResult> {
    opts.validate();
    assert_eq!(observed.len(), engine.receivers().len(), "station counts must match");
    assert!(
        observed.dt == engine.dt() && observed.nt() == engine.nt(),
        "observed clock must match the engine"
    );
    let all: Vec<usize> = (1..=observed.len()).collect();
    let mut xi = admissible(xi0, &opts.clamp);
    let mut tau = opts.tau0;
    let mut trajectory: Vec<TrajectoryStep> = Vec::new();
    for k in 0..opts.max_iters {
        let used: Vec<usize> = if opts.mode == Mode::New {
            let synth = engine.synthesize(&pulse.with_xi_tau(xi, tau))?;
            let est = align::estimate_shift(
                observed,
                &synth,
                opts.subset_size,
                opts.scan_half_width,
                opts.exec,
            )?;
            tau = align::shifted_origin(tau, est.tau_star);
            est.selected
        } else {
            all.clone()
        };
        // kernels taken at the re-timed source, so the synthetics are
        // rebuilt after the shift
        let source = pulse.with_xi_tau(xi, tau);
        let synth = engine.synthesize(&source)?;
        let kernels = match opts.kernels {
            KernelStrategy::ForwardGradient => {
                adjoint::gradient_kernels(engine, observed, &synth, &source, &used)?
            }
            KernelStrategy::Adjoint => {
                adjoint::adjoint_kernels(engine, observed, &synth, &source, &used, opts.exec)?
            }
        };
        let chi_total: f64 = kernels.iter().map(|k| k.chi).sum();
        let sys = build_system(&kernels);
        if sys.rows.is_empty() {
            // every used station already fits exactly
            trajectory.push(TrajectoryStep { iter: k, xi, tau, step_norm: 0.0, chi_total });
            let iterations = trajectory.len();
            return Ok(LocationResult {
                trajectory,
                final_xi: xi,
                final_tau: tau,
                status: Status::Converged,
                iterations,
            });
        }
        let (dx, dz, dtau) = solve_update(&sys);
        let step_norm = (dx * dx + dz * dz).sqrt();
        trajectory.push(TrajectoryStep { iter: k, xi, tau, step_norm, chi_total });
        if step_norm < opts.epsilon {
            let iterations = trajectory.len();
            return Ok(LocationResult {
                trajectory,
                final_xi: admissible(Point::new(xi.x + dx, xi.z + dz), &opts.clamp),
                final_tau: tau + dtau,
                status: Status::Converged,
                iterations,
            });
        }
        if step_norm > opts.sigma {
            // off the map; report the raw landing point
            let iterations = trajectory.len();
            return Ok(LocationResult {
                trajectory,
                final_xi: Point::new(xi.x + dx, xi.z + dz),
                final_tau: tau,
                status: Status::Diverged,
                iterations,
            });
        }
        xi = admissible(Point::new(xi.x + dx, xi.z + dz), &opts.clamp);
        if opts.mode == Mode::Conventional {
            tau += dtau;
        }
    }
    let iterations = trajectory.len();
    Ok(LocationResult {
        trajectory,
        final_xi: xi,
        final_tau: tau,
        status: Status::MaxIters,
        iterations,
    })
}
