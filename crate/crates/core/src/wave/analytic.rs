//! Closed-form wavefields for a uniform-velocity medium.
//!
//! A point source at xi with time signature f produces, in an unbounded
//! 2D medium,
//!
//!   u(x, t) = (1 / (2 pi c^2)) * int_b^t f(t - theta) / sqrt(theta^2 - b^2) dtheta,
//!
//! where b = |x - xi| / c is the travel time. Two evaluation routes are
//! provided. `analytic_u` integrates the (desingularized) integral with
//! adaptive quadrature and serves as the reference oracle. The fast path
//! used by the locator convolves sampled wavelet values with cell-averaged
//! impulse-response weights. The weights also have closed-form derivatives
//! in b (`green_cells_db`), exact even on the singular wavefront; the
//! engine's sensitivity outputs deliberately do not use them. They take
//! centered differences at a fixed spatial offset instead, so closed-form
//! kernels carry the same resolution as grid-computed ones. Pointwise-exact
//! gradients of the singular-front response carry sub-wavelength structure
//! a grid solver never sees, and that structure stalls the location
//! iteration short of the source.
//!
//! A pressure-free surface at z = 0 is modeled by adding the mirrored
//! source term; a receiver on the surface then records exactly twice the
//! unbounded field.

use std::f64::consts::PI;

use crate::exec::{map_indexed, ExecMode};
use crate::model::{ricker, Point, ReceiverArray, SourceParams};
use crate::wave::{FieldHistory, Propagator, Seismogram, SeismogramSet, SyntheticGradients};
use crate::{Error, Result};

/// Distances below this (km) count as source/receiver coincidence, where
/// the 2D line-source field diverges logarithmically.
pub const MIN_DIST: f64 = 1e-6;

/// Half-offset (km) for the centered-difference sensitivity traces.
/// Matches the half-spacing of the reference grid solver at h = 0.25 km,
/// so kernels from this engine and from the grid share one resolution.
pub const KERNEL_OFFSET: f64 = 0.125;

/// Half-width of the wavelet support in units of 1/f0. Beyond it the
/// envelope is below 1e-26 of the peak.
const SUPPORT: f64 = 2.5;

/// Unbounded-medium field value at `at`, time `t`, by adaptive quadrature.
///
/// Substituting theta = b + v^2 removes the inverse-square-root endpoint
/// singularity:
///
///   u = (1 / (pi c0^2)) * int_0^sqrt(t - b) f(t - b - v^2) / sqrt(2 b + v^2) dv.
pub fn analytic_u(c0: f64, source: &SourceParams, at: Point, t: f64) -> f64 {
    assert!(c0 > 0.0, "wave speed must be positive");
    let dist = at.distance(&source.xi);
    assert!(dist > MIN_DIST, "field point coincides with the source");
    let b = dist / c0;
    let th0 = t - b;
    if th0 <= 0.0 {
        return 0.0;
    }
    // Clip the v-interval to where the wavelet argument th0 - tau - v^2
    // is inside the support band.
    let w = SUPPORT / source.f0;
    let hi2 = (th0 - source.tau + w).min(th0);
    if hi2 <= 0.0 {
        return 0.0;
    }
    let lo2 = (th0 - source.tau - w).max(0.0);
    if lo2 >= hi2 {
        return 0.0;
    }
    let (f0, a) = (source.f0, source.a);
    let integrand = move |v: f64| ricker(th0 - source.tau - v * v, f0, a) / (2.0 * b + v * v).sqrt();
    let tol = 1e-12 * a.abs().max(1.0);
    simpson_adaptive(&integrand, lo2.sqrt(), hi2.sqrt(), tol) / (PI * c0 * c0)
}

fn simpson_adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(f, a, fa, b, fb, m, fm, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        left + right + err / 15.0
    } else {
        refine(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + refine(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
}

/// Antiderivative in theta of 1 / sqrt(theta^2 - b^2), for theta >= b.
fn front_antideriv(s: f64, b: f64) -> f64 {
    (s + ((s - b) * (s + b)).sqrt()).ln()
}

/// Its derivative in b: -b / (R (s + R)) with R = sqrt(s^2 - b^2).
fn front_antideriv_db(s: f64, b: f64) -> f64 {
    let r = ((s - b) * (s + b)).sqrt();
    -b / (r * (s + r))
}

/// Integrals of the impulse response over the time cells
/// [(k - 1/2) dt, (k + 1/2) dt], k = 0..nt. Convolving sampled source
/// values with these weights reproduces the response to that source with
/// the singular wavefront integrated exactly within each cell.
pub fn green_cells(c0: f64, dist: f64, dt: f64, nt: usize) -> Vec<f64> {
    assert!(c0 > 0.0 && dt > 0.0);
    assert!(dist > MIN_DIST, "impulse response requested at the source point");
    let b = dist / c0;
    let scale = 1.0 / (2.0 * PI * c0 * c0);
    (0..nt)
        .map(|k| {
            let lo = (k as f64 - 0.5) * dt;
            let hi = (k as f64 + 0.5) * dt;
            if hi <= b {
                0.0
            } else {
                let i_lo = if lo <= b { b.ln() } else { front_antideriv(lo, b) };
                (front_antideriv(hi, b) - i_lo) * scale
            }
        })
        .collect()
}

/// Exact d/db of `green_cells`. The cell containing the front keeps the
/// moving-lower-limit contribution, the -1/b term; cells fully past the
/// front differentiate both edges.
pub fn green_cells_db(c0: f64, dist: f64, dt: f64, nt: usize) -> Vec<f64> {
    assert!(c0 > 0.0 && dt > 0.0);
    assert!(dist > MIN_DIST, "impulse response requested at the source point");
    let b = dist / c0;
    let scale = 1.0 / (2.0 * PI * c0 * c0);
    (0..nt)
        .map(|k| {
            let lo = (k as f64 - 0.5) * dt;
            let hi = (k as f64 + 0.5) * dt;
            if hi <= b {
                0.0
            } else {
                let d_lo = if lo <= b { 1.0 / b } else { front_antideriv_db(lo, b) };
                (front_antideriv_db(hi, b) - d_lo) * scale
            }
        })
        .collect()
}

/// First `n` samples of the full discrete convolution a * b.
pub fn convolve_prefix(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, &ai) in a.iter().enumerate() {
        if i >= n {
            break;
        }
        if ai == 0.0 {
            continue;
        }
        let jmax = (n - i).min(b.len());
        for (j, &bj) in b[..jmax].iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// w[i] = sum_k g[i + k] * cells[k]: the value at time i collects what the
/// injected series emits at later times. This is the reversed-time
/// propagation that terminal-value sensitivity fields require; a plain
/// causal convolution would place the response after the data instead of
/// before it.
pub fn correlate_suffix(g: &[f64], cells: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    for (p, &gp) in g.iter().enumerate() {
        if gp == 0.0 {
            continue;
        }
        let kmax = cells.len().min(p + 1);
        for (k, &ck) in cells[..kmax].iter().enumerate() {
            out[p - k] += gp * ck;
        }
    }
    out
}

/// Path lengths between a moving point and a fixed point: the direct
/// distance, plus the mirror path through the z = 0 surface image of the
/// fixed point when `image` is set. The mirror distance equals
/// sqrt((mx - fx)^2 + (mz + fz)^2) regardless of which endpoint is
/// reflected, so one helper serves source-side and receiver-side use.
fn path_lengths(moving: Point, fixed: Point, image: bool) -> Result<Vec<f64>> {
    let dx = moving.x - fixed.x;
    let dz = moving.z - fixed.z;
    let d = (dx * dx + dz * dz).sqrt();
    if d <= MIN_DIST {
        return Err(Error::degenerate(format!(
            "propagation path degenerate: point ({:.6}, {:.6}) sits on its counterpart",
            moving.x, moving.z
        )));
    }
    let mut terms = vec![d];
    if image {
        let dzi = moving.z + fixed.z;
        let di = (dx * dx + dzi * dzi).sqrt();
        if di <= MIN_DIST {
            return Err(Error::degenerate(
                "propagation path degenerate: point coincides with a surface image".to_string(),
            ));
        }
        terms.push(di);
    }
    Ok(terms)
}

fn wavelet_samples(source: &SourceParams, dt: f64, nt: usize) -> Vec<f64> {
    (0..nt).map(|i| source.wavelet(i as f64 * dt)).collect()
}

fn wavelet_rate_samples(source: &SourceParams, dt: f64, nt: usize) -> Vec<f64> {
    (0..nt).map(|i| source.wavelet_rate(i as f64 * dt)).collect()
}

/// Fast solver for a constant-velocity medium. Synthetics, their
/// derivatives in source position and origin time, and reversed-time
/// sensitivity fields all come from closed-form cell weights, so a full
/// location run costs milliseconds instead of forward simulations.
pub struct HomogeneousPropagator {
    c0: f64,
    receivers: ReceiverArray,
    dt: f64,
    nt: usize,
    surface_image: bool,
    kernel_offset: f64,
    exec: ExecMode,
}

impl HomogeneousPropagator {
    pub fn new(c0: f64, receivers: ReceiverArray, dt: f64, nt: usize) -> Self {
        assert!(c0 > 0.0 && dt > 0.0 && nt >= 2);
        Self {
            c0,
            receivers,
            dt,
            nt,
            surface_image: true,
            kernel_offset: KERNEL_OFFSET,
            exec: ExecMode::default(),
        }
    }

    /// Toggles the mirrored-source term. On (default) the medium has a
    /// pressure-free surface at z = 0; off it is unbounded.
    pub fn with_surface_image(mut self, on: bool) -> Self {
        self.surface_image = on;
        self
    }

    /// Overrides the centered-difference half-offset for sensitivity
    /// traces. Smaller offsets sharpen the kernels toward the pointwise
    /// derivative; see the module notes for why that is not the default.
    pub fn with_kernel_offset(mut self, offset: f64) -> Self {
        assert!(offset > MIN_DIST, "kernel offset must stay clear of coincidence");
        self.kernel_offset = offset;
        self
    }

    pub fn with_exec(mut self, exec: ExecMode) -> Self {
        self.exec = exec;
        self
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    fn cells_only(&self, moving: Point, fixed: Point) -> Result<Vec<f64>> {
        let mut cells = vec![0.0; self.nt];
        for dist in path_lengths(moving, fixed, self.surface_image)? {
            let g = green_cells(self.c0, dist, self.dt, self.nt);
            for k in 0..self.nt {
                cells[k] += g[k];
            }
        }
        Ok(cells)
    }

    /// Centered difference of per-cell weight series taken at the moving
    /// point displaced by +/- the kernel offset along (ux, uz).
    fn cells_slope(&self, moving: Point, fixed: Point, ux: f64, uz: f64) -> Result<Vec<f64>> {
        let d = self.kernel_offset;
        let plus = self.cells_only(Point::new(moving.x + d * ux, moving.z + d * uz), fixed)?;
        let minus = self.cells_only(Point::new(moving.x - d * ux, moving.z - d * uz), fixed)?;
        Ok(plus
            .into_iter()
            .zip(minus)
            .map(|(p, m)| (p - m) / (2.0 * d))
            .collect())
    }
}

impl Propagator for HomogeneousPropagator {
    fn dt(&self) -> f64 {
        self.dt
    }

    fn nt(&self) -> usize {
        self.nt
    }

    fn receivers(&self) -> &ReceiverArray {
        &self.receivers
    }

    fn synthesize(&self, source: &SourceParams) -> Result<SeismogramSet> {
        let f = wavelet_samples(source, self.dt, self.nt);
        let n = self.receivers.len();
        let traces = map_indexed(self.exec, n, |k| {
            let eta = self.receivers.position(k + 1);
            let cells = self.cells_only(source.xi, eta)?;
            Ok(Seismogram::new(k + 1, self.dt, convolve_prefix(&f, &cells, self.nt)))
        });
        Ok(SeismogramSet::new(traces.into_iter().collect::<Result<Vec<_>>>()?))
    }

    fn gradients(&self, source: &SourceParams) -> Result<SyntheticGradients> {
        let f = wavelet_samples(source, self.dt, self.nt);
        let fp = wavelet_rate_samples(source, self.dt, self.nt);
        let n = self.receivers.len();
        let rows = map_indexed(self.exec, n, |k| {
            let eta = self.receivers.position(k + 1);
            let sx = convolve_prefix(&f, &self.cells_slope(source.xi, eta, 1.0, 0.0)?, self.nt);
            let sz = convolve_prefix(&f, &self.cells_slope(source.xi, eta, 0.0, 1.0)?, self.nt);
            // d/dtau of f(t - tau) is -f'(t - tau); exact, no offset needed
            let mut st = convolve_prefix(&fp, &self.cells_only(source.xi, eta)?, self.nt);
            for v in &mut st {
                *v = -*v;
            }
            Ok((sx, sz, st))
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let pack = |pick: fn(&(Vec<f64>, Vec<f64>, Vec<f64>)) -> &Vec<f64>| {
            SeismogramSet::new(
                rows.iter()
                    .enumerate()
                    .map(|(k, row)| Seismogram::new(k + 1, self.dt, pick(row).clone()))
                    .collect(),
            )
        };
        Ok(SyntheticGradients {
            wrt_x: pack(|r| &r.0),
            wrt_z: pack(|r| &r.1),
            wrt_tau: pack(|r| &r.2),
        })
    }

    fn adjoint_history(&self, station: usize, injected: &[f64], query: Point) -> Result<FieldHistory> {
        assert_eq!(injected.len(), self.nt, "injected series must match the clock");
        let eta = self.receivers.position(station);
        Ok(FieldHistory {
            dt: self.dt,
            values: correlate_suffix(injected, &self.cells_only(query, eta)?),
            grad_x: correlate_suffix(injected, &self.cells_slope(query, eta, 1.0, 0.0)?),
            grad_z: correlate_suffix(injected, &self.cells_slope(query, eta, 0.0, 1.0)?),
        })
    }
}
