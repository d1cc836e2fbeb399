//! Finite-difference solver for the 2D acoustic wave equation with
//! variable velocity.
//!
//! Time stepping is second-order leapfrog. The spatial operator
//! L u = d/dx(c^2 du/dx) + d/dz(c^2 du/dz) is assembled in flux form from
//! staggered first differences (4th or 6th order), which keeps the
//! discrete L self-adjoint for arbitrary c(x, z); with every boundary
//! reflecting, the scheme then conserves a discrete energy to rounding,
//! which the test suite uses as a long-run correctness probe.
//!
//! Boundaries: the top is either a mirror (pressure-free surface) or an
//! absorbing pad; the sides and bottom carry absorbing pads of
//! `pml_width` nodes. The pads damp in an unsplit form with two auxiliary
//! fields driven by the velocity gradient of the solution and a quadratic
//! damping profile. `pml_width = 0` removes every pad and mirrors all
//! four edges. Mirror edges are realized by copying interior rows or
//! columns into ghost nodes after each step; the outermost ghost ring is
//! held at zero.
//!
//! Point sources and receivers sit off-grid: injection spreads a source
//! over a 7x7 patch with a piecewise-quintic discrete delta whose first
//! three moments are exact, folding weights across mirror edges when the
//! patch sticks out; extraction is bilinear, and field gradients at a
//! query point are centered differences of the four surrounding nodes
//! combined with the same bilinear weights.

use crate::exec::ExecMode;
use crate::model::{
    discrete_delta_1d, Point, ReceiverArray, SimConfig, SourceParams, SpatialOrder, TopBoundary,
    VelocityModel,
};
use crate::wave::{FieldHistory, Propagator, Seismogram, SeismogramSet, SyntheticGradients};
use crate::{Error, Result};

const S4_W: [f64; 2] = [27.0 / 24.0, -1.0 / 24.0];
const S6_W: [f64; 3] = [75.0 / 64.0, -25.0 / 384.0, 3.0 / 640.0];

#[derive(Clone, Copy)]
enum Drive<'a> {
    /// Inject the wavelet of the source parameters at their position.
    Wavelet(&'a SourceParams),
    /// Inject an arbitrary forward-time sample series at a point.
    Series(Point, &'a [f64]),
}

pub struct FdEngine {
    cfg: SimConfig,
    receivers: ReceiverArray,
    exec: ExecMode,
    // extended-grid geometry: physical grid plus absorbing pads plus ghosts
    nx_e: usize,
    nz_e: usize,
    off_x: usize,
    off_z: usize,
    pad_l: usize,
    pad_r: usize,
    pad_b: usize,
    pad_t: usize,
    ghost: usize,
    mirror_top: bool,
    mirror_sides: bool,
    mirror_bottom: bool,
    // material arrays on the extended grid
    c2x: Vec<f64>,
    c2z: Vec<f64>,
    c2n: Vec<f64>,
    // separable damping profiles
    zeta_x: Vec<f64>,
    zeta_z: Vec<f64>,
    station_taps: Vec<[(usize, f64); 4]>,
}

impl FdEngine {
    pub fn new(
        model: &VelocityModel,
        cfg: SimConfig,
        receivers: ReceiverArray,
        exec: ExecMode,
    ) -> Result<Self> {
        let g = cfg.spatial_order.ghost();
        let p = cfg.pml_width;
        assert!(p == 0 || p >= g, "absorbing pad must cover the stencil width");
        let ext = cfg.grid.extent();
        for (_, pos) in receivers.iter() {
            assert!(ext.contains(pos), "receiver outside the grid");
        }
        let (c_min, c_max) = model.speed_range(ext, cfg.grid.h);
        assert!(c_min > 0.0, "velocity must be positive on the grid");
        cfg.assert_stable(c_max);

        let pad_l = p;
        let pad_r = p;
        let pad_b = p;
        let pad_t = match cfg.top_boundary {
            TopBoundary::FreeSurface => 0,
            TopBoundary::Absorbing => p,
        };
        let mirror_top = matches!(cfg.top_boundary, TopBoundary::FreeSurface);
        let mirror_sides = p == 0;
        let mirror_bottom = p == 0;
        let nx_e = cfg.grid.nx + pad_l + pad_r + 2 * g;
        let nz_e = cfg.grid.nz + pad_b + pad_t + 2 * g;
        let off_x = g + pad_l;
        let off_z = g + pad_b;
        let h = cfg.grid.h;

        // Material coordinates fold across mirror edges and clamp into the
        // pads, so reflecting extensions stay exactly symmetric and pads
        // extrude the edge velocity.
        let fold = |x: f64, z: f64| -> (f64, f64) {
            let mut xf = x;
            let mut zf = z;
            if mirror_sides {
                if xf < ext.x0 {
                    xf = 2.0 * ext.x0 - xf;
                }
                if xf > ext.x1 {
                    xf = 2.0 * ext.x1 - xf;
                }
            }
            if mirror_top && zf > ext.z1 {
                zf = 2.0 * ext.z1 - zf;
            }
            if mirror_bottom && zf < ext.z0 {
                zf = 2.0 * ext.z0 - zf;
            }
            (xf.clamp(ext.x0, ext.x1), zf.clamp(ext.z0, ext.z1))
        };
        let xc = |i: usize| ext.x0 + (i as f64 - off_x as f64) * h;
        let zc = |j: usize| ext.z0 + (j as f64 - off_z as f64) * h;
        let n = nx_e * nz_e;
        let mut c2x = vec![0.0; n];
        let mut c2z = vec![0.0; n];
        let mut c2n = vec![0.0; n];
        for j in 0..nz_e {
            for i in 0..nx_e {
                let idx = j * nx_e + i;
                let (x, z) = (xc(i), zc(j));
                let sq = |v: f64| v * v;
                let (xa, za) = fold(x + 0.5 * h, z);
                c2x[idx] = sq(model.eval_clamped(xa, za));
                let (xb, zb) = fold(x, z + 0.5 * h);
                c2z[idx] = sq(model.eval_clamped(xb, zb));
                let (xn, zn) = fold(x, z);
                c2n[idx] = sq(model.eval_clamped(xn, zn));
            }
        }

        // Quadratic damping ramp reaching zeta_max at the outer pad edge.
        let l = p as f64 * h;
        let zeta_max = if p == 0 {
            0.0
        } else {
            3.0 * c_max * (-(cfg.pml_reflectivity).ln()) / (2.0 * l)
        };
        let ramp = |d: f64| {
            if d <= 0.0 || p == 0 {
                0.0
            } else {
                let q = (d.min(l)) / l;
                zeta_max * q * q
            }
        };
        let zeta_x: Vec<f64> = (0..nx_e)
            .map(|i| {
                if mirror_sides {
                    0.0
                } else {
                    let x = xc(i);
                    ramp((ext.x0 - x).max(x - ext.x1))
                }
            })
            .collect();
        let zeta_z: Vec<f64> = (0..nz_e)
            .map(|j| {
                let z = zc(j);
                let below = if mirror_bottom { 0.0 } else { ext.z0 - z };
                let above = if pad_t == 0 { 0.0 } else { z - ext.z1 };
                ramp(below.max(above))
            })
            .collect();

        let mut engine = Self {
            cfg,
            receivers,
            exec,
            nx_e,
            nz_e,
            off_x,
            off_z,
            pad_l,
            pad_r,
            pad_b,
            pad_t,
            ghost: g,
            mirror_top,
            mirror_sides,
            mirror_bottom,
            c2x,
            c2z,
            c2n,
            zeta_x,
            zeta_z,
            station_taps: Vec::new(),
        };
        engine.station_taps = engine
            .receivers
            .iter()
            .map(|(_, pos)| engine.bilinear_taps(pos))
            .collect();
        Ok(engine)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    fn pml_active(&self) -> bool {
        self.cfg.pml_width > 0
    }

    /// Extended-array taps for bilinear extraction at a physical point.
    fn bilinear_taps(&self, pnt: Point) -> [(usize, f64); 4] {
        let grid = &self.cfg.grid;
        let gx = (pnt.x - grid.x0) / grid.h;
        let gz = (pnt.z - grid.z0) / grid.h;
        assert!(
            gx >= -1e-9 && gx <= (grid.nx - 1) as f64 + 1e-9,
            "extraction point outside the grid"
        );
        assert!(
            gz >= -1e-9 && gz <= (grid.nz - 1) as f64 + 1e-9,
            "extraction point outside the grid"
        );
        let i0 = (gx.floor().max(0.0) as usize).min(grid.nx - 2);
        let j0 = (gz.floor().max(0.0) as usize).min(grid.nz - 2);
        let fx = (gx - i0 as f64).clamp(0.0, 1.0);
        let fz = (gz - j0 as f64).clamp(0.0, 1.0);
        let at = |i: usize, j: usize| (j + self.off_z) * self.nx_e + i + self.off_x;
        [
            (at(i0, j0), (1.0 - fx) * (1.0 - fz)),
            (at(i0 + 1, j0), fx * (1.0 - fz)),
            (at(i0, j0 + 1), (1.0 - fx) * fz),
            (at(i0 + 1, j0 + 1), fx * fz),
        ]
    }

    fn fold_index(
        &self,
        idx: i64,
        max_phys: i64,
        mirror_lo: bool,
        mirror_hi: bool,
        pad_lo: i64,
        pad_hi: i64,
    ) -> Result<i64> {
        let mut k = idx;
        if mirror_lo && k < 0 {
            k = -k;
        }
        if mirror_hi && k > max_phys {
            k = 2 * max_phys - k;
        }
        if k < -pad_lo || k > max_phys + pad_hi {
            return Err(Error::degenerate("injection point too far outside the grid"));
        }
        Ok(k)
    }

    /// Discrete-delta injection weights, folded across mirror edges.
    /// Duplicate node entries are allowed; injection accumulates. A tap
    /// sitting exactly on a mirror line is its own image, so its weight
    /// doubles: the continuum source next to a reflector is the sum of
    /// the delta cloud and its mirrored copy, and folding alone only
    /// supplies the copy for off-line taps.
    fn injection_taps(&self, at: Point) -> Result<Vec<(usize, f64)>> {
        let grid = &self.cfg.grid;
        let h = grid.h;
        let ic = ((at.x - grid.x0) / h).round() as i64;
        let jc = ((at.z - grid.z0) / h).round() as i64;
        let mut xs: Vec<(i64, f64)> = Vec::new();
        for di in -3..=3i64 {
            let ip = ic + di;
            let mut w = discrete_delta_1d(grid.x0 + ip as f64 * h - at.x, h);
            if w == 0.0 {
                continue;
            }
            if self.mirror_sides && (ip == 0 || ip == grid.nx as i64 - 1) {
                w *= 2.0;
            }
            let i_f = self.fold_index(
                ip,
                grid.nx as i64 - 1,
                self.mirror_sides,
                self.mirror_sides,
                self.pad_l as i64,
                self.pad_r as i64,
            )?;
            xs.push((i_f, w));
        }
        let mut zs: Vec<(i64, f64)> = Vec::new();
        for dj in -3..=3i64 {
            let jp = jc + dj;
            let mut w = discrete_delta_1d(grid.z0 + jp as f64 * h - at.z, h);
            if w == 0.0 {
                continue;
            }
            if (self.mirror_bottom && jp == 0) || (self.mirror_top && jp == grid.nz as i64 - 1) {
                w *= 2.0;
            }
            let j_f = self.fold_index(
                jp,
                grid.nz as i64 - 1,
                self.mirror_bottom,
                self.mirror_top,
                self.pad_b as i64,
                self.pad_t as i64,
            )?;
            zs.push((j_f, w));
        }
        let mut taps = Vec::with_capacity(xs.len() * zs.len());
        for &(jf, wz) in &zs {
            let row = (jf + self.off_z as i64) as usize * self.nx_e;
            for &(if_, wx) in &xs {
                taps.push((row + (if_ + self.off_x as i64) as usize, wx * wz));
            }
        }
        Ok(taps)
    }

    fn mirror_fill(&self, u: &mut [f64]) {
        let nxe = self.nx_e;
        let g = self.ghost;
        if self.mirror_top {
            let jt = self.off_z + self.cfg.grid.nz - 1;
            for m in 1..=g {
                u.copy_within((jt - m) * nxe..(jt - m + 1) * nxe, (jt + m) * nxe);
            }
        }
        if self.mirror_bottom {
            let jb = self.off_z;
            for m in 1..=g {
                u.copy_within((jb + m) * nxe..(jb + m + 1) * nxe, (jb - m) * nxe);
            }
        }
        if self.mirror_sides {
            let il = self.off_x;
            let ir = self.off_x + self.cfg.grid.nx - 1;
            for j in 0..self.nz_e {
                let row = j * nxe;
                for m in 1..=g {
                    u[row + il - m] = u[row + il + m];
                    u[row + ir + m] = u[row + ir - m];
                }
            }
        }
    }

    /// Discrete energy of the step pair (u_next, u_cur) with lu = h^2 * L u_cur,
    /// summed over physical nodes with half weights on mirror edges.
    fn energy_value(&self, un: &[f64], uc: &[f64], lu: &[f64]) -> f64 {
        let grid = &self.cfg.grid;
        let dt = self.cfg.dt;
        let mut kin = 0.0;
        let mut pot = 0.0;
        for jp in 0..grid.nz {
            let wz = if jp == 0 || jp == grid.nz - 1 { 0.5 } else { 1.0 };
            let base = (jp + self.off_z) * self.nx_e + self.off_x;
            for ip in 0..grid.nx {
                let wx = if ip == 0 || ip == grid.nx - 1 { 0.5 } else { 1.0 };
                let w = wx * wz;
                let idx = base + ip;
                let v = (un[idx] - uc[idx]) / dt;
                kin += w * v * v;
                pot -= w * un[idx] * lu[idx];
            }
        }
        0.5 * grid.h * grid.h * kin + 0.5 * pot
    }

    fn run(
        &self,
        drive: Drive,
        query: Option<Point>,
        mut energy_out: Option<&mut Vec<f64>>,
    ) -> Result<(Option<SeismogramSet>, Option<FieldHistory>)> {
        let nxe = self.nx_e;
        let nze = self.nz_e;
        let n = nxe * nze;
        let nt = self.cfg.nt();
        let dt = self.cfg.dt;
        let dt2 = dt * dt;
        let h = self.cfg.grid.h;
        let h2inv = 1.0 / (h * h);
        let inv2h = 0.5 / h;
        let g = self.ghost;
        let order = self.cfg.spatial_order;
        let pml_active = self.pml_active();

        let taps = match drive {
            Drive::Wavelet(src) => self.injection_taps(src.xi)?,
            Drive::Series(at, series) => {
                assert_eq!(series.len(), nt, "injected series must match the clock");
                self.injection_taps(at)?
            }
        };

        // pure zone: more than one node away from any damping pad, where
        // the update needs neither damping terms nor auxiliary fields
        let (il, ir) = if pml_active {
            (g + self.pad_l + 1, nxe - g - self.pad_r - 1)
        } else {
            (g, nxe - g)
        };
        let (jl, jr) = if pml_active {
            let top = if self.pad_t > 0 { nze - g - self.pad_t - 1 } else { nze - g };
            (g + self.pad_b + 1, top)
        } else {
            (g, nze - g)
        };

        let mut u_prev = vec![0.0; n];
        let mut u_cur = vec![0.0; n];
        let mut u_next = vec![0.0; n];
        let mut fx = vec![0.0; n];
        let mut fz = vec![0.0; n];
        let mut lu = vec![0.0; n];
        let mut phi1 = vec![0.0; n];
        let mut phi2 = vec![0.0; n];

        let mut rec: Vec<Vec<f64>> = if query.is_none() {
            vec![vec![0.0; nt]; self.receivers.len()]
        } else {
            Vec::new()
        };
        let q_taps = query.map(|q| self.bilinear_taps(q));
        let mut hist_v = vec![0.0; nt];
        let mut hist_gx = vec![0.0; nt];
        let mut hist_gz = vec![0.0; nt];

        for step in 0..nt - 1 {
            let f_val = match drive {
                Drive::Wavelet(src) => src.wavelet(step as f64 * dt),
                Drive::Series(_, series) => series[step],
            };

            // pass 1: staggered fluxes of u_cur
            {
                let u = &u_cur;
                let c2x = &self.c2x;
                let c2z = &self.c2z;
                rows_mut2(self.exec, nxe, &mut fx, &mut fz, |j, fxr, fzr| {
                    let b = j * nxe;
                    match order {
                        SpatialOrder::Four => {
                            let [w0, w1] = S4_W;
                            for i in 1..nxe - 2 {
                                let d = w0 * (u[b + i + 1] - u[b + i])
                                    + w1 * (u[b + i + 2] - u[b + i - 1]);
                                fxr[i] = c2x[b + i] * d;
                            }
                            if (1..nze - 2).contains(&j) {
                                for i in 0..nxe {
                                    let d = w0 * (u[b + i + nxe] - u[b + i])
                                        + w1 * (u[b + i + 2 * nxe] - u[b + i - nxe]);
                                    fzr[i] = c2z[b + i] * d;
                                }
                            }
                        }
                        SpatialOrder::Six => {
                            let [w0, w1, w2] = S6_W;
                            for i in 2..nxe - 3 {
                                let d = w0 * (u[b + i + 1] - u[b + i])
                                    + w1 * (u[b + i + 2] - u[b + i - 1])
                                    + w2 * (u[b + i + 3] - u[b + i - 2]);
                                fxr[i] = c2x[b + i] * d;
                            }
                            if (2..nze - 3).contains(&j) {
                                for i in 0..nxe {
                                    let d = w0 * (u[b + i + nxe] - u[b + i])
                                        + w1 * (u[b + i + 2 * nxe] - u[b + i - nxe])
                                        + w2 * (u[b + i + 3 * nxe] - u[b + i - 2 * nxe]);
                                    fzr[i] = c2z[b + i] * d;
                                }
                            }
                        }
                    }
                });
            }

            // pass 2: divergence and leapfrog update
            {
                let fx = &fx;
                let fz = &fz;
                let uc = &u_cur;
                let up = &u_prev;
                let phi1 = &phi1;
                let phi2 = &phi2;
                let zeta_x = &self.zeta_x;
                let zeta_z = &self.zeta_z;
                rows_mut2(self.exec, nxe, &mut u_next, &mut lu, |j, outr, lur| {
                    if j < g || j >= nze - g {
                        return;
                    }
                    let b = j * nxe;
                    match order {
                        SpatialOrder::Four => {
                            let [w0, w1] = S4_W;
                            for i in g..nxe - g {
                                let ix = b + i;
                                let dx = w0 * (fx[ix] - fx[ix - 1]) + w1 * (fx[ix + 1] - fx[ix - 2]);
                                let dz = w0 * (fz[ix] - fz[ix - nxe])
                                    + w1 * (fz[ix + nxe] - fz[ix - 2 * nxe]);
                                lur[i] = dx + dz;
                            }
                        }
                        SpatialOrder::Six => {
                            let [w0, w1, w2] = S6_W;
                            for i in g..nxe - g {
                                let ix = b + i;
                                let dx = w0 * (fx[ix] - fx[ix - 1])
                                    + w1 * (fx[ix + 1] - fx[ix - 2])
                                    + w2 * (fx[ix + 2] - fx[ix - 3]);
                                let dz = w0 * (fz[ix] - fz[ix - nxe])
                                    + w1 * (fz[ix + nxe] - fz[ix - 2 * nxe])
                                    + w2 * (fz[ix + 2 * nxe] - fz[ix - 3 * nxe]);
                                lur[i] = dx + dz;
                            }
                        }
                    }
                    let z2 = zeta_z[j];
                    let damped = |outr: &mut [f64], i0: usize, i1: usize| {
                        for i in i0..i1 {
                            let idx = b + i;
                            let z1 = zeta_x[i];
                            let divphi = (phi1[idx + 1] - phi1[idx - 1] + phi2[idx + nxe]
                                - phi2[idx - nxe])
                                * inv2h;
                            let ah = 0.5 * (z1 + z2) * dt;
                            outr[i] = ((2.0 - z1 * z2 * dt2) * uc[idx]
                                - (1.0 - ah) * up[idx]
                                + dt2 * (lur[i] * h2inv + divphi))
                                / (1.0 + ah);
                        }
                    };
                    if z2 == 0.0 && j >= jl && j < jr {
                        damped(outr, g, il);
                        for i in il..ir {
                            let idx = b + i;
                            outr[i] = 2.0 * uc[idx] - up[idx] + dt2 * h2inv * lur[i];
                        }
                        damped(outr, ir, nxe - g);
                    } else {
                        damped(outr, g, nxe - g);
                    }
                });
            }

            // source injection
            if f_val != 0.0 {
                for &(idx, w) in &taps {
                    let i = idx % nxe;
                    let j = idx / nxe;
                    let ah = 0.5 * (self.zeta_x[i] + self.zeta_z[j]) * dt;
                    u_next[idx] += dt2 * f_val * w / (1.0 + ah);
                }
            }

            self.mirror_fill(&mut u_next);

            // pass 3: auxiliary damping fields, pad region only
            if pml_active {
                let un = &u_next;
                let c2n = &self.c2n;
                let zeta_x = &self.zeta_x;
                let zeta_z = &self.zeta_z;
                let pad_l = self.pad_l;
                let pad_r = self.pad_r;
                rows_mut2(self.exec, nxe, &mut phi1, &mut phi2, |j, p1r, p2r| {
                    if j < g || j >= nze - g {
                        return;
                    }
                    let b = j * nxe;
                    let z2 = zeta_z[j];
                    let span = |p1r: &mut [f64], p2r: &mut [f64], i0: usize, i1: usize| {
                        for i in i0..i1 {
                            let z1 = zeta_x[i];
                            if z1 == 0.0 && z2 == 0.0 {
                                continue;
                            }
                            let idx = b + i;
                            let dux = (un[idx + 1] - un[idx - 1]) * inv2h;
                            let duz = (un[idx + nxe] - un[idx - nxe]) * inv2h;
                            p1r[i] = (p1r[i] + dt * (z2 - z1) * c2n[idx] * dux) / (1.0 + z1 * dt);
                            p2r[i] = (p2r[i] + dt * (z1 - z2) * c2n[idx] * duz) / (1.0 + z2 * dt);
                        }
                    };
                    if z2 != 0.0 {
                        span(p1r, p2r, g, nxe - g);
                    } else {
                        span(p1r, p2r, g, g + pad_l);
                        span(p1r, p2r, nxe - g - pad_r, nxe - g);
                    }
                });
            }

            // record sample step + 1
            if let Some(qt) = &q_taps {
                let mut v = 0.0;
                let mut gx = 0.0;
                let mut gz = 0.0;
                for &(idx, w) in qt {
                    v += w * u_next[idx];
                    gx += w * (u_next[idx + 1] - u_next[idx - 1]) * inv2h;
                    gz += w * (u_next[idx + nxe] - u_next[idx - nxe]) * inv2h;
                }
                hist_v[step + 1] = v;
                hist_gx[step + 1] = gx;
                hist_gz[step + 1] = gz;
            } else {
                for (r, taps4) in self.station_taps.iter().enumerate() {
                    let mut v = 0.0;
                    for &(idx, w) in taps4 {
                        v += w * u_next[idx];
                    }
                    rec[r][step + 1] = v;
                }
            }

            if let Some(e) = energy_out.as_deref_mut() {
                e.push(self.energy_value(&u_next, &u_cur, &lu));
            }

            std::mem::swap(&mut u_prev, &mut u_cur);
            std::mem::swap(&mut u_cur, &mut u_next);
        }

        if query.is_some() {
            Ok((
                None,
                Some(FieldHistory { dt, values: hist_v, grad_x: hist_gx, grad_z: hist_gz }),
            ))
        } else {
            let traces = rec
                .into_iter()
                .enumerate()
                .map(|(r, samples)| Seismogram::new(r + 1, dt, samples))
                .collect();
            Ok((Some(SeismogramSet::new(traces)), None))
        }
    }

    pub fn solve_forward(&self, source: &SourceParams) -> Result<SeismogramSet> {
        let (traces, _) = self.run(Drive::Wavelet(source), None, None)?;
        Ok(traces.expect("station capture requested"))
    }

    /// Forward-time solve driven by an arbitrary sample series injected at
    /// `inject_at`, recording value and gradient at `query`.
    pub fn record_field_at(
        &self,
        inject_at: Point,
        series: &[f64],
        query: Point,
    ) -> Result<FieldHistory> {
        let (_, hist) = self.run(Drive::Series(inject_at, series), Some(query), None)?;
        Ok(hist.expect("point capture requested"))
    }

    /// Discrete energy after each step. Requires the fully reflecting box
    /// (pml_width = 0), where the scheme conserves it exactly once the
    /// source has shut off.
    pub fn energy_history(&self, source: &SourceParams) -> Result<Vec<f64>> {
        assert!(self.cfg.pml_width == 0, "energy probe requires the reflecting box");
        let mut e = Vec::new();
        self.run(Drive::Wavelet(source), None, Some(&mut e))?;
        Ok(e)
    }
}

fn rows_mut2(
    exec: ExecMode,
    nx: usize,
    a: &mut [f64],
    b: &mut [f64],
    f: impl Fn(usize, &mut [f64], &mut [f64]) + Send + Sync,
) {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if exec.is_parallel() {
            a.par_chunks_mut(nx)
                .zip(b.par_chunks_mut(nx))
                .enumerate()
                .for_each(|(j, (ra, rb))| f(j, ra, rb));
            return;
        }
    }
    let _ = exec;
    for (j, (ra, rb)) in a.chunks_mut(nx).zip(b.chunks_mut(nx)).enumerate() {
        f(j, ra, rb);
    }
}

fn diff_sets(p: &SeismogramSet, m: &SeismogramSet, inv: f64) -> SeismogramSet {
    SeismogramSet::new(
        p.traces
            .iter()
            .zip(&m.traces)
            .map(|(a, b)| {
                Seismogram::new(
                    a.receiver_index,
                    a.dt,
                    a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y) * inv).collect(),
                )
            })
            .collect(),
    )
}

impl Propagator for FdEngine {
    fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn nt(&self) -> usize {
        self.cfg.nt()
    }

    fn receivers(&self) -> &ReceiverArray {
        &self.receivers
    }

    fn synthesize(&self, source: &SourceParams) -> Result<SeismogramSet> {
        self.solve_forward(source)
    }

    /// Position derivatives by centered half-cell offsets of the source,
    /// origin-time derivative by one extra solve driven with the negated
    /// wavelet rate.
    fn gradients(&self, source: &SourceParams) -> Result<SyntheticGradients> {
        let d = 0.5 * self.cfg.grid.h;
        let xi = source.xi;
        let sxp = self.solve_forward(&source.with_xi_tau(Point::new(xi.x + d, xi.z), source.tau))?;
        let sxm = self.solve_forward(&source.with_xi_tau(Point::new(xi.x - d, xi.z), source.tau))?;
        let szp = self.solve_forward(&source.with_xi_tau(Point::new(xi.x, xi.z + d), source.tau))?;
        let szm = self.solve_forward(&source.with_xi_tau(Point::new(xi.x, xi.z - d), source.tau))?;
        let nt = self.cfg.nt();
        let dt = self.cfg.dt;
        let rate: Vec<f64> = (0..nt).map(|i| -source.wavelet_rate(i as f64 * dt)).collect();
        let (st, _) = self.run(Drive::Series(xi, &rate), None, None)?;
        Ok(SyntheticGradients {
            wrt_x: diff_sets(&sxp, &sxm, 1.0 / (2.0 * d)),
            wrt_z: diff_sets(&szp, &szm, 1.0 / (2.0 * d)),
            wrt_tau: st.expect("station capture requested"),
        })
    }

    fn adjoint_history(
        &self,
        station: usize,
        injected: &[f64],
        query: Point,
    ) -> Result<FieldHistory> {
        let eta = self.receivers.position(station);
        let rev: Vec<f64> = injected.iter().rev().copied().collect();
        let mut hist = self.record_field_at(eta, &rev, query)?;
        hist.values.reverse();
        hist.grad_x.reverse();
        hist.grad_z.reverse();
        Ok(hist)
    }
}

/// One-shot forward solve without keeping the engine.
pub fn solve_forward(
    model: &VelocityModel,
    source: &SourceParams,
    cfg: &SimConfig,
    receivers: &ReceiverArray,
) -> Result<SeismogramSet> {
    FdEngine::new(model, cfg.clone(), receivers.clone(), ExecMode::default())?.solve_forward(source)
}

/// One-shot forward-time point-source solve recording value and gradient
/// at `query`.
pub fn record_field_at(
    model: &VelocityModel,
    inject_at: Point,
    series: &[f64],
    cfg: &SimConfig,
    query: Point,
) -> Result<FieldHistory> {
    let dummy = ReceiverArray::from_positions(vec![query]);
    FdEngine::new(model, cfg.clone(), dummy, ExecMode::default())?
        .record_field_at(inject_at, series, query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid2D;

    fn small_box(pml: usize) -> (VelocityModel, SimConfig, ReceiverArray) {
        let grid = Grid2D::new(0.0, -5.0, 41, 21, 0.25);
        let cfg = SimConfig::derived(grid, 6.0, 0.4, 2.0).with_pml(pml, 1e-6);
        let recs = ReceiverArray::from_positions(vec![
            Point::new(4.0, 0.0),
            Point::new(6.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(8.0, 0.0),
        ]);
        (VelocityModel::Constant { c0: 2.0 }, cfg, recs)
    }

    fn centered_source() -> SourceParams {
        SourceParams::new(Point::new(5.0, -2.5), 1.0, 1.5, 1.0)
    }

    #[test]
    fn mirror_symmetric_receivers_record_identical_traces() {
        let (model, cfg, recs) = small_box(0);
        let engine = FdEngine::new(&model, cfg, recs, ExecMode::Sequential).unwrap();
        let set = engine.solve_forward(&centered_source()).unwrap();
        let scale = set.trace(1).samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(scale > 0.0, "wave never reached the receivers");
        for (a, b) in [(1, 2), (3, 4)] {
            for i in 0..set.nt() {
                let (x, y) = (set.trace(a).samples[i], set.trace(b).samples[i]);
                assert!((x - y).abs() <= 1e-12 * scale, "asymmetry at trace {a}/{b} sample {i}");
            }
        }
    }

    #[test]
    fn parallel_and_sequential_paths_agree() {
        let (model, cfg, recs) = small_box(8);
        let seq = FdEngine::new(&model, cfg.clone(), recs.clone(), ExecMode::Sequential)
            .unwrap()
            .solve_forward(&centered_source())
            .unwrap();
        let par = FdEngine::new(&model, cfg, recs, ExecMode::Parallel)
            .unwrap()
            .solve_forward(&centered_source())
            .unwrap();
        for r in 1..=4 {
            assert_eq!(seq.trace(r).samples, par.trace(r).samples);
        }
    }

    #[test]
    fn reflecting_box_conserves_energy_after_the_source_stops() {
        let (model, cfg, recs) = small_box(0);
        let engine = FdEngine::new(&model, cfg, recs, ExecMode::Sequential).unwrap();
        let e = engine.energy_history(&centered_source()).unwrap();
        // source is quiet after t = tau + 2.5 / f0 = 2.67 s, step 54
        let tail = &e[60..];
        let (lo, hi) = tail
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        assert!(hi > 0.0);
        assert!((hi - lo) / hi < 1e-9, "energy drifted: {lo} .. {hi}");
    }

    #[test]
    fn absorbing_pads_swallow_the_outgoing_wave() {
        let grid = Grid2D::new(0.0, -5.0, 41, 21, 0.25);
        let cfg = SimConfig::derived(grid, 12.0, 0.4, 2.0).with_pml(12, 1e-6);
        let recs = ReceiverArray::from_positions(vec![Point::new(4.0, 0.0)]);
        let model = VelocityModel::Constant { c0: 2.0 };
        let engine = FdEngine::new(&model, cfg, recs, ExecMode::Sequential).unwrap();
        let set = engine.solve_forward(&centered_source()).unwrap();
        let s = &set.trace(1).samples;
        let peak = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tail = s[(s.len() * 3) / 4..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak > 0.0);
        assert!(tail < 0.02 * peak, "tail {tail:e} vs peak {peak:e}");
    }

    #[test]
    fn reversed_time_history_only_sees_later_input() {
        let (model, cfg, recs) = small_box(8);
        let engine = FdEngine::new(&model, cfg, recs, ExecMode::Sequential).unwrap();
        let nt = engine.nt();
        let mut injected = vec![0.0; nt];
        injected[60] = 1.0;
        let w = engine.adjoint_history(1, &injected, Point::new(5.0, -2.5)).unwrap();
        let peak = w.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak > 0.0, "reversed field never reached the query point");
        for i in 60..nt {
            assert_eq!(w.values[i], 0.0, "acausal leak at sample {i}");
            assert_eq!(w.grad_x[i], 0.0);
            assert_eq!(w.grad_z[i], 0.0);
        }
    }

    #[test]
    fn both_spatial_orders_run_and_roughly_agree() {
        // ten nodes per dominant wavelength, otherwise the two orders
        // legitimately drift apart through dispersion
        let grid = Grid2D::new(0.0, -5.0, 81, 41, 0.125);
        let cfg = SimConfig::derived(grid, 6.0, 0.4, 2.0).with_pml(8, 1e-6);
        let recs = ReceiverArray::from_positions(vec![Point::new(4.0, 0.0)]);
        let model = VelocityModel::Constant { c0: 2.0 };
        let six = FdEngine::new(&model, cfg.clone(), recs.clone(), ExecMode::Sequential)
            .unwrap()
            .solve_forward(&centered_source())
            .unwrap();
        let four = FdEngine::new(
            &model,
            cfg.with_spatial_order(SpatialOrder::Four),
            recs,
            ExecMode::Sequential,
        )
        .unwrap()
        .solve_forward(&centered_source())
        .unwrap();
        let scale = six.trace(1).samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let maxdiff = six
            .trace(1)
            .samples
            .iter()
            .zip(&four.trace(1).samples)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(maxdiff < 0.05 * scale, "orders disagree: {maxdiff:e} vs scale {scale:e}");
    }
}
