//! Convergence-domain scans: run the locator from every node of a
//! start-point lattice and record which starts actually reach the
//! source. The scanned rectangle times the converged fraction estimates
//! the basin area, and the largest lattice rectangle whose nodes all
//! converged gives a conservative inscribed region.

use crate::exec::{map_indexed, ExecMode};
use crate::locator::{locate, LocateOptions, Status};
use crate::model::{Point, Rect, SourceParams};
use crate::wave::{Propagator, SeismogramSet};
use crate::Result;

/// One lattice start and what became of it.
#[derive(Clone, Copy, Debug)]
pub struct MapNode {
    pub start: Point,
    pub status: Status,
    pub iterations: usize,
    pub final_xi: Point,
    pub final_tau: f64,
    /// Converged and landed within the classification radius of the
    /// reference source.
    pub reached_source: bool,
}

/// Outcome of scanning a rectangle of initial hypocenters on an
/// `nx` by `nz` lattice. Nodes are stored x-fastest, bottom row first.
#[derive(Clone, Debug)]
pub struct ConvergenceMap {
    pub scan: Rect,
    pub nx: usize,
    pub nz: usize,
    /// Classification radius (km) used for `reached_source`.
    pub tolerance: f64,
    pub nodes: Vec<MapNode>,
}

/// Axis-aligned block of lattice nodes, by its corner coordinates. A
/// single row or column collapses one extent to zero, which is still a
/// valid block of nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeBlock {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub z1: f64,
    pub nodes: usize,
}

/// Lattice coordinate along one axis: interior-inclusive endpoints, or
/// the midpoint when a single node is requested.
fn lattice_coord(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

impl ConvergenceMap {
    pub fn total(&self) -> usize {
        self.nodes.len()
    }

    pub fn converged(&self) -> usize {
        self.nodes.iter().filter(|n| n.reached_source).count()
    }

    /// Scanned-rectangle area scaled by the converged fraction.
    pub fn area_estimate(&self) -> f64 {
        let r = &self.scan;
        let area = (r.x1 - r.x0) * (r.z1 - r.z0);
        area * self.converged() as f64 / self.total() as f64
    }

    fn reached(&self, ix: usize, iz: usize) -> bool {
        self.nodes[iz * self.nx + ix].reached_source
    }

    /// Largest axis-aligned lattice rectangle whose nodes all reached the
    /// source: the corner coordinates and the node count inside. None when
    /// nothing converged. Ties go to the rectangle found first scanning
    /// bottom row up.
    pub fn largest_rectangle(&self) -> Option<LatticeBlock> {
        // classic histogram sweep: per column, the run of converged nodes
        // ending at the current row; per row, the best rectangle in that
        // histogram by a monotone stack
        let mut heights = vec![0usize; self.nx];
        let mut best: Option<(usize, usize, usize, usize, usize)> = None; // nodes, ix0, ix1, iz0, iz1
        for iz in 0..self.nz {
            for (ix, h) in heights.iter_mut().enumerate() {
                *h = if self.reached(ix, iz) { *h + 1 } else { 0 };
            }
            let mut stack: Vec<usize> = Vec::new();
            for ix in 0..=self.nx {
                let h = if ix < self.nx { heights[ix] } else { 0 };
                while let Some(&top) = stack.last() {
                    if heights[top] <= h {
                        break;
                    }
                    stack.pop();
                    let height = heights[top];
                    let left = stack.last().map_or(0, |&p| p + 1);
                    let nodes = height * (ix - left);
                    if nodes > best.map_or(0, |b| b.0) {
                        best = Some((nodes, left, ix - 1, iz + 1 - height, iz));
                    }
                }
                stack.push(ix);
            }
        }
        best.map(|(nodes, ix0, ix1, iz0, iz1)| {
            let r = &self.scan;
            LatticeBlock {
                x0: lattice_coord(r.x0, r.x1, self.nx, ix0),
                x1: lattice_coord(r.x0, r.x1, self.nx, ix1),
                z0: lattice_coord(r.z0, r.z1, self.nz, iz0),
                z1: lattice_coord(r.z0, r.z1, self.nz, iz1),
                nodes,
            }
        })
    }
}

/// Runs the locator from every node of the lattice over `scan` and
/// classifies each run against `truth`. Node runs are independent; the
/// outer sweep parallelizes over nodes while each inner location runs
/// sequentially.
pub fn map_convergence<P: Propagator + ?Sized>(
    engine: &P,
    observed: &SeismogramSet,
    pulse: &SourceParams,
    truth: Point,
    scan: Rect,
    nx: usize,
    nz: usize,
    opts: &LocateOptions,
    exec: ExecMode,
) -> Result<ConvergenceMap> {
    assert!(nx >= 1 && nz >= 1, "lattice needs at least one node per axis");
    let tolerance = 10.0 * opts.epsilon;
    let node_opts = LocateOptions { exec: ExecMode::Sequential, ..*opts };
    let nodes = map_indexed(exec, nx * nz, |idx| {
        let (ix, iz) = (idx % nx, idx / nx);
        let start = Point::new(
            lattice_coord(scan.x0, scan.x1, nx, ix),
            lattice_coord(scan.z0, scan.z1, nz, iz),
        );
        let res = locate(engine, observed, pulse, start, &node_opts)?;
        let reached = res.status == Status::Converged
            && res.final_xi.distance(&truth) < tolerance;
        Ok(MapNode {
            start,
            status: res.status,
            iterations: res.iterations,
            final_xi: res.final_xi,
            final_tau: res.final_tau,
            reached_source: reached,
        })
    });
    let nodes = nodes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceMap { scan, nx, nz, tolerance, nodes })
}
