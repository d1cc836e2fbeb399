//! Points, axis-aligned boxes, and the uniform simulation grid.
//!
//! Coordinates are in km. The free surface sits at z = 0 and the interior
//! of the earth has z < 0, so "deeper" means more negative z.

/// A position in the vertical (x, z) plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub z: f64,
}

impl Point {
    pub fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.z - other.z)
    }
}

/// Closed axis-aligned box [x0, x1] x [z0, z1] with z0 < z1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub z1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, z0: f64, z1: f64) -> Self {
        assert!(x1 > x0 && z1 > z0, "empty rectangle");
        Self { x0, x1, z0, z1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.z1 - self.z0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.z >= self.z0 && p.z <= self.z1
    }

    /// Nearest point of the box to `p`.
    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(self.x0, self.x1), p.z.clamp(self.z0, self.z1))
    }
}

/// Uniform grid over a rectangular domain. Node (i, j) sits at
/// (x0 + i*h, z0 + j*h); j rows run upward from the bottom of the domain
/// toward the surface.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    pub x0: f64,
    pub z0: f64,
    pub nx: usize,
    pub nz: usize,
    pub h: f64,
}

impl Grid2D {
    pub fn new(x0: f64, z0: f64, nx: usize, nz: usize, h: f64) -> Self {
        assert!(nx >= 3 && nz >= 3, "grid needs at least 3 nodes per axis");
        assert!(h > 0.0, "grid spacing must be positive");
        Self { x0, z0, nx, nz, h }
    }

    /// Grid covering `rect` with spacing `h`; the extents must be (close
    /// to) integer multiples of `h` so nodes land on the boundary.
    pub fn covering(rect: Rect, h: f64) -> Self {
        let nx = (rect.width() / h).round() as usize + 1;
        let nz = (rect.height() / h).round() as usize + 1;
        let g = Self::new(rect.x0, rect.z0, nx, nz, h);
        assert!(
            (g.x(nx - 1) - rect.x1).abs() < 1e-9 * h && (g.z(nz - 1) - rect.z1).abs() < 1e-9 * h,
            "domain extents are not multiples of the grid spacing"
        );
        g
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z0 + j as f64 * self.h
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.nz);
        j * self.nx + i
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn extent(&self) -> Rect {
        Rect::new(self.x0, self.x(self.nx - 1), self.z0, self.z(self.nz - 1))
    }

    /// Bilinear interpolation of node values stored row-major (j outer).
    /// Points outside the grid are clamped onto it first.
    pub fn sample(&self, values: &[f64], p: Point) -> f64 {
        assert_eq!(values.len(), self.len(), "value buffer does not match grid");
        let fx = ((p.x - self.x0) / self.h).clamp(0.0, (self.nx - 1) as f64);
        let fz = ((p.z - self.z0) / self.h).clamp(0.0, (self.nz - 1) as f64);
        let i = (fx as usize).min(self.nx - 2);
        let j = (fz as usize).min(self.nz - 2);
        let ax = fx - i as f64;
        let az = fz - j as f64;
        let v00 = values[self.idx(i, j)];
        let v10 = values[self.idx(i + 1, j)];
        let v01 = values[self.idx(i, j + 1)];
        let v11 = values[self.idx(i + 1, j + 1)];
        (1.0 - ax) * (1.0 - az) * v00 + ax * (1.0 - az) * v10 + (1.0 - ax) * az * v01 + ax * az * v11
    }
}
