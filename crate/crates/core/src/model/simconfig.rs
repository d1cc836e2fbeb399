//! Simulation configuration: grid, record length, time stepping, and
//! boundary treatment.

use super::grid::Grid2D;

/// Treatment of the z = 0 edge of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TopBoundary {
    /// Reflecting free surface (the physical earth surface).
    #[default]
    FreeSurface,
    /// Absorbing pad, for comparisons against free-space solutions.
    Absorbing,
}

/// Spatial accuracy of the interior stencil.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SpatialOrder {
    Four,
    #[default]
    Six,
}

impl SpatialOrder {
    /// Ghost nodes needed on each side of the physical domain.
    pub fn ghost(self) -> usize {
        match self {
            SpatialOrder::Four => 3,
            SpatialOrder::Six => 5,
        }
    }

    /// 2D stability bound on c*dt/h for the staggered-flux stencil, with
    /// a safety margin.
    pub fn cfl_limit(self) -> f64 {
        match self {
            SpatialOrder::Four => 0.55,
            SpatialOrder::Six => 0.52,
        }
    }
}

/// Everything a propagation engine needs besides the velocity model and
/// the source: the physical-domain grid, the record window, the time
/// step, and how the edges behave.
#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Grid over the physical domain; absorbing pads are added outside
    /// of it by the engine and never appear in outputs.
    pub grid: Grid2D,
    /// Record length T (s); seismograms cover t in [0, T].
    pub record_length: f64,
    /// Time step (s).
    pub dt: f64,
    /// Courant number actually used to derive `dt`.
    pub cfl: f64,
    /// Absorbing-layer thickness in nodes on the left, right, and bottom
    /// edges; 0 turns every edge into a reflecting wall.
    pub pml_width: usize,
    /// Target amplitude reflection coefficient of the absorbing layer.
    pub pml_reflectivity: f64,
    pub top_boundary: TopBoundary,
    pub spatial_order: SpatialOrder,
}

impl SimConfig {
    /// Build a config with `dt` derived from the Courant condition
    /// dt = cfl * h / c_max.
    pub fn derived(grid: Grid2D, record_length: f64, cfl: f64, c_max: f64) -> Self {
        assert!(record_length > 0.0 && c_max > 0.0);
        assert!(cfl > 0.0 && cfl <= 0.5, "Courant number must lie in (0, 0.5]");
        let dt = cfl * grid.h / c_max;
        Self {
            grid,
            record_length,
            dt,
            cfl,
            pml_width: 40,
            pml_reflectivity: 1e-6,
            top_boundary: TopBoundary::default(),
            spatial_order: SpatialOrder::default(),
        }
    }

    pub fn with_pml(mut self, width: usize, reflectivity: f64) -> Self {
        assert!(reflectivity > 0.0 && reflectivity < 1.0);
        self.pml_width = width;
        self.pml_reflectivity = reflectivity;
        self
    }

    pub fn with_top_boundary(mut self, top: TopBoundary) -> Self {
        self.top_boundary = top;
        self
    }

    pub fn with_spatial_order(mut self, order: SpatialOrder) -> Self {
        self.spatial_order = order;
        self
    }

    /// Number of time samples covering [0, T].
    pub fn nt(&self) -> usize {
        (self.record_length / self.dt).floor() as usize + 1
    }

    /// Panics unless dt satisfies the stability bound for `c_max`.
    pub fn assert_stable(&self, c_max: f64) {
        let limit = self.spatial_order.cfl_limit() * self.grid.h / c_max;
        assert!(
            self.dt <= limit * (1.0 + 1e-12),
            "dt = {} exceeds the stability bound {} for c_max = {}",
            self.dt,
            limit,
            c_max
        );
    }
}
