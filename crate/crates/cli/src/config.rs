//! Experiment configuration: a nested key-value file with units spelled
//! out in the key names (`tau_s`, `f0_hz`, `h_km`). Parsing reports the
//! offending line; semantic checks report the offending key.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use hypoloc::locator::{KernelStrategy, LocateOptions, Mode};
use hypoloc::model::{
    Grid2D, Point, Rect, ReceiverArray, SimConfig, SourceParams, TopBoundary, VelocityModel,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: ModelSec,
    pub source: SourceSec,
    pub receivers: ReceiverSec,
    pub grid: Option<GridSec>,
    pub time: TimeSec,
    #[serde(default)]
    pub boundary: BoundarySec,
    #[serde(default)]
    pub locate: LocateSec,
    pub scan: Option<ScanSec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSec {
    pub kind: ModelKind,
    pub c0_km_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Constant,
    TwoLayerDeep,
    TwoLayerShallow,
    Subduction,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSec {
    pub x_km: f64,
    pub z_km: f64,
    pub tau_s: f64,
    pub f0_hz: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

/// Either a regular surface array (`count` stations every `spacing_km`,
/// centered pattern x_r = (r - 1/2) spacing) or explicit `x_km` positions
/// on the surface.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSec {
    pub count: Option<usize>,
    pub spacing_km: Option<f64>,
    pub x_km: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSec {
    pub x0_km: f64,
    pub z0_km: f64,
    pub nx: usize,
    pub nz: usize,
    pub h_km: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSec {
    pub record_s: f64,
    pub dt_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySec {
    pub pml_nodes: usize,
    pub pml_reflectivity: f64,
    pub top: TopKind,
}

impl Default for BoundarySec {
    fn default() -> Self {
        Self { pml_nodes: 40, pml_reflectivity: 1e-6, top: TopKind::Free }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopKind {
    Free,
    Absorbing,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocateSec {
    pub mode: ModeKind,
    pub engine: EngineKind,
    pub epsilon_km: f64,
    pub sigma_km: f64,
    pub max_iters: usize,
    pub subset_size: usize,
    pub tau0_s: f64,
    /// 0 scans every overlapping shift.
    pub scan_half_width_s: f64,
    pub kernels: KernelKind,
    pub x0_km: Option<f64>,
    pub z0_km: Option<f64>,
    /// Admissible rectangle [x0, x1, z0, z1] for iterates.
    pub clamp_km: Option<[f64; 4]>,
}

impl Default for LocateSec {
    fn default() -> Self {
        let d = LocateOptions::default();
        Self {
            mode: ModeKind::New,
            engine: EngineKind::Auto,
            epsilon_km: d.epsilon,
            sigma_km: d.sigma,
            max_iters: d.max_iters,
            subset_size: d.subset_size,
            tau0_s: d.tau0,
            scan_half_width_s: 0.0,
            kernels: KernelKind::Forward,
            x0_km: None,
            z0_km: None,
            clamp_km: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    New,
    Conventional,
}

impl From<ModeKind> for Mode {
    fn from(m: ModeKind) -> Mode {
        match m {
            ModeKind::New => Mode::New,
            ModeKind::Conventional => Mode::Conventional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    /// Closed-form solver for constant models, grid solver otherwise.
    Auto,
    Analytic,
    Grid,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Forward,
    Adjoint,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSec {
    pub x0_km: f64,
    pub x1_km: f64,
    pub z0_km: f64,
    pub z1_km: f64,
    pub nx: usize,
    pub nz: usize,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: FileConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.model.kind == ModelKind::Constant && self.model.c0_km_s.is_none() {
            bail!("model.c0_km_s is required when model.kind = \"constant\"");
        }
        if let Some(c0) = self.model.c0_km_s {
            if !(c0 > 0.0) {
                bail!("model.c0_km_s must be positive, got {c0}");
            }
            if self.model.kind != ModelKind::Constant {
                bail!("model.c0_km_s only applies to model.kind = \"constant\"");
            }
        }
        if !(self.source.f0_hz > 0.0) {
            bail!("source.f0_hz must be positive, got {}", self.source.f0_hz);
        }
        if self.source.z_km > 0.0 {
            bail!("source.z_km must not sit above the surface, got {}", self.source.z_km);
        }
        match (&self.receivers.count, &self.receivers.spacing_km, &self.receivers.x_km) {
            (Some(c), Some(s), None) => {
                if *c == 0 {
                    bail!("receivers.count must be at least 1");
                }
                if !(*s > 0.0) {
                    bail!("receivers.spacing_km must be positive, got {s}");
                }
            }
            (None, None, Some(xs)) => {
                if xs.is_empty() {
                    bail!("receivers.x_km must list at least one station");
                }
            }
            _ => bail!(
                "receivers needs either count + spacing_km or an explicit x_km list, not a mix"
            ),
        }
        if let Some(g) = &self.grid {
            if g.nx < 3 || g.nz < 3 {
                bail!("grid.nx and grid.nz must be at least 3, got {} x {}", g.nx, g.nz);
            }
            if !(g.h_km > 0.0) {
                bail!("grid.h_km must be positive, got {}", g.h_km);
            }
        }
        if !(self.time.record_s > 0.0) {
            bail!("time.record_s must be positive, got {}", self.time.record_s);
        }
        if !(self.time.dt_s > 0.0) {
            bail!("time.dt_s must be positive, got {}", self.time.dt_s);
        }
        if !(self.boundary.pml_reflectivity > 0.0 && self.boundary.pml_reflectivity < 1.0) {
            bail!(
                "boundary.pml_reflectivity must lie in (0, 1), got {}",
                self.boundary.pml_reflectivity
            );
        }
        let l = &self.locate;
        if !(l.epsilon_km > 0.0) {
            bail!("locate.epsilon_km must be positive, got {}", l.epsilon_km);
        }
        if !(l.sigma_km > l.epsilon_km) {
            bail!(
                "locate.sigma_km must exceed epsilon_km, got sigma {} epsilon {}",
                l.sigma_km,
                l.epsilon_km
            );
        }
        if l.max_iters == 0 {
            bail!("locate.max_iters must be at least 1");
        }
        if l.subset_size == 0 || l.subset_size > self.receiver_count() {
            bail!(
                "locate.subset_size must lie in 1..={} stations, got {}",
                self.receiver_count(),
                l.subset_size
            );
        }
        if l.scan_half_width_s < 0.0 {
            bail!("locate.scan_half_width_s must not be negative, got {}", l.scan_half_width_s);
        }
        if let Some([x0, x1, z0, z1]) = l.clamp_km {
            if x1 <= x0 || z1 <= z0 {
                bail!("locate.clamp_km must be [x0, x1, z0, z1] with x0 < x1 and z0 < z1");
            }
        }
        if self.needs_grid_engine() && self.grid.is_none() {
            bail!(
                "a [grid] section is required: the {} model runs on the grid solver",
                match self.model.kind {
                    ModelKind::Constant => "engine = \"grid\" setting with a constant",
                    ModelKind::TwoLayerDeep => "two_layer_deep",
                    ModelKind::TwoLayerShallow => "two_layer_shallow",
                    ModelKind::Subduction => "subduction",
                }
            );
        }
        if let Some(s) = &self.scan {
            if s.nx < 1 || s.nz < 1 {
                bail!("scan.nx and scan.nz must be at least 1, got {} x {}", s.nx, s.nz);
            }
            if s.x1_km <= s.x0_km || s.z1_km <= s.z0_km {
                bail!("scan rectangle must have x0 < x1 and z0 < z1");
            }
            if s.z1_km > 0.0 {
                bail!("scan.z1_km must not rise above the surface, got {}", s.z1_km);
            }
            if let Some(g) = &self.grid {
                let ext = self.grid_struct(g).extent();
                let inside = ext.contains(Point::new(s.x0_km, s.z0_km))
                    && ext.contains(Point::new(s.x1_km, s.z1_km));
                if self.needs_grid_engine() && !inside {
                    bail!(
                        "scan rectangle [{}, {}] x [{}, {}] leaves the grid extent",
                        s.x0_km,
                        s.x1_km,
                        s.z0_km,
                        s.z1_km
                    );
                }
            }
        }
        Ok(())
    }

    pub fn receiver_count(&self) -> usize {
        match (&self.receivers.count, &self.receivers.x_km) {
            (Some(c), _) => *c,
            (None, Some(xs)) => xs.len(),
            _ => 0,
        }
    }

    pub fn needs_grid_engine(&self) -> bool {
        match self.locate.engine {
            EngineKind::Grid => true,
            EngineKind::Analytic => false,
            EngineKind::Auto => self.model.kind != ModelKind::Constant,
        }
    }

    pub fn velocity_model(&self) -> VelocityModel {
        match self.model.kind {
            ModelKind::Constant => {
                VelocityModel::Constant { c0: self.model.c0_km_s.expect("validated") }
            }
            ModelKind::TwoLayerDeep => VelocityModel::TwoLayerDeep,
            ModelKind::TwoLayerShallow => VelocityModel::TwoLayerShallow,
            ModelKind::Subduction => VelocityModel::Subduction,
        }
    }

    pub fn truth(&self) -> SourceParams {
        SourceParams {
            xi: Point::new(self.source.x_km, self.source.z_km),
            tau: self.source.tau_s,
            f0: self.source.f0_hz,
            a: self.source.amplitude,
        }
    }

    pub fn receiver_array(&self) -> ReceiverArray {
        match (&self.receivers.count, &self.receivers.spacing_km, &self.receivers.x_km) {
            (Some(c), Some(s), None) => hypoloc::model::default_receivers(*c, *s),
            (None, None, Some(xs)) => {
                ReceiverArray::from_positions(xs.iter().map(|&x| Point::new(x, 0.0)).collect())
            }
            _ => unreachable!("validated"),
        }
    }

    fn grid_struct(&self, g: &GridSec) -> Grid2D {
        Grid2D::new(g.x0_km, g.z0_km, g.nx, g.nz, g.h_km)
    }

    /// Grid-solver configuration; requires a [grid] section. Checks the
    /// Courant number against the model's top speed here so an unstable
    /// dt reads as a config error, not an engine panic.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let g = self.grid.as_ref().context("a [grid] section is required for the grid solver")?;
        let grid = self.grid_struct(g);
        let (_, c_max) = self.velocity_model().speed_range(grid.extent(), g.h_km);
        let cfl = self.time.dt_s * c_max / g.h_km;
        let cfg = SimConfig {
            grid,
            record_length: self.time.record_s,
            dt: self.time.dt_s,
            cfl,
            pml_width: self.boundary.pml_nodes,
            pml_reflectivity: self.boundary.pml_reflectivity,
            top_boundary: match self.boundary.top {
                TopKind::Free => TopBoundary::FreeSurface,
                TopKind::Absorbing => TopBoundary::Absorbing,
            },
            spatial_order: Default::default(),
        };
        if cfl > cfg.spatial_order.cfl_limit() {
            bail!(
                "time.dt_s = {} is unstable on this grid: Courant number {cfl:.3} exceeds {}",
                self.time.dt_s,
                cfg.spatial_order.cfl_limit()
            );
        }
        Ok(cfg)
    }

    pub fn nt(&self) -> usize {
        (self.time.record_s / self.time.dt_s).floor() as usize + 1
    }

    pub fn locate_options(&self) -> LocateOptions {
        let l = &self.locate;
        LocateOptions {
            mode: l.mode.into(),
            epsilon: l.epsilon_km,
            sigma: l.sigma_km,
            max_iters: l.max_iters,
            subset_size: l.subset_size,
            tau0: l.tau0_s,
            scan_half_width: if l.scan_half_width_s > 0.0 {
                Some(l.scan_half_width_s)
            } else {
                None
            },
            kernels: match l.kernels {
                KernelKind::Forward => KernelStrategy::ForwardGradient,
                KernelKind::Adjoint => KernelStrategy::Adjoint,
            },
            clamp: l.clamp_km.map(|[x0, x1, z0, z1]| Rect::new(x0, x1, z0, z1)),
            ..LocateOptions::default()
        }
    }

    pub fn scan_spec(&self) -> Result<(Rect, usize, usize)> {
        let s = self.scan.as_ref().context("a [scan] section is required for map runs")?;
        Ok((Rect::new(s.x0_km, s.x1_km, s.z0_km, s.z1_km), s.nx, s.nz))
    }
}
