//! Velocity fields: closed-form layered models and sampled grids.

use super::grid::{Grid2D, Point, Rect};
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Wave-speed field c(x, z) in km/s.
///
/// The closed-form variants describe a crust whose speed grows with depth
/// over a faster half-space (`TwoLayerDeep`, `TwoLayerShallow`, differing
/// in interface depth and contrast) and a crust/mantle structure with an
/// undulated Moho and a subducting slab (`Subduction`).
#[derive(Clone, Debug)]
pub enum VelocityModel {
    Constant { c0: f64 },
    TwoLayerDeep,
    TwoLayerShallow,
    Subduction,
    Sampled { grid: Grid2D, values: Vec<f64> },
}

impl VelocityModel {
    /// Domain on which the model is defined; `None` for `Constant`,
    /// which extends over the whole half-plane.
    pub fn natural_domain(&self) -> Option<Rect> {
        match self {
            VelocityModel::Constant { .. } => None,
            VelocityModel::TwoLayerDeep | VelocityModel::TwoLayerShallow => {
                Some(Rect::new(0.0, 100.0, -40.0, 0.0))
            }
            VelocityModel::Subduction => Some(Rect::new(0.0, 200.0, -200.0, 0.0)),
            VelocityModel::Sampled { grid, .. } => Some(grid.extent()),
        }
    }

    /// Speed at (x, z); errors on points outside the model's domain.
    pub fn velocity_at(&self, x: f64, z: f64) -> Result<f64> {
        if let Some(dom) = self.natural_domain() {
            if !dom.contains(Point::new(x, z)) {
                return Err(Error::config(format!("point ({x}, {z}) outside model domain")));
            }
        }
        Ok(self.eval_clamped(x, z))
    }

    /// Speed at the domain point nearest to (x, z). Total function; the
    /// propagation engines use it to extend the field into boundary pads.
    pub fn eval_clamped(&self, x: f64, z: f64) -> f64 {
        let (x, z) = match self.natural_domain() {
            Some(dom) => {
                let p = dom.clamp(Point::new(x, z));
                (p.x, p.z)
            }
            None => (x, z),
        };
        match self {
            VelocityModel::Constant { c0 } => *c0,
            VelocityModel::TwoLayerDeep => {
                let s = 0.2 * (PI * x / 25.0).sin();
                if z >= -15.0 {
                    5.2 - 0.06 * z + s
                } else {
                    6.2 + s
                }
            }
            VelocityModel::TwoLayerShallow => {
                let s = 0.2 * (PI * x / 25.0).sin();
                if z >= -20.0 {
                    5.2 - 0.05 * z + s
                } else {
                    6.8 + s
                }
            }
            VelocityModel::Subduction => {
                let moho = -33.0 - 2.5 * (PI * x / 40.0).sin();
                if z >= moho {
                    5.5
                } else if z >= -45.0 - 0.4 * x {
                    7.8
                } else if z >= -60.0 - 0.4 * x {
                    7.488
                } else if z >= -100.0 - 0.4 * x {
                    8.268
                } else {
                    7.8
                }
            }
            VelocityModel::Sampled { grid, values } => grid.sample(values, Point::new(x, z)),
        }
    }

    /// Extremes of the speed over `rect`, by dense sampling at `step`.
    pub fn speed_range(&self, rect: Rect, step: f64) -> (f64, f64) {
        assert!(step > 0.0);
        let nx = (rect.width() / step).ceil() as usize + 1;
        let nz = (rect.height() / step).ceil() as usize + 1;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..nz {
            let z = (rect.z0 + j as f64 * step).min(rect.z1);
            for i in 0..nx {
                let x = (rect.x0 + i as f64 * step).min(rect.x1);
                let c = self.eval_clamped(x, z);
                assert!(c > 0.0, "nonpositive speed at ({x}, {z})");
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        (lo, hi)
    }
}
