//! Domain geometry, velocity fields, source and receiver descriptions.

mod delta;
mod grid;
mod receivers;
mod simconfig;
mod source;
mod velocity;

pub use delta::discrete_delta_1d;
pub use grid::{Grid2D, Point, Rect};
pub use receivers::{default_receivers, ReceiverArray};
pub use simconfig::{SimConfig, SpatialOrder, TopBoundary};
pub use source::{ricker, ricker_derivative, SourceParams};
pub use velocity::VelocityModel;
