//! Receiver geometry. Station indices are 1-based everywhere: station r
//! of an array with n stations satisfies 1 <= r <= n, matching the way
//! field deployments and the output files number their channels.

use super::grid::Point;

#[derive(Clone, Debug)]
pub struct ReceiverArray {
    positions: Vec<Point>,
}

impl ReceiverArray {
    pub fn from_positions(positions: Vec<Point>) -> Self {
        assert!(!positions.is_empty(), "receiver array cannot be empty");
        Self { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of station `r` (1-based).
    pub fn position(&self, r: usize) -> Point {
        assert!(r >= 1 && r <= self.positions.len(), "station index {r} out of range");
        self.positions[r - 1]
    }

    /// Iterate as (r, position) with 1-based r.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Point)> + '_ {
        self.positions.iter().enumerate().map(|(i, p)| (i + 1, *p))
    }
}

/// Evenly spaced surface stations at ((r - 0.5) * spacing, 0).
pub fn default_receivers(count: usize, spacing: f64) -> ReceiverArray {
    assert!(count >= 1 && spacing > 0.0);
    ReceiverArray::from_positions(
        (1..=count)
            .map(|r| Point::new((r as f64 - 0.5) * spacing, 0.0))
            .collect(),
    )
}
