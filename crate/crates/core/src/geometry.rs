//! Ground-plane geometry. All coordinates are meters.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// A point on the ground plane (x east, y north).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        horizontal_distance(*self, *other)
    }
}

/// Euclidean distance between two points on the ground plane.
pub fn horizontal_distance(a: Position, b: Position) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    libm::sqrt(dx * dx + dy * dy)
}

/// Closed disk, used for town regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Position,
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, p: Position) -> bool {
        horizontal_distance(self.center, p) <= self.radius
    }

    pub fn overlaps(&self, other: &Disk) -> bool {
        horizontal_distance(self.center, other.center) <= self.radius + other.radius
    }

    /// Uniform sample over the disk area.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        let r = self.radius * libm::sqrt(rng.gen::<f64>());
        let theta = core::f64::consts::TAU * rng.gen::<f64>();
        Position::new(
            self.center.x + r * libm::cos(theta),
            self.center.y + r * libm::sin(theta),
        )
    }
}
