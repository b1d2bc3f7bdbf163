//! Local ENU geometry shared by the world, the planners and the scorers.
//!
//! Coordinates are meters: x east, y north, z altitude above ground.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn horizontal(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn horizontal_distance(&self, other: &Vec3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        let dz = self.z - other.z;
        (self.horizontal_distance(other).powi(2) + dz * dz).sqrt()
    }
}

/// Axis-aligned rectangle anchored at its south-west corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub origin: Point2,
    pub width: f64,
    pub height: f64,
}

impl Region {
    pub const fn new(origin: Point2, width: f64, height: f64) -> Self {
        Self {
            origin,
            width,
            height,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.width.is_finite()
            && self.height.is_finite()
            && self.width > 0.0
            && self.height > 0.0
            && self.origin.x.is_finite()
            && self.origin.y.is_finite()
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            self.origin.x + self.width / 2.0,
            self.origin.y + self.height / 2.0,
        )
    }

    /// Open-interior test: points on the boundary are outside.
    pub fn contains_strictly(&self, p: Point2) -> bool {
        p.x > self.origin.x
            && p.x < self.origin.x + self.width
            && p.y > self.origin.y
            && p.y < self.origin.y + self.height
    }
}

/// A planner target: horizontal position plus altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub x: f64,
    pub y: f64,
    pub alt: f64,
}

impl Slot {
    pub const fn new(x: f64, y: f64, alt: f64) -> Self {
        Self { x, y, alt }
    }

    pub fn as_vec3(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.alt)
    }
}
