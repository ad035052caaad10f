//! Points, tangents, and the small amount of metric structure the lab needs.
//!
//! Every model chart fits in four coordinates, so points and tangents are
//! fixed-size arrays. The background metric used for matching distances and
//! Lipschitz estimates is chart-Euclidean on T3/STR2/J1S1 (with periodic
//! wrapping where a coordinate is an angle) and the round ambient metric on
//! the 3-sphere. Nothing here depends on that choice except error constants.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// A point in model coordinates. Unused trailing slots stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point(pub [f64; 4]);

/// A tangent vector in the same chart as its base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tangent(pub [f64; 4]);

impl Point {
    pub const ZERO: Point = Point([0.0; 4]);

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Point {
        Point([self.0[0] * s, self.0[1] * s, self.0[2] * s, self.0[3] * s])
    }

    pub fn add(&self, t: &Tangent, h: f64) -> Point {
        Point([
            self.0[0] + h * t.0[0],
            self.0[1] + h * t.0[1],
            self.0[2] + h * t.0[2],
            self.0[3] + h * t.0[3],
        ])
    }
}

impl Tangent {
    pub const ZERO: Tangent = Tangent([0.0; 4]);

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Tangent) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, s: f64) -> Tangent {
        Tangent([self.0[0] * s, self.0[1] * s, self.0[2] * s, self.0[3] * s])
    }

    pub fn add(&self, other: &Tangent) -> Tangent {
        Tangent([
            self.0[0] + other.0[0],
            self.0[1] + other.0[1],
            self.0[2] + other.0[2],
            self.0[3] + other.0[3],
        ])
    }
}

/// Wrap an angle into [0, 2pi).
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % TAU;
    if r < 0.0 {
        r += TAU;
    }
    // The remainder can land exactly on TAU after the correction.
    if r >= TAU {
        r -= TAU;
    }
    r
}

/// Signed distance between two angles, in (-pi, pi].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % TAU;
    if d > std::f64::consts::PI {
        d -= TAU;
    }
    if d <= -std::f64::consts::PI {
        d += TAU;
    }
    d
}

/// Shortest representative of a displacement on the 2-torus with side 2pi.
pub fn torus_shortest(dx: f64, dy: f64) -> (f64, f64) {
    (angle_diff(dx, 0.0), angle_diff(dy, 0.0))
}
