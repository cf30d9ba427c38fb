//! Planar points and the symplectic rotation used throughout the crate.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    /// Unit vector at angle `theta`.
    pub fn unit(theta: f64) -> Self {
        Point2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Scalar cross product `self.x * other.y - self.y * other.x`.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Apply the symplectic matrix J = [[0, 1], [-1, 0]].
    pub fn jay(self) -> Point2 {
        Point2::new(self.y, -self.x)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    fn mul(self, rhs: Point2) -> Point2 {
        rhs * self
    }
}

impl Div<f64> for Point2 {
    type Output = Point2;
    fn div(self, rhs: f64) -> Point2 {
        Point2::new(self.x / rhs, self.y / rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Difference `theta - lift` folded into `(-pi, pi]`.
pub fn wrap_diff(theta: f64, lift: f64) -> f64 {
    let mut d = (theta - lift) % TAU;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jay_rotates_clockwise() {
        let e1 = Point2::new(1.0, 0.0);
        assert_eq!(e1.jay(), Point2::new(0.0, -1.0));
        let v = Point2::new(0.3, -0.7);
        assert!(v.dot(v.jay()).abs() < 1e-15);
        assert!((v.jay().norm() - v.norm()).abs() < 1e-15);
    }

    #[test]
    fn wrap_diff_stays_in_half_open_band() {
        for k in -6..6 {
            let lift = 0.4 + k as f64 * 11.0;
            for theta in [-3.0, -0.1, 0.0, 1.3, 3.1] {
                let d = wrap_diff(theta, lift);
                assert!(d > -PI && d <= PI);
                // lift + d must point at the same direction as theta
                assert!(((lift + d) - theta).rem_euclid(TAU).min(TAU - ((lift + d) - theta).rem_euclid(TAU)) < 1e-9);
            }
        }
    }
}
