//! Doubly periodic square domain and 2-D vector arithmetic.
//!
//! All lengths are in meters. The minimum-image convention wraps coordinate
//! differences into the half-open interval `(-side/2, side/2]`; the tie at
//! exactly half the domain resolves to the positive side.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// A 2-D vector (SI units throughout the crate).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Scalar z-component of the 2-D cross product `self x other`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Counterclockwise rotation by 90 degrees (also `z_hat x self`).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, rhs: Vec2) -> Vec2 {
        rhs * self
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Square simulation domain with double periodic boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub side: f64,
}

impl Domain {
    pub fn new(side: f64) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::Parameter(format!(
                "domain side must be positive and finite, got {side}"
            )));
        }
        Ok(Domain { side })
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    /// Wraps a coordinate into `[0, side)`.
    pub fn wrap_coord(&self, x: f64) -> f64 {
        let mut w = x - self.side * (x / self.side).floor();
        // Rounding can land exactly on the upper boundary.
        if w >= self.side {
            w -= self.side;
        }
        if w < 0.0 {
            w += self.side;
        }
        w
    }

    pub fn wrap_point(&self, p: Vec2) -> Vec2 {
        Vec2::new(self.wrap_coord(p.x), self.wrap_coord(p.y))
    }

    /// Wraps a coordinate difference into `(-side/2, side/2]`.
    pub fn wrap_delta(&self, d: f64) -> f64 {
        d - self.side * (d / self.side - 0.5).ceil()
    }

    /// Minimum-image displacement from `from` to `to`.
    pub fn min_image(&self, from: Vec2, to: Vec2) -> Vec2 {
        Vec2::new(self.wrap_delta(to.x - from.x), self.wrap_delta(to.y - from.y))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (0.0..self.side).contains(&p.x) && (0.0..self.side).contains(&p.y)
    }
}

/// Wraps an angle into `[0, 2*pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a - TAU * (a / TAU).floor();
    if w >= TAU {
        w -= TAU;
    }
    if w < 0.0 {
        w += TAU;
    }
    w
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_angle_delta(d: f64) -> f64 {
    d - TAU * (d / TAU - 0.5).ceil()
}
