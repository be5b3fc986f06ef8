//! Range-only localization of a static beacon by a planned vehicle.
//!
//! The crate simulates a vehicle that samples noisy beacon ranges, fits a
//! position estimate at every epoch, smooths the history of estimates into
//! per-axis Bernstein CDF/PDF models, and periodically replans a Bernstein
//! polynomial trajectory that trades mission time, actuation effort, a
//! density-weighted terminal cost and Fisher information about the
//! estimate.
//!
//! Module map:
//!
//! - [`bernstein`]: polynomial algebra in Bernstein form.
//! - [`quadrature`]: Gauss–Legendre rules.
//! - [`solver`]: BFGS and augmented-Lagrangian optimizers.
//! - [`sensing`]: RSSI/range channel and noisy measurements.
//! - [`estimator`]: least-squares fixes and Bernstein density smoothing.
//! - [`planner`]: Fisher information and the trajectory program.
//! - [`mission`]: closed-loop simulation and two-mode comparison.
//! - [`config`], [`cli`]: file formats and command entry points.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod mission;
pub mod planner;
pub mod quadrature;
pub mod sensing;
pub mod solver;

pub use error::{Error, Result};

use std::ops::{Add, Mul, Sub};

/// Planar point or vector, meters (or m/s for velocities).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self { x: v[0], y: v[1] }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}
