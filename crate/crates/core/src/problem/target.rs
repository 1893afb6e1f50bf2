//! Target sets and their counterclockwise boundary samplings.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSet {
    Circle { center: Vec2, radius: f64 },
    Ellipse { center: Vec2, a: f64, b: f64 },
}

impl TargetSet {
    pub fn circle(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("target.radius", "must be positive"));
        }
        Ok(TargetSet::Circle { center, radius })
    }

    pub fn ellipse(center: Vec2, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::invalid("target.a/target.b", "semi-axes must be positive"));
        }
        Ok(TargetSet::Ellipse { center, a, b })
    }

    pub fn center(&self) -> Vec2 {
        match self {
            TargetSet::Circle { center, .. } | TargetSet::Ellipse { center, .. } => *center,
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            TargetSet::Circle { radius, .. } => PI * radius * radius,
            TargetSet::Ellipse { a, b, .. } => PI * a * b,
        }
    }

    /// Boundary point at parameter `theta` (counterclockwise as `theta` grows).
    pub fn point_at(&self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        match self {
            TargetSet::Circle { center, radius } => *center + Vec2::new(radius * c, radius * s),
            TargetSet::Ellipse { center, a, b } => *center + Vec2::new(a * c, b * s),
        }
    }

    /// Parameter values `2 pi k / n`, `k = 0..n`.
    pub fn uniform_parameters(n: usize) -> Vec<f64> {
        (0..n).map(|k| TAU * k as f64 / n as f64).collect()
    }

    /// `n` counterclockwise boundary vertices, equally spaced in the angle parameter.
    pub fn sample_boundary(&self, n: usize) -> Vec<Vec2> {
        Self::uniform_parameters(n)
            .into_iter()
            .map(|t| self.point_at(t))
            .collect()
    }

    /// Closed-set membership.
    pub fn contains(&self, x: Vec2) -> bool {
        match self {
            TargetSet::Circle { center, radius } => (x - *center).norm_squared() <= radius * radius,
            TargetSet::Ellipse { center, a, b } => {
                let d = x - *center;
                (d.x / a).powi(2) + (d.y / b).powi(2) <= 1.0
            }
        }
    }
}
