//! Initial densities and their partial antiderivatives in `x1`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub type DensityFn = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
pub type AntiderivativeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Intervals of the composite Simpson rule used when no antiderivative is supplied.
pub const QUADRATURE_INTERVALS: usize = 512;

#[derive(Clone)]
pub enum InitialDensity {
    /// Isotropic normal density `exp(-|x - c|^2 / (2 sigma^2)) / (2 pi sigma^2)`.
    Gaussian { sigma: f64, center: Vec2 },
    /// User-supplied density; the antiderivative falls back to quadrature when absent.
    Custom {
        density: DensityFn,
        antiderivative: Option<AntiderivativeFn>,
    },
}

impl fmt::Debug for InitialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDensity::Gaussian { sigma, center } => f
                .debug_struct("Gaussian")
                .field("sigma", sigma)
                .field("center", center)
                .finish(),
            InitialDensity::Custom { antiderivative, .. } => f
                .debug_struct("Custom")
                .field("closed_form_antiderivative", &antiderivative.is_some())
                .finish(),
        }
    }
}

impl InitialDensity {
    pub fn gaussian(sigma: f64, center: Vec2) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("density.sigma", "must be positive"));
        }
        Ok(InitialDensity::Gaussian { sigma, center })
    }

    pub fn custom(density: DensityFn, antiderivative: Option<AntiderivativeFn>) -> Self {
        InitialDensity::Custom {
            density,
            antiderivative,
        }
    }

    /// Uniform density 1 everywhere, with the exact antiderivative `x1`.
    pub fn constant_one() -> Self {
        Self::custom(Arc::new(|_| 1.0), Some(Arc::new(|x1, _| x1)))
    }

    #[inline]
    pub fn eval(&self, x: Vec2) -> f64 {
        match self {
            InitialDensity::Gaussian { sigma, center } => {
                let r2 = (x - *center).norm_squared();
                (-r2 / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma)
            }
            InitialDensity::Custom { density, .. } => density(x),
        }
    }

    /// `F(x1, x2) = integral of rho0(xi, x2) for xi in [0, x1]`, so that `dF/dx1 = rho0`.
    pub fn partial_antiderivative(&self, x1: f64, x2: f64) -> f64 {
        match self {
            InitialDensity::Gaussian { sigma, center } => {
                let s = sigma * SQRT_2;
                let dy = x2 - center.y;
                let transverse = (-dy * dy / (2.0 * sigma * sigma)).exp();
                let along = libm::erf((x1 - center.x) / s) - libm::erf(-center.x / s);
                transverse * along / (2.0 * sigma * (2.0 * PI).sqrt())
            }
            InitialDensity::Custom {
                antiderivative: Some(f),
                ..
            } => f(x1, x2),
            InitialDensity::Custom { density, .. } => simpson(|xi| density(Vec2::new(xi, x2)), 0.0, x1),
        }
    }

    /// Antiderivative in `x1` differing from [`partial_antiderivative`](Self::partial_antiderivative)
    /// by a function of `x2` alone, which leaves closed-curve integrals unchanged. For a
    /// Gaussian it is anchored at the tail nearer to `x1` (`-inf` when `lower_tail`), so
    /// curves far from the center keep relative accuracy.
    pub fn tail_antiderivative(&self, x1: f64, x2: f64, lower_tail: bool) -> f64 {
        match self {
            InitialDensity::Gaussian { sigma, center } => {
                let s = sigma * SQRT_2;
                let dy = x2 - center.y;
                let transverse = (-dy * dy / (2.0 * sigma * sigma)).exp();
                let along = if lower_tail {
                    libm::erfc(-(x1 - center.x) / s)
                } else {
                    -libm::erfc((x1 - center.x) / s)
                };
                transverse * along / (2.0 * sigma * (2.0 * PI).sqrt())
            }
            _ => self.partial_antiderivative(x1, x2),
        }
    }

    /// Characteristic length for grid sizing, if the density has one.
    pub fn scale(&self) -> Option<(Vec2, f64)> {
        match self {
            InitialDensity::Gaussian { sigma, center } => Some((*center, *sigma)),
            InitialDensity::Custom { .. } => None,
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = QUADRATURE_INTERVALS;
    let h = (b - a) / n as f64;
    if h == 0.0 {
        return 0.0;
    }
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let x = a + h * k as f64;
        sum += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    sum * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_normalized_on_six_sigma_box() {
        for (sigma, c) in [(1.0, Vec2::ZERO), (0.7, Vec2::new(1.5, -2.0))] {
            let rho = InitialDensity::gaussian(sigma, c).unwrap();
            let n = 600;
            let hw = 6.0 * sigma;
            let h = 2.0 * hw / n as f64;
            let mut total = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let x = Vec2::new(c.x - hw + (i as f64 + 0.5) * h, c.y - hw + (j as f64 + 0.5) * h);
                    let v = rho.eval(x);
                    assert!(v >= 0.0);
                    total += v;
                }
            }
            total *= h * h;
            assert!((total - 1.0).abs() < 1e-6, "total = {total}");
        }
    }

    #[test]
    fn antiderivative_differentiates_back() {
        let rho = InitialDensity::gaussian(1.0, Vec2::new(0.3, -0.2)).unwrap();
        let h = 1e-4;
        for &(x1, x2) in &[(0.0, 0.0), (1.2, -0.7), (-2.5, 1.9), (3.0, 0.1)] {
            let d = (rho.partial_antiderivative(x1 + h, x2) - rho.partial_antiderivative(x1 - h, x2)) / (2.0 * h);
            let want = rho.eval(Vec2::new(x1, x2));
            assert!(((d - want) / want).abs() < 1e-6, "at ({x1},{x2}): {d} vs {want}");
        }
        assert_eq!(rho.partial_antiderivative(0.0, 5.0), 0.0);
    }

    #[test]
    fn quadrature_fallback_matches_closed_form() {
        let g = InitialDensity::gaussian(1.0, Vec2::new(-0.5, 0.5)).unwrap();
        let g2 = g.clone();
        let custom = InitialDensity::custom(Arc::new(move |x| g2.eval(x)), None);
        for &(x1, x2) in &[(1.0, 0.0), (-3.0, 1.0), (4.0, -2.0)] {
            let a = g.partial_antiderivative(x1, x2);
            let b = custom.partial_antiderivative(x1, x2);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(InitialDensity::gaussian(0.0, Vec2::ZERO).is_err());
        assert!(InitialDensity::gaussian(-1.0, Vec2::ZERO).is_err());
    }

    #[test]
    fn tail_anchors_shift_by_a_function_of_x2_only() {
        let rho = InitialDensity::gaussian(0.8, Vec2::new(0.5, -0.2)).unwrap();
        for x2 in [-1.0, 0.0, 2.0] {
            for lower in [true, false] {
                let offset = rho.tail_antiderivative(0.0, x2, lower) - rho.partial_antiderivative(0.0, x2);
                for x1 in [-3.0, -0.5, 1.0, 4.0] {
                    let d = rho.tail_antiderivative(x1, x2, lower) - rho.partial_antiderivative(x1, x2);
                    assert!((d - offset).abs() < 1e-15, "x1 {x1} x2 {x2}");
                }
            }
        }
        // far in the lower tail the anchored value keeps relative accuracy
        let far = rho.tail_antiderivative(-30.0, -0.2, true);
        assert!(far > 0.0 && far < 1e-100);
    }
}
