//! Control-affine vector fields `v(t, x, u) = v0(t, x) + sum_i phi_i(t, u) v_i(t, x)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub type VectorFn = Arc<dyn Fn(f64, Vec2) -> Vec2 + Send + Sync>;
pub type ScalarFieldFn = Arc<dyn Fn(f64, Vec2) -> f64 + Send + Sync>;
pub type ChannelMapFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Default step for central-difference divergence.
pub const DEFAULT_DIV_STEP: f64 = 1e-5;

/// How control values enter the field.
#[derive(Clone)]
pub enum ChannelMaps {
    /// `phi_i(t, u) = u_i`; the control dimension equals the channel count.
    Coordinate,
    /// Arbitrary scalar maps, one per channel, over a control of dimension `control_dim`.
    Custom {
        maps: Vec<ChannelMapFn>,
        control_dim: usize,
    },
}

#[derive(Clone)]
pub enum Divergence {
    /// Closed forms for `div v0` and each `div v_i`.
    Analytic {
        drift: ScalarFieldFn,
        channels: Vec<ScalarFieldFn>,
    },
    /// Central differences of the assembled field with spacing `step`.
    FiniteDifference { step: f64 },
}

#[derive(Clone)]
pub struct ControlAffineField {
    drift: VectorFn,
    channels: Vec<VectorFn>,
    maps: ChannelMaps,
    divergence: Divergence,
}

impl fmt::Debug for ControlAffineField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlAffineField")
            .field("channels", &self.channels.len())
            .field("control_dim", &self.control_dim())
            .field(
                "divergence",
                &match self.divergence {
                    Divergence::Analytic { .. } => "analytic".to_string(),
                    Divergence::FiniteDifference { step } => format!("central differences, h = {step}"),
                },
            )
            .finish()
    }
}

impl ControlAffineField {
    /// A field with coordinate channel maps and finite-difference divergence.
    pub fn new(drift: VectorFn, channels: Vec<VectorFn>) -> Self {
        ControlAffineField {
            drift,
            channels,
            maps: ChannelMaps::Coordinate,
            divergence: Divergence::FiniteDifference {
                step: DEFAULT_DIV_STEP,
            },
        }
    }

    /// Attach closed-form divergences. One entry per channel is required.
    pub fn with_analytic_divergence(
        mut self,
        drift: ScalarFieldFn,
        channels: Vec<ScalarFieldFn>,
    ) -> Result<Self> {
        if channels.len() != self.channels.len() {
            return Err(Error::LengthMismatch {
                expected: self.channels.len(),
                actual: channels.len(),
            });
        }
        self.divergence = Divergence::Analytic { drift, channels };
        Ok(self)
    }

    pub fn with_finite_difference_divergence(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid("field.h_div", "step must be positive"));
        }
        self.divergence = Divergence::FiniteDifference { step };
        Ok(self)
    }

    pub fn with_channel_maps(mut self, maps: Vec<ChannelMapFn>, control_dim: usize) -> Result<Self> {
        if maps.len() != self.channels.len() {
            return Err(Error::LengthMismatch {
                expected: self.channels.len(),
                actual: maps.len(),
            });
        }
        self.maps = ChannelMaps::Custom { maps, control_dim };
        Ok(self)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn control_dim(&self) -> usize {
        match &self.maps {
            ChannelMaps::Coordinate => self.channels.len(),
            ChannelMaps::Custom { control_dim, .. } => *control_dim,
        }
    }

    pub fn has_coordinate_maps(&self) -> bool {
        matches!(self.maps, ChannelMaps::Coordinate)
    }

    pub fn has_analytic_divergence(&self) -> bool {
        matches!(self.divergence, Divergence::Analytic { .. })
    }

    /// Channel weights `phi_i(t, u)` written into `out`.
    pub fn weights_into(&self, t: f64, u: &[f64], out: &mut [f64]) {
        match &self.maps {
            ChannelMaps::Coordinate => out.copy_from_slice(u),
            ChannelMaps::Custom { maps, .. } => {
                for (w, map) in out.iter_mut().zip(maps) {
                    *w = map(t, u);
                }
            }
        }
    }

    pub fn weights(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.channels.len()];
        self.weights_into(t, u, &mut out);
        out
    }

    #[inline]
    pub fn drift(&self, t: f64, x: Vec2) -> Vec2 {
        (self.drift)(t, x)
    }

    #[inline]
    pub fn channel(&self, i: usize, t: f64, x: Vec2) -> Vec2 {
        (self.channels[i])(t, x)
    }

    /// Field value for precomputed channel weights. Channels with zero weight are skipped.
    #[inline]
    pub fn value_weighted(&self, t: f64, x: Vec2, weights: &[f64]) -> Vec2 {
        let mut v = (self.drift)(t, x);
        for (w, ch) in weights.iter().zip(&self.channels) {
            if *w != 0.0 {
                v += ch(t, x) * *w;
            }
        }
        v
    }

    pub fn divergence_weighted(&self, t: f64, x: Vec2, weights: &[f64]) -> f64 {
        match &self.divergence {
            Divergence::Analytic { drift, channels } => {
                let mut d = drift(t, x);
                for (w, ch) in weights.iter().zip(channels) {
                    if *w != 0.0 {
                        d += *w * ch(t, x);
                    }
                }
                d
            }
            Divergence::FiniteDifference { step } => {
                let h = *step;
                let ex = Vec2::new(h, 0.0);
                let ey = Vec2::new(0.0, h);
                let dx = self.value_weighted(t, x + ex, weights).x
                    - self.value_weighted(t, x - ex, weights).x;
                let dy = self.value_weighted(t, x + ey, weights).y
                    - self.value_weighted(t, x - ey, weights).y;
                (dx + dy) / (2.0 * h)
            }
        }
    }

    /// `v(t, x, u)`.
    pub fn value(&self, t: f64, x: Vec2, u: &[f64]) -> Vec2 {
        let w = self.weights(t, u);
        self.value_weighted(t, x, &w)
    }

    /// `div_x v(t, x, u)`.
    pub fn divergence(&self, t: f64, x: Vec2, u: &[f64]) -> f64 {
        let w = self.weights(t, u);
        self.divergence_weighted(t, x, &w)
    }

    /// Central-difference divergence regardless of the configured mode.
    pub fn divergence_fd(&self, t: f64, x: Vec2, u: &[f64], step: f64) -> f64 {
        let w = self.weights(t, u);
        let ex = Vec2::new(step, 0.0);
        let ey = Vec2::new(0.0, step);
        let dx = self.value_weighted(t, x + ex, &w).x - self.value_weighted(t, x - ex, &w).x;
        let dy = self.value_weighted(t, x + ey, &w).y - self.value_weighted(t, x - ey, &w).y;
        (dx + dy) / (2.0 * step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotating_sink() -> ControlAffineField {
        // v0 = (-y - 0.3x, x - 0.3y), v1 = (sin y, x^2), v2 = (1, x y)
        ControlAffineField::new(
            Arc::new(|_, p: Vec2| Vec2::new(-p.y - 0.3 * p.x, p.x - 0.3 * p.y)),
            vec![
                Arc::new(|_, p: Vec2| Vec2::new(p.y.sin(), p.x * p.x)),
                Arc::new(|t, p: Vec2| Vec2::new(1.0 + t, p.x * p.y)),
            ],
        )
    }

    #[test]
    fn value_matches_direct_evaluation() {
        let f = rotating_sink();
        let direct = |t: f64, p: Vec2, u: &[f64]| {
            Vec2::new(
                -p.y - 0.3 * p.x + u[0] * p.y.sin() + u[1] * (1.0 + t),
                p.x - 0.3 * p.y + u[0] * p.x * p.x + u[1] * p.x * p.y,
            )
        };
        for &(t, x, y, a, b) in &[
            (0.0, 0.1, 0.2, 0.5, -1.0),
            (1.3, -2.0, 0.7, 0.0, 3.0),
            (4.0, 5.0, -5.0, -0.25, 0.125),
        ] {
            let p = Vec2::new(x, y);
            let got = f.value(t, p, &[a, b]);
            let want = direct(t, p, &[a, b]);
            assert!((got - want).norm() <= 1e-14 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn finite_difference_divergence_is_second_order() {
        let analytic = rotating_sink()
            .with_analytic_divergence(
                Arc::new(|_, _| -0.6),
                vec![Arc::new(|_, _| 0.0), Arc::new(|_, p: Vec2| p.x)],
            )
            .unwrap();
        // a non-polynomial field so truncation error is visible
        let wavy = ControlAffineField::new(
            Arc::new(|_, p: Vec2| Vec2::new((2.0 * p.x).sin() * p.y, (p.x * p.y).cos())),
            vec![],
        );
        let exact_div = |p: Vec2| 2.0 * (2.0 * p.x).cos() * p.y - p.x * (p.x * p.y).sin();
        let p = Vec2::new(0.4, -0.9);
        let e1 = (wavy.divergence_fd(0.0, p, &[], 1e-2) - exact_div(p)).abs();
        let e2 = (wavy.divergence_fd(0.0, p, &[], 5e-3) - exact_div(p)).abs();
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "error ratio {ratio}");

        let u = [0.7, -0.2];
        let d_an = analytic.divergence(0.5, p, &u);
        let d_fd = analytic.divergence_fd(0.5, p, &u, DEFAULT_DIV_STEP);
        assert!((d_an - d_fd).abs() < 1e-8, "{d_an} vs {d_fd}");
    }

    #[test]
    fn affine_in_control() {
        let f = rotating_sink();
        let p = Vec2::new(0.3, 1.7);
        let (u, w) = ([0.2, -1.4], [1.1, 0.6]);
        let mid = [(u[0] + w[0]) / 2.0, (u[1] + w[1]) / 2.0];
        let lhs = f.value(0.7, p, &mid);
        let rhs = (f.value(0.7, p, &u) + f.value(0.7, p, &w)) * 0.5;
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn custom_channel_maps() {
        let f = ControlAffineField::new(
            Arc::new(|_, _| Vec2::ZERO),
            vec![Arc::new(|_, _| Vec2::new(1.0, 0.0)), Arc::new(|_, _| Vec2::new(0.0, 1.0))],
        )
        .with_channel_maps(
            vec![Arc::new(|_, u: &[f64]| u[0].cos()), Arc::new(|_, u: &[f64]| u[0].sin())],
            1,
        )
        .unwrap();
        assert_eq!(f.control_dim(), 1);
        let v = f.value(0.0, Vec2::ZERO, &[std::f64::consts::FRAC_PI_2]);
        assert!((v - Vec2::new(0.0, 1.0)).norm() < 1e-15);
        assert!(f.with_channel_maps(vec![], 1).is_err());
    }
}
