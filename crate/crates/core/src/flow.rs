//! Characteristics of the controlled field on a uniform time grid.
//!
//! Time nodes are `t_j = j dt`, `j = 0..=n`. The control is constant on each step
//! `[t_j, t_{j+1})`. A forward step from `t_j` evaluates the field at `(t_j, x_j, u_j)`;
//! a backward step from `t_j` to `t_{j-1}` evaluates it at `(t_j, x_j, u_{j-1})`.

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::problem::{ControlAffineField, ControlSet, InitialDensity, Integrator};

/// Piecewise-constant control on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    values: Vec<Vec<f64>>,
    dt: f64,
}

impl ControlSignal {
    pub fn new(values: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidArgument("control signal needs at least one step".into()));
        }
        let m = values[0].len();
        if let Some(bad) = values.iter().find(|v| v.len() != m) {
            return Err(Error::LengthMismatch {
                expected: m,
                actual: bad.len(),
            });
        }
        Ok(ControlSignal { values, dt })
    }

    pub fn constant(n_steps: usize, dt: f64, u: &[f64]) -> Result<Self> {
        Self::new(vec![u.to_vec(); n_steps], dt)
    }

    /// Row-major `n_steps x dim` layout.
    pub fn from_flat(flat: &[f64], dim: usize, dt: f64) -> Result<Self> {
        if dim == 0 || flat.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "flat control of length {} is not a multiple of dimension {dim}",
                flat.len()
            )));
        }
        Self::new(flat.chunks(dim).map(<[f64]>::to_vec).collect(), dt)
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.values.concat()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn step(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub(crate) fn set_step(&mut self, j: usize, u: &[f64]) {
        self.values[j].copy_from_slice(u);
    }

    /// `u(t) = values[floor(t / dt)]`; the last interval is closed on the right.
    pub fn at_time(&self, t: f64) -> &[f64] {
        let j = ((t / self.dt).floor().max(0.0) as usize).min(self.values.len() - 1);
        &self.values[j]
    }

    /// Checks length and membership of every value.
    pub fn validate(&self, controls: &ControlSet, n_steps: usize) -> Result<()> {
        if self.values.len() != n_steps {
            return Err(Error::LengthMismatch {
                expected: n_steps,
                actual: self.values.len(),
            });
        }
        if self.dim() != controls.dim() {
            return Err(Error::LengthMismatch {
                expected: controls.dim(),
                actual: self.dim(),
            });
        }
        if let Some(j) = self.values.iter().position(|u| !controls.contains(u)) {
            return Err(Error::InvalidArgument(format!(
                "control value {:?} at step {j} is outside the admissible set",
                self.values[j]
            )));
        }
        Ok(())
    }
}

/// Which end of the time interval anchors a characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `y0` is the position at `t = 0`.
    ForwardFromStart,
    /// `y0` is the position at `t = T`; positions are integrated backward.
    BackwardFromEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Characteristic {
    pub positions: Vec<Vec2>,
    /// `det D Phi_{0, t_j}` at `positions[0]`.
    pub jacobian_det: Vec<f64>,
    /// `rho(t_j, positions[j]) = rho0(positions[0]) / jacobian_det[j]`.
    pub density: Vec<f64>,
}

/// The flow of `x' = v(t, x, u(t))` for a fixed control signal.
pub struct Flow<'a> {
    field: &'a ControlAffineField,
    integrator: Integrator,
    dt: f64,
    n: usize,
    k: usize,
    forward: Vec<f64>,
    backward: Vec<f64>,
}

impl<'a> Flow<'a> {
    pub fn new(field: &'a ControlAffineField, signal: &ControlSignal, integrator: Integrator) -> Result<Self> {
        if signal.dim() != field.control_dim() {
            return Err(Error::LengthMismatch {
                expected: field.control_dim(),
                actual: signal.dim(),
            });
        }
        let n = signal.len();
        let k = field.n_channels();
        let dt = signal.dt();
        let mut forward = vec![0.0; n * k];
        let mut backward = vec![0.0; n * k];
        for j in 0..n {
            field.weights_into(j as f64 * dt, signal.step(j), &mut forward[j * k..(j + 1) * k]);
            // weights for the backward step that leaves t_{j+1} and lands on t_j
            field.weights_into((j + 1) as f64 * dt, signal.step(j), &mut backward[j * k..(j + 1) * k]);
        }
        Ok(Flow {
            field,
            integrator,
            dt,
            n,
            k,
            forward,
            backward,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn field(&self) -> &ControlAffineField {
        self.field
    }

    /// Channel weights in force on step `j` (forward orientation).
    pub fn step_weights(&self, j: usize) -> &[f64] {
        &self.forward[j * self.k..(j + 1) * self.k]
    }

    fn backward_weights(&self, j: usize) -> &[f64] {
        &self.backward[j * self.k..(j + 1) * self.k]
    }

    /// One step `t_j -> t_{j+1}`.
    #[inline]
    pub fn step_forward(&self, j: usize, x: Vec2) -> Vec2 {
        let w = self.step_weights(j);
        let t = self.time(j);
        let k1 = self.field.value_weighted(t, x, w);
        match self.integrator {
            Integrator::Euler => x + k1 * self.dt,
            Integrator::Heun => {
                let k2 = self.field.value_weighted(self.time(j + 1), x + k1 * self.dt, w);
                x + (k1 + k2) * (0.5 * self.dt)
            }
        }
    }

    /// One step `t_{j+1} -> t_j`, i.e. the backward step landing on node `j`.
    #[inline]
    pub fn step_backward(&self, j: usize, x: Vec2) -> Vec2 {
        let w = self.backward_weights(j);
        let t = self.time(j + 1);
        let k1 = self.field.value_weighted(t, x, w);
        match self.integrator {
            Integrator::Euler => x - k1 * self.dt,
            Integrator::Heun => {
                let k2 = self.field.value_weighted(self.time(j), x - k1 * self.dt, w);
                x - (k1 + k2) * (0.5 * self.dt)
            }
        }
    }

    /// Endpoint of the discrete trajectory from node `from` to node `to` (either order).
    pub fn advect(&self, from: usize, to: usize, x: Vec2) -> Result<Vec2> {
        if from > self.n || to > self.n {
            return Err(Error::InvalidArgument(format!(
                "grid nodes {from} -> {to} outside 0..={}",
                self.n
            )));
        }
        let mut y = x;
        if to >= from {
            for j in from..to {
                y = self.step_forward(j, y);
                if !y.is_finite() {
                    return Err(Error::Integration {
                        time: self.time(j + 1),
                        start: x,
                    });
                }
            }
        } else {
            for j in (to..from).rev() {
                y = self.step_backward(j, y);
                if !y.is_finite() {
                    return Err(Error::Integration {
                        time: self.time(j),
                        start: x,
                    });
                }
            }
        }
        Ok(y)
    }

    /// Positions at every node for a point anchored at `t = 0`.
    pub fn forward_path(&self, y0: Vec2) -> Result<Vec<Vec2>> {
        let mut out = Vec::with_capacity(self.n + 1);
        let mut y = y0;
        out.push(y);
        for j in 0..self.n {
            y = self.step_forward(j, y);
            if !y.is_finite() {
                return Err(Error::Integration {
                    time: self.time(j + 1),
                    start: y0,
                });
            }
            out.push(y);
        }
        Ok(out)
    }

    /// Positions at every node for a point anchored at `t = T`, indexed by node.
    pub fn backward_path(&self, x_end: Vec2) -> Result<Vec<Vec2>> {
        let mut out = vec![Vec2::ZERO; self.n + 1];
        let mut y = x_end;
        out[self.n] = y;
        for j in (0..self.n).rev() {
            y = self.step_backward(j, y);
            if !y.is_finite() {
                return Err(Error::Integration {
                    time: self.time(j),
                    start: x_end,
                });
            }
            out[j] = y;
        }
        Ok(out)
    }

    /// `det D Phi_{0, t_j}` along a node-indexed path, integrated forward from 1.
    ///
    /// Euler: `det_{j+1} = det_j (1 + dt div v(t_j, x_j, u_j))`.
    /// Heun: the same with the trapezoidal average of the divergence at both ends.
    pub fn jacobian_along(&self, positions: &[Vec2]) -> Result<Vec<f64>> {
        debug_assert_eq!(positions.len(), self.n + 1);
        let mut det = Vec::with_capacity(positions.len());
        let mut d = 1.0;
        det.push(d);
        for j in 0..self.n {
            let w = self.step_weights(j);
            let div0 = self.field.divergence_weighted(self.time(j), positions[j], w);
            let rate = match self.integrator {
                Integrator::Euler => div0,
                Integrator::Heun => {
                    0.5 * (div0 + self.field.divergence_weighted(self.time(j + 1), positions[j + 1], w))
                }
            };
            d *= 1.0 + self.dt * rate;
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::NonPositiveDeterminant {
                    time: self.time(j + 1),
                    position: positions[j + 1],
                    divergence: rate,
                });
            }
            det.push(d);
        }
        Ok(det)
    }

    pub fn trace_characteristic(
        &self,
        density: &InitialDensity,
        y0: Vec2,
        direction: Direction,
    ) -> Result<Characteristic> {
        let positions = match direction {
            Direction::ForwardFromStart => self.forward_path(y0)?,
            Direction::BackwardFromEnd => self.backward_path(y0)?,
        };
        let jacobian_det = self.jacobian_along(&positions)?;
        let rho0 = density.eval(positions[0]);
        let density = jacobian_det.iter().map(|d| rho0 / d).collect();
        Ok(Characteristic {
            positions,
            jacobian_det,
            density,
        })
    }
}

/// Endpoint of the characteristic from grid node `from` to node `to`.
pub fn advect(
    field: &ControlAffineField,
    signal: &ControlSignal,
    integrator: Integrator,
    from: usize,
    to: usize,
    x: Vec2,
) -> Result<Vec2> {
    Flow::new(field, signal, integrator)?.advect(from, to, x)
}

pub fn trace_characteristic(
    field: &ControlAffineField,
    signal: &ControlSignal,
    integrator: Integrator,
    density: &InitialDensity,
    y0: Vec2,
    direction: Direction,
) -> Result<Characteristic> {
    Flow::new(field, signal, integrator)?.trace_characteristic(density, y0, direction)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn zero_field() -> ControlAffineField {
        ControlAffineField::new(Arc::new(|_, _| Vec2::ZERO), vec![Arc::new(|_, _| Vec2::ZERO)])
    }

    fn constant_field(c: Vec2) -> ControlAffineField {
        ControlAffineField::new(Arc::new(move |_, _| c), vec![])
    }

    #[test]
    fn identity_flow() {
        let f = zero_field();
        let s = ControlSignal::constant(50, 0.1, &[0.3]).unwrap();
        let x = Vec2::new(0.25, -4.0);
        assert_eq!(advect(&f, &s, Integrator::Euler, 0, 50, x).unwrap(), x);
        assert_eq!(advect(&f, &s, Integrator::Euler, 50, 0, x).unwrap(), x);
    }

    #[test]
    fn constant_field_is_exact() {
        let f = constant_field(Vec2::new(1.0, 0.0));
        let s = ControlSignal::new(vec![vec![]; 8], 0.25).unwrap();
        let end = advect(&f, &s, Integrator::Euler, 0, 8, Vec2::ZERO).unwrap();
        assert_eq!(end, Vec2::new(2.0, 0.0));
        let back = advect(&f, &s, Integrator::Euler, 8, 0, end).unwrap();
        assert_eq!(back, Vec2::ZERO);
    }

    #[test]
    fn stationary_density() {
        let f = zero_field();
        let s = ControlSignal::constant(20, 0.05, &[1.0]).unwrap();
        let rho = InitialDensity::gaussian(1.0, Vec2::ZERO).unwrap();
        let y0 = Vec2::new(0.5, 0.5);
        let c = trace_characteristic(&f, &s, Integrator::Euler, &rho, y0, Direction::BackwardFromEnd).unwrap();
        assert!(c.density.iter().all(|d| *d == rho.eval(y0)));
        assert!(c.jacobian_det.iter().all(|d| *d == 1.0));
    }

    #[test]
    fn mass_along_characteristic_is_exact() {
        let f = ControlAffineField::new(
            Arc::new(|_, p: Vec2| Vec2::new(0.3 * p.x + p.y.sin(), -0.1 * p.y)),
            vec![Arc::new(|_, p: Vec2| Vec2::new(p.x * 0.2, 0.0))],
        );
        let s = ControlSignal::constant(100, 0.01, &[1.0]).unwrap();
        let rho = InitialDensity::gaussian(1.0, Vec2::ZERO).unwrap();
        for dir in [Direction::ForwardFromStart, Direction::BackwardFromEnd] {
            let c = trace_characteristic(&f, &s, Integrator::Euler, &rho, Vec2::new(0.2, 0.1), dir).unwrap();
            assert_eq!(c.jacobian_det[0], 1.0);
            for (d, j) in c.density.iter().zip(&c.jacobian_det) {
                assert!((d * j - c.density[0]).abs() <= 1e-12 * c.density[0]);
            }
        }
    }

    #[test]
    fn linear_field_determinant() {
        // v = x has div 2, so det D Phi_{0,1} = e^2
        let f = ControlAffineField::new(Arc::new(|_, p: Vec2| p), vec![]);
        for n in [100usize, 1000] {
            let dt = 1.0 / n as f64;
            let s = ControlSignal::new(vec![vec![]; n], dt).unwrap();
            let rho = InitialDensity::gaussian(1.0, Vec2::ZERO).unwrap();
            let c = trace_characteristic(&f, &s, Integrator::Euler, &rho, Vec2::new(0.3, 0.4), Direction::ForwardFromStart)
                .unwrap();
            let det = *c.jacobian_det.last().unwrap();
            let e2 = std::f64::consts::E.powi(2);
            assert!(((det - e2) / e2).abs() <= 2.0 * dt, "n = {n}: det = {det}");
        }
    }

    #[test]
    fn non_positive_determinant_is_reported() {
        // div = -4, dt = 0.5: 1 + dt div = -1
        let f = ControlAffineField::new(Arc::new(|_, p: Vec2| p * -2.0), vec![]);
        let s = ControlSignal::new(vec![vec![]; 4], 0.5).unwrap();
        let rho = InitialDensity::gaussian(1.0, Vec2::ZERO).unwrap();
        let err = trace_characteristic(&f, &s, Integrator::Euler, &rho, Vec2::new(1.0, 0.0), Direction::ForwardFromStart)
            .unwrap_err();
        assert!(matches!(err, Error::NonPositiveDeterminant { .. }), "{err}");
    }

    #[test]
    fn blow_up_is_reported() {
        let f = ControlAffineField::new(Arc::new(|_, p: Vec2| Vec2::new(p.x * p.x * 1e200, 0.0)), vec![]);
        let s = ControlSignal::new(vec![vec![]; 10], 0.1).unwrap();
        let err = advect(&f, &s, Integrator::Euler, 0, 10, Vec2::new(1e100, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Integration { .. }));
    }

    #[test]
    fn control_lookup_alignment() {
        // channel 0 is only active on step 2, i.e. [t_2, t_3)
        let mut values = vec![vec![0.0]; 5];
        values[2] = vec![1.0];
        let s = ControlSignal::new(values, 1.0).unwrap();
        let f = ControlAffineField::new(Arc::new(|_, _| Vec2::ZERO), vec![Arc::new(|_, _| Vec2::new(1.0, 0.0))]);
        let flow = Flow::new(&f, &s, Integrator::Euler).unwrap();
        // forward from t_2 uses values[2]
        assert_eq!(flow.step_forward(2, Vec2::ZERO), Vec2::new(1.0, 0.0));
        assert_eq!(flow.step_forward(1, Vec2::ZERO), Vec2::ZERO);
        // backward from t_3 lands on t_2 and uses values[2]
        assert_eq!(flow.step_backward(2, Vec2::ZERO), Vec2::new(-1.0, 0.0));
        assert_eq!(flow.step_backward(3, Vec2::ZERO), Vec2::ZERO);
        assert_eq!(s.at_time(2.5), &[1.0]);
        assert_eq!(s.at_time(5.0), &[0.0]);
    }

    #[test]
    fn signal_validation() {
        let set = ControlSet::interval(0.5).unwrap();
        let ok = ControlSignal::constant(4, 0.1, &[0.5]).unwrap();
        ok.validate(&set, 4).unwrap();
        assert!(ok.validate(&set, 5).is_err());
        let bad = ControlSignal::constant(4, 0.1, &[0.6]).unwrap();
        assert!(bad.validate(&set, 4).is_err());
        assert!(ControlSignal::new(vec![vec![1.0], vec![1.0, 2.0]], 0.1).is_err());
        let flat = ControlSignal::from_flat(&[1.0, 2.0, 3.0, 4.0], 2, 0.5).unwrap();
        assert_eq!(flat.step(1), &[3.0, 4.0]);
        assert_eq!(flat.flatten(), vec![1.0, 2.0, 3.0, 4.0]);
    }
}
