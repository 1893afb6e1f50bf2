//! Compact admissible control sets with closed-form linear minimization.

use crate::error::{Error, Result};

/// Slack used by membership checks.
pub const SET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ControlSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Simplex { m: usize },
}

impl ControlSet {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::LengthMismatch {
                expected: lo.len(),
                actual: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::invalid("control", "box must have at least one dimension"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::invalid("control", "box bounds must be finite with lo <= hi"));
        }
        Ok(ControlSet::Box { lo, hi })
    }

    /// The symmetric interval `[-u_max, u_max]`.
    pub fn interval(u_max: f64) -> Result<Self> {
        Self::new_box(vec![-u_max], vec![u_max])
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::invalid("control", "ball must have at least one dimension"));
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::invalid("control.u_max", "radius must be finite and >= 0"));
        }
        Ok(ControlSet::Ball { center, radius })
    }

    pub fn new_simplex(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("control.m", "simplex needs at least one vertex"));
        }
        Ok(ControlSet::Simplex { m })
    }

    pub fn dim(&self) -> usize {
        match self {
            ControlSet::Box { lo, .. } => lo.len(),
            ControlSet::Ball { center, .. } => center.len(),
            ControlSet::Simplex { m } => *m,
        }
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        if w.len() != self.dim() || w.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            ControlSet::Box { lo, hi } => w
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - SET_TOL && *v <= h + SET_TOL),
            ControlSet::Ball { center, radius } => {
                let d2: f64 = w.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2.sqrt() <= radius + SET_TOL
            }
            ControlSet::Simplex { .. } => {
                let sum: f64 = w.iter().sum();
                w.iter().all(|v| (-SET_TOL..=1.0 + SET_TOL).contains(v)) && (sum - 1.0).abs() <= SET_TOL
            }
        }
    }

    pub fn is_singleton(&self) -> bool {
        match self {
            ControlSet::Box { lo, hi } => lo == hi,
            ControlSet::Ball { radius, .. } => *radius == 0.0,
            ControlSet::Simplex { m } => *m == 1,
        }
    }

    /// Minimizer of `c . w` over the set. Ties resolve deterministically:
    /// Box picks `lo`, Ball picks the center, Simplex the earliest minimal index.
    pub fn linear_argmin(&self, c: &[f64]) -> Vec<f64> {
        debug_assert_eq!(c.len(), self.dim());
        match self {
            ControlSet::Box { lo, hi } => c
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(ci, (l, h))| if *ci < 0.0 { *h } else { *l })
                .collect(),
            ControlSet::Ball { center, radius } => {
                let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    return center.clone();
                }
                center
                    .iter()
                    .zip(c)
                    .map(|(x0, ci)| x0 - radius * ci / norm)
                    .collect()
            }
            ControlSet::Simplex { m } => {
                let mut best = 0;
                for (i, ci) in c.iter().enumerate().skip(1) {
                    if *ci < c[best] {
                        best = i;
                    }
                }
                let mut w = vec![0.0; *m];
                w[best] = 1.0;
                w
            }
        }
    }

    /// Barycentre-like default point: box midpoint, ball center, uniform simplex weights.
    pub fn center(&self) -> Vec<f64> {
        match self {
            ControlSet::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            ControlSet::Ball { center, .. } => center.clone(),
            ControlSet::Simplex { m } => vec![1.0 / *m as f64; *m],
        }
    }

    /// A finite deterministic set of candidate points (extreme points plus the center).
    /// Used when channel maps are not coordinate projections and the linear rule does not apply.
    pub fn candidates(&self) -> Vec<Vec<f64>> {
        let mut out = vec![self.center()];
        match self {
            ControlSet::Box { lo, hi } => {
                let d = lo.len().min(12);
                for mask in 0..(1usize << d) {
                    let mut w = lo.clone();
                    for (k, wk) in w.iter_mut().enumerate().take(d) {
                        if mask & (1 << k) != 0 {
                            *wk = hi[k];
                        }
                    }
                    out.push(w);
                }
            }
            ControlSet::Ball { center, radius } => {
                if center.len() == 2 {
                    for k in 0..256 {
                        let a = std::f64::consts::TAU * k as f64 / 256.0;
                        out.push(vec![center[0] + radius * a.cos(), center[1] + radius * a.sin()]);
                    }
                } else {
                    for i in 0..center.len() {
                        for s in [-1.0, 1.0] {
                            let mut w = center.clone();
                            w[i] += s * radius;
                            out.push(w);
                        }
                    }
                }
            }
            ControlSet::Simplex { m } => {
                for j in 0..*m {
                    let mut w = vec![0.0; *m];
                    w[j] = 1.0;
                    out.push(w);
                }
            }
        }
        out
    }
}
