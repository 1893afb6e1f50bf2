use crate::error::{Error, Result};
use crate::flow::ControlSignal;

/// Gain `g_j = H(t_j, u_j) - H(t_j, w_j)` per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct GProfile {
    pub values: Vec<f64>,
    pub dt: f64,
}

impl GProfile {
    pub fn new(values: Vec<f64>, dt: f64) -> Self {
        GProfile { values, dt }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `sum over selected steps of g_j dt`.
    pub fn integral(&self, set: &NeedleSet) -> f64 {
        self.values
            .iter()
            .zip(&set.mask)
            .filter(|(_, m)| **m)
            .map(|(g, _)| g * self.dt)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeedleSet {
    pub mask: Vec<bool>,
    pub measure: f64,
}

impl NeedleSet {
    pub fn from_mask(mask: Vec<bool>, dt: f64) -> Self {
        let count = mask.iter().filter(|m| **m).count();
        NeedleSet {
            mask,
            measure: count as f64 * dt,
        }
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Number of whole steps making up a needle set of measure `epsilon`.
pub fn needle_steps(epsilon: f64, dt: f64, n: usize) -> usize {
    (((epsilon / dt) * (1.0 - 1e-12)).ceil() as usize).clamp(1, n)
}

/// Super-level set of `g` with measure `ceil(epsilon / dt) dt`: the steps with the
/// largest gains, earlier steps first among equal gains.
pub fn needle_select(g: &GProfile, epsilon: f64) -> Result<NeedleSet> {
    let horizon = g.horizon();
    if !(epsilon > 0.0 && epsilon <= horizon * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "needle measure {epsilon} outside (0, {horizon}]"
        )));
    }
    let k = needle_steps(epsilon, g.dt, g.len());
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| g.values[b].total_cmp(&g.values[a]).then(a.cmp(&b)));
    let mut mask = vec![false; g.len()];
    for &j in &order[..k] {
        mask[j] = true;
    }
    Ok(NeedleSet::from_mask(mask, g.dt))
}

/// `w` on the needle set, `u` elsewhere.
pub fn mix_controls(u: &ControlSignal, w: &ControlSignal, set: &NeedleSet) -> Result<ControlSignal> {
    for len in [w.len(), set.mask.len()] {
        if len != u.len() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                actual: len,
            });
        }
    }
    if u.dim() != w.dim() {
        return Err(Error::LengthMismatch {
            expected: u.dim(),
            actual: w.dim(),
        });
    }
    let mut out = u.clone();
    for (j, selected) in set.mask.iter().enumerate() {
        if *selected {
            out.set_step(j, w.step(j));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_profile_selects_upper_half() {
        let dt = 0.01;
        let g = GProfile::new((0..100).map(|j| j as f64 * dt).collect(), dt);
        let set = needle_select(&g, 0.5).unwrap();
        for (j, m) in set.mask.iter().enumerate() {
            assert_eq!(*m, j >= 50, "step {j}");
        }
        assert!((set.measure - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ties_prefer_earlier_steps() {
        let g = GProfile::new(vec![1.0; 10], 0.1);
        let set = needle_select(&g, 0.3).unwrap();
        assert_eq!(set.mask, [true, true, true, false, false, false, false, false, false, false]);
        // partial steps round up
        assert_eq!(needle_select(&g, 0.25).unwrap().count(), 3);
        assert_eq!(needle_select(&g, 1.0).unwrap().count(), 10);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let g = GProfile::new(vec![1.0; 10], 0.1);
        assert!(needle_select(&g, 0.0).is_err());
        assert!(needle_select(&g, -0.1).is_err());
        assert!(needle_select(&g, 1.5).is_err());
    }

    #[test]
    fn mixing() {
        let u = ControlSignal::constant(6, 0.5, &[0.0]).unwrap();
        let w = ControlSignal::new((0..6).map(|j| vec![j as f64 + 1.0]).collect(), 0.5).unwrap();
        let none = NeedleSet::from_mask(vec![false; 6], 0.5);
        assert_eq!(mix_controls(&u, &w, &none).unwrap(), u);
        let all = NeedleSet::from_mask(vec![true; 6], 0.5);
        assert_eq!(mix_controls(&u, &w, &all).unwrap(), w);
        let alt = NeedleSet::from_mask((0..6).map(|j| j % 2 == 1).collect(), 0.5);
        let mixed = mix_controls(&u, &w, &alt).unwrap();
        for j in 0..6 {
            let want = if j % 2 == 1 { w.step(j) } else { u.step(j) };
            assert_eq!(mixed.step(j), want);
        }
        let short = ControlSignal::constant(5, 0.5, &[0.0]).unwrap();
        assert!(matches!(mix_controls(&short, &w, &alt), Err(Error::LengthMismatch { .. })));
    }
}
