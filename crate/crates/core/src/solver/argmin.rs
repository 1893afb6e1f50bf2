use crate::boundary::{BoundaryCurve, FluxCoefficients};
use crate::error::Result;
use crate::problem::{ControlAffineField, ControlSet};

/// Minimizer of `H(w) = c0 + sum_i c_i phi_i(t, w)` over the control set.
///
/// With coordinate channel maps `H` is linear in `w` and the set's closed-form rule
/// applies. Otherwise the minimum is taken over the set's candidate points.
pub fn argmin_from_coefficients(
    coefficients: &FluxCoefficients,
    field: &ControlAffineField,
    controls: &ControlSet,
    t: f64,
) -> Vec<f64> {
    if field.has_coordinate_maps() {
        return controls.linear_argmin(&coefficients.channels);
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for w in controls.candidates() {
        let h = coefficients.control_part(&field.weights(t, &w));
        if best.as_ref().is_none_or(|(b, _)| h < *b) {
            best = Some((h, w));
        }
    }
    best.expect("candidate set is never empty").1
}

/// `w(t) = argmin { integral over dA^t of rho v(t, x, w) . n : w in U }`.
pub fn pointwise_argmin(
    curve: &BoundaryCurve,
    field: &ControlAffineField,
    controls: &ControlSet,
    t: f64,
) -> Result<Vec<f64>> {
    let c = curve.flux_coefficients(field, t)?;
    Ok(argmin_from_coefficients(&c, field, controls, t))
}
