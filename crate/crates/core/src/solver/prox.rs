//! Proximal primitives: soft thresholding and Euclidean-ball projection.

use nalgebra::DVector;

/// Prox form of the scalar ℓ1 problem: `sign(r)·max(|r| − τ, 0)`.
pub fn soft_threshold(r: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    let shrunk = r.abs() - tau;
    if shrunk > 0.0 {
        shrunk.copysign(r)
    } else {
        0.0
    }
}

/// Constrained form: the minimizer `q = clip(r, −τ, τ)` of `(r − q)²` over `|q| ≤ τ`.
pub fn clip_to_threshold(r: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    r.clamp(-tau, tau)
}

/// `min_{|q| ≤ τ} (r − q)² = ((|r| − τ)⁺)²`.
pub fn clipped_residual_sq(r: f64, tau: f64) -> f64 {
    let q = clip_to_threshold(r, tau);
    (r - q) * (r - q)
}

/// Projects `u` onto the closed unit ball in place.
pub(crate) fn project_unit_ball(u: &mut DVector<f64>) {
    let norm = u.norm();
    if norm > 1.0 {
        *u /= norm;
    }
}
