//! Deterministic scalar min-max
//! `min_{α ≥ 0} max_{0 ≤ β ≤ 1, p > 0} 𝒟(α, β, p)` that characterizes the
//! optimal cost and the error norm of the square-root LASSO.
//!
//! The inner maximization is solved as a nested profile: for every β on a
//! grid, the p-profile is maximized by a log-grid scan followed by
//! golden-section refinement; the resulting β-profile is then refined the same
//! way. The outer function `g(α) = max_{β,p} 𝒟` is convex, so α* is found by
//! geometric bracketing and golden-section search.

use serde::{Deserialize, Serialize};

use crate::analytics::{check_positive, rho};
use crate::dims::{Dims, NoiseLevel};
use crate::error::{Error, Result};
use crate::roots::{bisect, golden_max, golden_min};

const BETA_GRID: usize = 64;
const P_GRID: usize = 64;
/// Initial p-range relative to α: `p/α ∈ [P_REL_MIN, P_REL_MAX]`, doubled at
/// the upper end while the maximum sits on the edge.
const P_REL_MIN: f64 = 1e-4;
const P_REL_MAX: f64 = 1e4;
const P_DOUBLINGS: usize = 60;
/// Absolute tolerance of the golden-section steps in β and in `ln p`.
const INNER_XTOL: f64 = 1e-10;
/// β within this distance of 1 is reported as on the boundary.
const BOUNDARY_TOL: f64 = 1e-6;
/// Relative tolerance of the outer search in α.
const OUTER_RTOL: f64 = 1e-9;
const ALPHA_FLOOR: f64 = 1e-10;
const ALPHA_CAP: f64 = 1e6;

/// A point `(α, β, p)` of the scalar min-max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GordonPoint {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
}

/// Maximizer of `𝒟(α, ·, ·)` at fixed α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerMax {
    pub beta: f64,
    pub p: f64,
    pub value: f64,
    pub beta_on_boundary: bool,
}

/// Saddle point of the scalar min-max and its value 𝒟*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GordonSolution {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub p_star: f64,
    pub d_star: f64,
    pub beta_on_boundary: bool,
}

impl GordonSolution {
    /// `α*/(σ√m)`, the normalized error the fixed-point prediction targets.
    pub fn nse_norm(&self, dims: Dims, noise: NoiseLevel) -> f64 {
        self.alpha_star / (noise.sigma() * (dims.m() as f64).sqrt())
    }
}

/// `𝒟(α, β, p) = β( √(α² + mσ²)√m − αp/2 + kp/(2α)
///                 − k (α/2p) ρ(√(1 + p²/α²), λ/β) − (n − k)(α/2p) ρ(1, λ/β) )`.
///
/// `β = 0` gives exactly 0. `α = 0` is a pole of the `kp/(2α)` term and is
/// rejected.
pub fn eval_d(point: GordonPoint, dims: Dims, noise: NoiseLevel, lambda: f64) -> Result<f64> {
    let GordonPoint { alpha, beta, p } = point;
    check_positive("lambda", lambda)?;
    check_positive("alpha", alpha)?;
    check_positive("p", p)?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument {
            name: "beta",
            value: beta,
            reason: "must lie in [0, 1]",
        });
    }
    Ok(d_unchecked(alpha, beta, p, dims, noise, lambda))
}

fn d_unchecked(alpha: f64, beta: f64, p: f64, dims: Dims, noise: NoiseLevel, lambda: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let (n, k, m) = dims.nkm();
    let t = lambda / beta;
    let ratio = p / alpha;
    let shrink = alpha / (2.0 * p);
    // ρ(c, t) = c²ρ(1, t/c); keeps the c = √(1 + p²/α²) factor exact for large p.
    let c = (1.0 + ratio * ratio).sqrt();
    beta * ((alpha * alpha + m * noise.sigma2()).sqrt() * m.sqrt() - 0.5 * alpha * p
        + k * p / (2.0 * alpha)
        - k * shrink * rho(c, t)
        - (n - k) * shrink * rho(1.0, t))
}

/// Maximum over `p > 0` at fixed (α, β); returns `(p, value)`.
fn p_profile(alpha: f64, beta: f64, dims: Dims, noise: NoiseLevel, lambda: f64) -> (f64, f64) {
    if beta == 0.0 {
        return (alpha, 0.0);
    }
    let val = |lp: f64| d_unchecked(alpha, beta, lp.exp(), dims, noise, lambda);
    let lo = (alpha * P_REL_MIN).ln();
    let mut hi = (alpha * P_REL_MAX).ln();
    for _ in 0..P_DOUBLINGS {
        let step = (hi - lo) / (P_GRID - 1) as f64;
        let (best, _) = (0..P_GRID)
            .map(|i| (i, val(lo + step * i as f64)))
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if best == P_GRID - 1 {
            hi += std::f64::consts::LN_2;
            continue;
        }
        let a = lo + step * best.saturating_sub(1) as f64;
        let b = lo + step * (best + 1) as f64;
        let (lp, v) = golden_max(val, a, b, INNER_XTOL);
        return (lp.exp(), v);
    }
    // The value keeps growing with p: report the last edge.
    (hi.exp(), val(hi))
}

/// `max_{0 ≤ β ≤ 1, p > 0} 𝒟(α, β, p)`.
///
/// A 64-point β grid is scanned (each β maximized over p), the best cell is
/// refined by golden-section search, and β = 1 is checked explicitly so that a
/// boundary maximizer is reported as exactly 1.
pub fn inner_max(alpha: f64, dims: Dims, noise: NoiseLevel, lambda: f64) -> Result<InnerMax> {
    check_positive("alpha", alpha)?;
    check_positive("lambda", lambda)?;
    Ok(inner_max_unchecked(alpha, dims, noise, lambda))
}

fn inner_max_unchecked(alpha: f64, dims: Dims, noise: NoiseLevel, lambda: f64) -> InnerMax {
    let profile = |b: f64| p_profile(alpha, b, dims, noise, lambda).1;
    let grid: Vec<f64> = (1..=BETA_GRID).map(|i| i as f64 / BETA_GRID as f64).collect();
    let (best, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &b)| (i, profile(b)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let hi = grid[(best + 1).min(BETA_GRID - 1)];
    let (mut beta, mut value) = golden_max(profile, lo, hi, INNER_XTOL);
    let (p_one, v_one) = p_profile(alpha, 1.0, dims, noise, lambda);
    let on_boundary = v_one >= value || 1.0 - beta <= BOUNDARY_TOL;
    let p = if on_boundary {
        beta = 1.0;
        value = v_one;
        p_one
    } else {
        p_profile(alpha, beta, dims, noise, lambda).0
    };
    InnerMax {
        beta,
        p,
        value,
        beta_on_boundary: on_boundary,
    }
}

/// Solves the scalar min-max for `σ² > 0`.
///
/// α is bracketed by geometric expansion from `σ√m` and refined by
/// golden-section search to relative tolerance 1e-9. If `g(α)` is still
/// decreasing at `1e6·σ√m` the problem has no finite minimizer and
/// [`Error::Diverged`] is returned.
pub fn solve_minmax(dims: Dims, noise: NoiseLevel, lambda: f64) -> Result<GordonSolution> {
    check_positive("lambda", lambda)?;
    noise.require_positive()?;
    let scale = noise.sigma() * (dims.m() as f64).sqrt();
    let g = |a: f64| inner_max_unchecked(a, dims, noise, lambda).value;

    let floor = ALPHA_FLOOR * scale;
    let cap = ALPHA_CAP * scale;
    let (a0, a1) = (scale, 2.0 * scale);
    let (g0, g1) = (g(a0), g(a1));
    let (lo, hi) = if g1 < g0 {
        // Walk right until g turns up.
        let (mut left, mut mid, mut g_mid) = (a0, a1, g1);
        loop {
            let right = 2.0 * mid;
            if right > cap {
                return Err(Error::Diverged {
                    what: "min-max outer search",
                    detail: format!("g(alpha) still decreasing at alpha = {mid:.6e}"),
                });
            }
            let g_right = g(right);
            if g_right >= g_mid {
                break (left, right);
            }
            (left, mid, g_mid) = (mid, right, g_right);
        }
    } else {
        // Walk left until g turns up again or the floor is reached.
        let (mut mid, mut right, mut g_mid) = (a0, a1, g0);
        loop {
            let left = 0.5 * mid;
            if left < floor {
                break (floor, right);
            }
            let g_left = g(left);
            if g_left >= g_mid {
                break (left, right);
            }
            (right, mid, g_mid) = (mid, left, g_left);
        }
    };
    let (alpha, _) = golden_min(g, lo, hi, OUTER_RTOL * hi);
    let inner = inner_max_unchecked(alpha, dims, noise, lambda);
    Ok(GordonSolution {
        alpha_star: alpha,
        beta_star: inner.beta,
        p_star: inner.p,
        d_star: inner.value,
        beta_on_boundary: inner.beta_on_boundary,
    })
}

/// Critical regularizer located operationally: the smallest λ at which the
/// saddle's β* reaches the boundary β = 1. Below it β* = λ/λ_crit lies in the
/// interior and the LASSO solution no longer depends on λ.
///
/// Bisects the boundary predicate on `[lo, hi]` to absolute tolerance `xtol`.
pub fn lambda_crit_from_oracle(
    dims: Dims,
    noise: NoiseLevel,
    lo: f64,
    hi: f64,
    xtol: f64,
) -> Result<f64> {
    let interior = |l: f64| solve_minmax(dims, noise, l).map(|s| !s.beta_on_boundary);
    if !interior(lo)? || interior(hi)? {
        return Err(Error::BracketFailure {
            what: "oracle beta-boundary transition",
            scanned: vec![(lo, f64::NAN), (hi, f64::NAN)],
        });
    }
    // Encode the predicate as a sign so the generic bisection applies.
    let mut failure = None;
    let root = bisect(
        |l| match interior(l) {
            Ok(true) => -1.0,
            Ok(false) => 1.0,
            Err(e) => {
                failure.get_or_insert(e);
                1.0
            }
        },
        lo,
        hi,
        xtol,
        "oracle beta-boundary transition",
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(root),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> Dims {
        Dims::new(500, 150, 20).unwrap()
    }

    fn noise(s2: f64) -> NoiseLevel {
        NoiseLevel::new(s2).unwrap()
    }

    #[test]
    fn beta_zero_is_exactly_zero() {
        let pt = GordonPoint { alpha: 3.0, beta: 0.0, p: 0.7 };
        assert_eq!(eval_d(pt, fig1(), noise(1.0), 1.5).unwrap(), 0.0);
    }

    #[test]
    fn alpha_zero_is_rejected() {
        let pt = GordonPoint { alpha: 0.0, beta: 0.5, p: 1.0 };
        assert!(eval_d(pt, fig1(), noise(1.0), 1.5).is_err());
        assert!(inner_max(0.0, fig1(), noise(1.0), 1.5).is_err());
    }

    #[test]
    fn oracle_requires_positive_noise() {
        assert!(solve_minmax(fig1(), NoiseLevel::zero(), 1.5).is_err());
    }

    #[test]
    fn unclamped_saddle_sits_on_beta_boundary() {
        let s = solve_minmax(fig1(), noise(0.25), 1.5).unwrap();
        assert!(s.beta_on_boundary);
        assert_eq!(s.beta_star, 1.0);
        let an = s.nse_norm(fig1(), noise(0.25));
        assert!((an - 0.67518).abs() < 1e-4, "alpha_n = {an}");
        assert!((s.d_star - 80.775).abs() < 1e-2, "d* = {}", s.d_star);
    }

    #[test]
    fn clamped_saddle_has_interior_beta() {
        let s = solve_minmax(fig1(), noise(0.25), 0.2).unwrap();
        assert!(!s.beta_on_boundary);
        assert!((s.beta_star - 0.18914).abs() < 1e-4, "beta = {}", s.beta_star);
    }

    #[test]
    fn saddle_value_matches_evaluation() {
        let s = solve_minmax(fig1(), noise(0.01), 1.5).unwrap();
        let pt = GordonPoint { alpha: s.alpha_star, beta: s.beta_star, p: s.p_star };
        let v = eval_d(pt, fig1(), noise(0.01), 1.5).unwrap();
        assert!(((v - s.d_star) / s.d_star).abs() < 1e-8);
    }
}
