//! First-order optimality certificate for `‖y − Ax‖ + μ‖x‖₁`.
//!
//! `x` is optimal iff some `u` with `‖u‖ ≤ 1`, `u = r/‖r‖` when `r = y − Ax ≠ 0`,
//! and some `v ∈ ∂‖x‖₁` satisfy `−Aᵀu + μv = 0`. The certificate builds the
//! natural witnesses from `x` alone and reports `‖−Aᵀu + μv‖`.

use nalgebra::{DMatrix, DVector};

/// Relative size below which the residual `y − Ax` is treated as zero.
pub const ZERO_RESIDUAL_RTOL: f64 = 1e-10;

/// Dual witnesses and the stationarity residual they leave.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// `‖−Aᵀu + μv‖`.
    pub residual: f64,
    /// Dual witness `u`, `‖u‖ ≤ 1`.
    pub u: DVector<f64>,
    /// `y = Ax` to working precision; `u` then comes from the support equations.
    pub interpolating: bool,
}

/// Builds the witnesses for `x` and evaluates the stationarity residual.
///
/// With a nonzero residual `u = r/‖r‖`. When `y = Ax`, `u` is the minimum-norm
/// solution of `A_Sᵀu = μ sign(x_S)`, pulled back into the unit ball if needed.
/// Off the support `v_i = clip((Aᵀu)_i/μ, ±1)`.
pub fn certificate(a: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>, mu: f64) -> Certificate {
    certificate_with_hint(a, y, x, mu, None)
}

/// As [`certificate`], but when `y = Ax` the dual is not unique and the
/// minimum-norm choice can violate `|(Aᵀu)_i| ≤ μ` off the support. A `hint`
/// (typically the solver's dual iterate) is then projected onto the support
/// equations and kept if it leaves a smaller residual.
pub fn certificate_with_hint(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    x: &DVector<f64>,
    mu: f64,
    hint: Option<&DVector<f64>>,
) -> Certificate {
    let r = y - a * x;
    let r_norm = r.norm();
    let interpolating = r_norm <= ZERO_RESIDUAL_RTOL * y.norm().max(1.0);
    if !interpolating {
        let u = r / r_norm;
        return Certificate {
            residual: stationarity(a, x, &u, mu),
            u,
            interpolating,
        };
    }
    let support: Vec<usize> = x.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, _)| i).collect();
    let mut best = {
        let u = min_norm_dual(a, x, &support, mu);
        (stationarity(a, x, &u, mu), u)
    };
    if let Some(u) = hint.and_then(|h| project_dual(a, x, &support, mu, h)) {
        let residual = stationarity(a, x, &u, mu);
        if residual < best.0 {
            best = (residual, u);
        }
    }
    Certificate {
        residual: best.0,
        u: best.1,
        interpolating,
    }
}

/// `‖−Aᵀu + μv‖` with `v_i = sign(x_i)` on the support and the closest
/// admissible value elsewhere.
fn stationarity(a: &DMatrix<f64>, x: &DVector<f64>, u: &DVector<f64>, mu: f64) -> f64 {
    a.tr_mul(u)
        .iter()
        .zip(x.iter())
        .map(|(&g, &xi)| {
            let v = if xi != 0.0 {
                xi.signum()
            } else {
                (g / mu).clamp(-1.0, 1.0)
            };
            let e = -g + mu * v;
            e * e
        })
        .sum::<f64>()
        .sqrt()
}

fn support_rhs(x: &DVector<f64>, support: &[usize], mu: f64) -> DVector<f64> {
    DVector::from_iterator(support.len(), support.iter().map(|&i| mu * x[i].signum()))
}

fn into_unit_ball(mut u: DVector<f64>) -> DVector<f64> {
    let norm = u.norm();
    if norm > 1.0 {
        u /= norm;
    }
    u
}

fn min_norm_dual(a: &DMatrix<f64>, x: &DVector<f64>, support: &[usize], mu: f64) -> DVector<f64> {
    if support.is_empty() {
        return DVector::zeros(a.nrows());
    }
    let u = a
        .select_columns(support)
        .transpose()
        .svd(true, true)
        .solve(&support_rhs(x, support, mu), 1e-13)
        .unwrap_or_else(|_| DVector::zeros(a.nrows()));
    into_unit_ball(u)
}

/// Closest point to `hint` on `{u : A_Sᵀu = μ sign(x_S)}`.
fn project_dual(
    a: &DMatrix<f64>,
    x: &DVector<f64>,
    support: &[usize],
    mu: f64,
    hint: &DVector<f64>,
) -> Option<DVector<f64>> {
    if hint.len() != a.nrows() {
        return None;
    }
    if support.is_empty() {
        return Some(into_unit_ball(hint.clone()));
    }
    let a_s = a.select_columns(support);
    let gap = support_rhs(x, support, mu) - a_s.tr_mul(hint);
    let coef = a_s.tr_mul(&a_s).cholesky()?.solve(&gap);
    Some(into_unit_ball(hint + a_s * coef))
}
