//! Exact finishing steps once the first-order iterate has settled.
//!
//! * [`support_polish`] solves the optimality conditions in closed form on a
//!   fixed support and sign pattern (regime `y ≠ Ax̂`).
//! * [`l1_interpolant`] computes `min ‖x‖₁ s.t. Ax = y` by a primal simplex
//!   on the `m × m` basis (regime `y = Ax̂`, where the solution no longer
//!   depends on λ).

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

/// Basis inverses are refreshed from scratch after this many rank-one updates.
const REFACTOR_EVERY: usize = 50;
const REDUCED_COST_TOL: f64 = 1e-12;

/// Solves `A_Sᵀ(y − A_S x_S)/‖y − A_S x_S‖ = μ s` on the support and signs of `x`.
///
/// With `G = A_SᵀA_S`, `x_ls = G⁻¹A_Sᵀy`, `r_p = y − A_S x_ls` and
/// `c = sᵀG⁻¹s`, the solution is `x_S = x_ls − μ‖r‖G⁻¹s` where
/// `‖r‖ = ‖r_p‖/√(1 − μ²c)`. Returns `None` if the support is empty or not
/// smaller than `m`, if `μ²c ≥ 1`, or if the signs flip.
pub(crate) fn support_polish(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    x: &DVector<f64>,
    mu: f64,
) -> Option<DVector<f64>> {
    let support = support_of(x);
    if support.is_empty() || support.len() >= a.nrows() {
        return None;
    }
    polish_on(a, y, x, &support, mu)
}

fn polish_on(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    x: &DVector<f64>,
    support: &[usize],
    mu: f64,
) -> Option<DVector<f64>> {
    let b = a.select_columns(support);
    let signs = DVector::from_iterator(support.len(), support.iter().map(|&i| x[i].signum()));
    let chol = b.tr_mul(&b).cholesky()?;
    let x_ls = chol.solve(&b.tr_mul(y));
    let r_p = y - &b * &x_ls;
    let g_s = chol.solve(&signs);
    let c = signs.dot(&g_s);
    let slack = 1.0 - mu * mu * c;
    if slack <= 0.0 {
        return None;
    }
    let r_norm = r_p.norm() / slack.sqrt();
    let x_s = x_ls - (mu * r_norm) * g_s;
    if x_s.iter().zip(signs.iter()).any(|(v, s)| v.signum() != *s || *v == 0.0) {
        return None;
    }
    let mut out = DVector::zeros(x.len());
    for (&i, &v) in support.iter().zip(x_s.iter()) {
        out[i] = v;
    }
    Some(out)
}

/// Optimal vertex of `min ‖x‖₁ s.t. Ax = y` with its LP dual `w`
/// (`‖Aᵀw‖_∞ ≤ 1`, `A_Sᵀw = sign(x_S)`).
pub(crate) struct Interpolant {
    pub x: DVector<f64>,
    pub w: DVector<f64>,
}

pub(crate) fn support_of(x: &DVector<f64>) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, _)| i).collect()
}

/// `min ‖x‖₁ s.t. Ax = y` by primal simplex, started from the basis `start`
/// (`m` distinct column indices).
///
/// Each pivot picks the nonbasic column with the largest reduced cost
/// `|a_jᵀB⁻ᵀ sign(x_B)|`, then walks the piecewise-linear line search
/// `t ↦ t + ‖x_B − t s B⁻¹a_j‖₁` to its minimum; the basic variable whose
/// breakpoint ends the descent leaves. Stops when every reduced cost is at
/// most 1. Returns `None` on a singular basis or after `max_pivots`.
pub(crate) fn l1_interpolant(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    start: &[usize],
    max_pivots: usize,
) -> Option<Interpolant> {
    let (m, n) = a.shape();
    debug_assert_eq!(start.len(), m);
    let mut basis = start.to_vec();
    let mut in_basis = vec![false; n];
    for &j in &basis {
        in_basis[j] = true;
    }
    let mut binv = a.select_columns(&basis).lu().try_inverse()?;
    for pivot in 0..=max_pivots {
        if pivot > 0 && pivot % REFACTOR_EVERY == 0 {
            binv = a.select_columns(&basis).lu().try_inverse()?;
        }
        let x_b = &binv * y;
        let costs = DVector::from_iterator(m, x_b.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }));
        let w = binv.tr_mul(&costs);
        let g = a.tr_mul(&w);
        let (enter, g_max) = (0..n)
            .filter(|&j| !in_basis[j])
            .map(|j| (j, g[j]))
            .fold((usize::MAX, 0.0_f64), |acc, (j, v)| if v.abs() > acc.1.abs() { (j, v) } else { acc });
        if enter == usize::MAX || g_max.abs() <= 1.0 + REDUCED_COST_TOL {
            // Refresh the factorization so the returned point is as exact as possible.
            let b = a.select_columns(&basis);
            let x_b = b.clone().lu().solve(y)?;
            let costs = DVector::from_iterator(m, x_b.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }));
            let w = b.transpose().lu().solve(&costs)?;
            let mut x = DVector::zeros(n);
            for (&j, &v) in basis.iter().zip(x_b.iter()) {
                x[j] = v;
            }
            return Some(Interpolant { x, w });
        }
        if pivot == max_pivots {
            break;
        }
        let s = g_max.signum();
        let d = &binv * a.column(enter);
        let leave = ratio_test(&x_b, &d, s, 1.0 - g_max.abs())?;

        // Rank-one update of B⁻¹ for the column swap at row `leave`.
        let pivot_row = binv.row(leave) / d[leave];
        for i in 0..m {
            if i == leave {
                binv.set_row(i, &pivot_row);
            } else if d[i] != 0.0 {
                let updated = binv.row(i) - d[i] * &pivot_row;
                binv.set_row(i, &updated);
            }
        }
        in_basis[basis[leave]] = false;
        in_basis[enter] = true;
        basis[leave] = enter;
    }
    None
}

/// Line search along `x_B(t) = x_B − t s d`: starting from `slope < 0`, each
/// breakpoint `t_i = x_i/(s d_i) ≥ 0` raises the slope by `2|d_i|`; returns the
/// row at which the slope becomes nonnegative.
fn ratio_test(x_b: &DVector<f64>, d: &DVector<f64>, s: f64, mut slope: f64) -> Option<usize> {
    let mut breaks: Vec<(f64, usize)> = x_b
        .iter()
        .zip(d.iter())
        .enumerate()
        .filter_map(|(i, (&xi, &di))| {
            let sd = s * di;
            let crosses = if xi == 0.0 { sd > 0.0 } else { xi * sd > 0.0 };
            crosses.then(|| (xi / sd, i))
        })
        .collect();
    breaks.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap_or(Ordering::Equal).then(p.1.cmp(&q.1)));
    for (_, i) in breaks {
        slope += 2.0 * (s * d[i]).abs();
        if slope >= 0.0 {
            return Some(i);
        }
    }
    None
}
