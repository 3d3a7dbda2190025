//! Independent reference computations for the integration tests.
//!
//! Nothing here calls the closed forms under test: tail probabilities and ρ
//! are integrated numerically, derivatives are finite differences, and minima
//! come from grid searches.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Composite Simpson rule with `intervals` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            w * f(a + h * i as f64)
        })
        .sum();
    (f(a) + inner + f(b)) * h / 3.0
}

/// Upper normal tail `∫_x^∞ φ`, integrated up to 40 standard deviations past
/// the larger of `x` and 0.
pub fn q_quad(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - q_quad(-x);
    }
    simpson(normal_pdf, x, x + 40.0, 40_000)
}

/// `E[((|cg| − τ)⁺)²]` for `g ~ N(0, 1)`, as `2∫_{τ/c}^∞ (cg − τ)² φ(g) dg`.
pub fn rho_quad(c: f64, tau: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let lo = tau / c;
    2.0 * simpson(|g| (c * g - tau).powi(2) * normal_pdf(g), lo, lo + 40.0, 40_000)
}

/// `k(1 + λ²) + (n − k)ρ(1, λ)` with ρ from quadrature.
pub fn big_d_quad(lambda: f64, n: f64, k: f64) -> f64 {
    k * (1.0 + lambda * lambda) + (n - k) * rho_quad(1.0, lambda)
}

pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Root of a decreasing-or-increasing `f` on `[lo, hi]` by plain bisection.
pub fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    assert!(f_lo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `Q⁻¹(p)` by bisection on the quadrature tail.
pub fn q_inv_quad(p: f64) -> f64 {
    bisect_root(|x| q_quad(x) - p, -10.0, 10.0)
}

/// Minimum of `f` over `lo, lo + step, …, hi`; returns `(x, f(x))`.
pub fn grid_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let count = ((hi - lo) / step).round() as usize;
    (0..=count)
        .map(|i| lo + step * i as f64)
        .map(|x| (x, f(x)))
        .fold((f64::NAN, f64::INFINITY), |acc, (x, v)| if v < acc.1 { (x, v) } else { acc })
}

/// Nested grid search for `min f` on the box `[lo, hi]²`, refining the step by
/// 10 around the incumbent until `final_step`.
pub fn grid_min_2d(f: impl Fn(f64, f64) -> f64, lo: f64, hi: f64, final_step: f64) -> ([f64; 2], f64) {
    let mut best = ([0.0, 0.0], f64::INFINITY);
    let (mut lo0, mut hi0, mut lo1, mut hi1) = (lo, hi, lo, hi);
    let mut step = (hi - lo) / 200.0;
    loop {
        let n0 = ((hi0 - lo0) / step).round() as usize;
        let n1 = ((hi1 - lo1) / step).round() as usize;
        for i in 0..=n0 {
            for j in 0..=n1 {
                let p = [lo0 + step * i as f64, lo1 + step * j as f64];
                let v = f(p[0], p[1]);
                if v < best.1 {
                    best = (p, v);
                }
            }
        }
        if step <= final_step {
            return best;
        }
        let span = 10.0 * step;
        (lo0, hi0) = (best.0[0] - span, best.0[0] + span);
        (lo1, hi1) = (best.0[1] - span, best.0[1] + span);
        step = (step / 10.0).max(final_step);
    }
}

/// `‖y − Ax‖ + μ‖x‖₁`.
pub fn sqrt_lasso_objective(a: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>, mu: f64) -> f64 {
    (y - a * x).norm() + mu * x.lp_norm(1)
}

/// Stationarity residual of `‖y − Ax‖ + μ‖x‖₁` at `x`, rebuilt from scratch:
/// `u = r/‖r‖` for a nonzero residual, otherwise the pseudo-inverse solution
/// of the support equations `A_Sᵀu = μ sign(x_S)`.
pub fn stationarity_residual(a: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>, mu: f64) -> f64 {
    let r = y - a * x;
    let u = if r.norm() > 1e-10 * y.norm().max(1.0) {
        &r / r.norm()
    } else {
        let support: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
        let a_s = a.select_columns(&support);
        let s = DVector::from_iterator(support.len(), support.iter().map(|&j| mu * x[j].signum()));
        let pinv = a_s.transpose().pseudo_inverse(1e-12).expect("pseudo-inverse");
        let u = pinv * s;
        assert!(u.norm() <= 1.0 + 1e-9, "support equations need ‖u‖ = {} > 1", u.norm());
        u
    };
    let g = a.transpose() * &u;
    (0..x.len())
        .map(|j| {
            let v = if x[j] != 0.0 { x[j].signum() } else { (g[j] / mu).clamp(-1.0, 1.0) };
            (mu * v - g[j]).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Standard normal draws by Box-Muller on a ChaCha8 stream (deliberately a
/// different generator from the library's).
pub struct NormalStream(ChaCha8Rng);

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        NormalStream(ChaCha8Rng::seed_from_u64(seed))
    }

    fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn next(&mut self) -> f64 {
        let (u1, u2) = (self.uniform(), self.uniform());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// One sample of the scalarized auxiliary objective `φ_o(α, β, p)`, built
/// directly from its soft-threshold sums with fresh Gaussian `g ∈ ℝᵐ`,
/// `h ∈ ℝⁿ`, scalar `g₀` and `x₀` standard normal on the first `k` entries.
pub fn scalarized_objective_sample(
    (n, m, k): (usize, usize, usize),
    sigma2: f64,
    lambda: f64,
    (alpha, beta, p): (f64, f64, f64),
    rng: &mut NormalStream,
) -> f64 {
    let sigma = sigma2.sqrt();
    let g_norm = (0..m).map(|_| rng.next().powi(2)).sum::<f64>().sqrt();
    let g0 = rng.next();
    let tau = lambda / beta;
    let shrink = |r: f64| (r.abs() - tau).max(0.0).powi(2);
    let mut inner = alpha * p / 2.0;
    for _ in 0..k {
        let (h, x0) = (rng.next(), rng.next());
        inner += alpha / (2.0 * p) * shrink(h + p * x0 / alpha) - p * x0 * x0 / (2.0 * alpha) - h * x0;
    }
    for _ in k..n {
        inner += alpha / (2.0 * p) * shrink(rng.next());
    }
    beta * ((alpha * alpha + m as f64 * sigma2).sqrt() * g_norm - (m as f64).sqrt() * g0 * sigma - inner)
}
