//! Analytic error predictions and critical regularizer values.
//!
//! All predictions are reported in the normalized unit `‖x̂ − x₀‖/(σ√m)`.

use serde::{Deserialize, Serialize};

use crate::analytics::{big_d, big_d_prime, check_positive, f_map, f_map_zero_phi, lambda_over_psi, psi_argument};
use crate::dims::{Dims, NoiseLevel};
use crate::error::{Error, Result};
use crate::gaussian::q_inv;
use crate::gordon::{lambda_crit_from_oracle, solve_minmax};
use crate::roots::{bisect, scan_sign_changes, Samples, SignScan};

/// Grid step of the sign-change scan for the critical regularizer.
const CRIT_SCAN_STEP: f64 = 1e-3;
/// Absolute tolerance of every scalar root in λ.
const LAMBDA_XTOL: f64 = 1e-10;
/// Largest normalized error searched before a fixed point is declared divergent.
const NSE_CAP: f64 = 1e6;
const NSE_SCAN_POINTS: usize = 400;

/// Which formula produced a [`Prediction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FixedPoint,
    ZeroNoise,
    Oracle,
}

/// Predicted normalized error at one regularizer value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Predicted `‖x̂ − x₀‖/(σ√m)`; `None` when divergent.
    pub nse_norm: Option<f64>,
    pub lambda_input: f64,
    /// `λ̂ = max{λ, λ_crit}`.
    pub lambda_effective: f64,
    pub clamped: bool,
    pub divergent: bool,
    pub method: Method,
    /// The fixed-point scan found more than one sign change; the smallest root
    /// is reported.
    #[serde(default)]
    pub multiple_roots: bool,
}

/// Critical regularizer values of a problem geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub lambda_crit_min: f64,
    pub lambda_crit_zero: f64,
    /// Present only when a positive noise level was supplied.
    pub lambda_crit_sigma: Option<f64>,
    pub lambda_best: f64,
    pub lambda_max: f64,
    /// `min_λ D(λ) = D(λ_best)`.
    pub min_d: f64,
}

/// `λ_crit^0 = Q⁻¹((m − k)/(2(n − k)))`.
pub fn lambda_crit_zero(dims: Dims) -> f64 {
    let (n, k, m) = dims.nkm();
    q_inv(0.5 * (m - k) / (n - k)).expect("0 < (m-k)/(2(n-k)) < 1/2 under the Dims invariants")
}

/// `λ_crit^min = Q⁻¹(m/(2(n − k)))` if `m < n − k`, else 0.
pub fn lambda_crit_min(dims: Dims) -> f64 {
    let (n, k, m) = dims.nkm();
    if m < n - k {
        q_inv(0.5 * m / (n - k)).expect("0 < m/(2(n-k)) < 1/2 when m < n - k")
    } else {
        0.0
    }
}

/// `h(x) = f(x, ψ(x))`, extended by its limits: `ψ → 0⁺` where the Q⁻¹
/// argument is nonpositive and `ψ → ∞` (so `h → −∞` for σ > 0) where it
/// reaches 1/2.
fn crit_equation(x: f64, dims: Dims, noise: NoiseLevel) -> f64 {
    let a = psi_argument(x, dims);
    if a <= 0.0 {
        return f_map_zero_phi(x, dims, noise);
    }
    match lambda_over_psi(x, dims) {
        Ok(r) if r > 0.0 => f_map(x, x / r, dims, noise),
        _ => f64::NEG_INFINITY,
    }
}

/// Sign changes of `f(x, ψ(x))` on `[λ_crit^min, λ_crit^0]`, scanned at step
/// 1e-3 and bisected to 1e-10. Returns every root found together with the scan.
fn crit_roots(dims: Dims, noise: NoiseLevel) -> Result<(Vec<f64>, Samples)> {
    noise.require_positive()?;
    let lo = lambda_crit_min(dims).max(LAMBDA_XTOL);
    let hi = lambda_crit_zero(dims);
    let cells = ((hi - lo) / CRIT_SCAN_STEP).ceil().max(1.0) as usize;
    let points: Vec<f64> = (0..=cells)
        .map(|i| lo + (hi - lo) * i as f64 / cells as f64)
        .collect();
    let h = |x: f64| crit_equation(x, dims, noise);
    let SignScan {
        mut brackets,
        samples: scanned,
    } = scan_sign_changes(h, &points);
    // The endpoint value is −∞; the filter in the scan drops that cell, so test it here.
    if let [.., (x0, v0), (x1, v1)] = scanned[..] {
        if v0.is_finite() && v0 > 0.0 && v1 == f64::NEG_INFINITY {
            brackets.push((x0, x1));
        }
    }
    let roots = brackets
        .into_iter()
        .map(|(a, b)| bisect(h, a, b, LAMBDA_XTOL, "lambda_crit_sigma"))
        .collect::<Result<Vec<_>>>()?;
    Ok((roots, scanned))
}

/// λ_crit^σ from the critical-value equation alone; fails with
/// [`Error::BracketFailure`] (carrying the scan) if no sign change exists.
pub fn lambda_crit_sigma_equation(dims: Dims, noise: NoiseLevel) -> Result<f64> {
    let (roots, scanned) = crit_roots(dims, noise)?;
    if roots.len() > 1 {
        log::warn!("lambda_crit_sigma: {} roots found, using the smallest", roots.len());
    }
    roots.first().copied().ok_or(Error::BracketFailure {
        what: "lambda_crit_sigma",
        scanned,
    })
}

/// λ_crit^σ for `σ² > 0`.
///
/// Solves `f(x, ψ(x)) = 0` inside `[λ_crit^min, λ_crit^0]`. If the scan finds
/// no sign change, the value is taken from the min-max oracle's β-boundary
/// transition instead and the event is logged; the original bracket failure is
/// returned if the oracle fails as well.
pub fn lambda_crit_sigma(dims: Dims, noise: NoiseLevel) -> Result<f64> {
    match lambda_crit_sigma_equation(dims, noise) {
        Err(err @ Error::BracketFailure { .. }) => {
            log::warn!("{err}; falling back to the min-max oracle");
            let lo = 0.5 * lambda_crit_min(dims).max(1e-3);
            let hi = 1.5 * lambda_crit_zero(dims);
            lambda_crit_from_oracle(dims, noise, lo, hi, 1e-6).map_err(|_| err)
        }
        other => other,
    }
}

/// Fixed-point argument `q*` written in the normalized unit:
/// `q* = √(1 + m/(σ²(m + α²)))` with `α = √m · nse_norm`.
fn q_star(nse_norm: f64, noise: NoiseLevel) -> f64 {
    (1.0 + 1.0 / (noise.sigma2() * (1.0 + nse_norm * nse_norm))).sqrt()
}

/// Fixed-point prediction for `σ² > 0`.
///
/// With `λ̂ = max{λ, λ_crit^σ}`, solves `f(λ̂, q*(α)) = 0` for the normalized
/// error. No sign change up to 1e6 marks the prediction divergent.
pub fn predict_nse(lambda: f64, dims: Dims, noise: NoiseLevel) -> Result<Prediction> {
    check_positive("lambda", lambda)?;
    noise.require_positive()?;
    let crit = lambda_crit_sigma(dims, noise)?;
    let clamped = lambda < crit;
    let lambda_hat = lambda.max(crit);
    let g = |a: f64| f_map(lambda_hat, q_star(a, noise), dims, noise);

    let mut points = vec![0.0];
    let ratio = (NSE_CAP / 1e-8_f64).ln() / (NSE_SCAN_POINTS - 1) as f64;
    points.extend((0..NSE_SCAN_POINTS).map(|i| 1e-8 * (ratio * i as f64).exp()));
    let brackets = scan_sign_changes(g, &points).brackets;

    let base = Prediction {
        nse_norm: None,
        lambda_input: lambda,
        lambda_effective: lambda_hat,
        clamped,
        divergent: true,
        method: Method::FixedPoint,
        multiple_roots: brackets.len() > 1,
    };
    let Some(&(a, b)) = brackets.first() else {
        return Ok(base);
    };
    let root = bisect(g, a, b, 1e-12 * b.max(1.0), "fixed point")?;
    Ok(Prediction {
        nse_norm: Some(root),
        divergent: false,
        ..base
    })
}

/// Zero-noise limit: `√(D(λ̂)/(m − D(λ̂)))` with `λ̂ = max{λ, λ_crit^0}`;
/// divergent when `m ≤ D(λ̂)`.
pub fn predict_nse_zero_noise(lambda: f64, dims: Dims) -> Result<Prediction> {
    check_positive("lambda", lambda)?;
    let crit = lambda_crit_zero(dims);
    let lambda_hat = lambda.max(crit);
    let d = big_d(lambda_hat, dims);
    let m = dims.m() as f64;
    let divergent = m <= d;
    Ok(Prediction {
        nse_norm: (!divergent).then(|| (d / (m - d)).sqrt()),
        lambda_input: lambda,
        lambda_effective: lambda_hat,
        clamped: lambda < crit,
        divergent,
        method: Method::ZeroNoise,
        multiple_roots: false,
    })
}

/// Prediction read directly off the min-max saddle: `α*/(σ√m)`. In the
/// clamped regime `λ̂ = λ/β*`.
pub fn predict_nse_oracle(lambda: f64, dims: Dims, noise: NoiseLevel) -> Result<Prediction> {
    let base = Prediction {
        nse_norm: None,
        lambda_input: lambda,
        lambda_effective: lambda,
        clamped: false,
        divergent: true,
        method: Method::Oracle,
        multiple_roots: false,
    };
    match solve_minmax(dims, noise, lambda) {
        Ok(s) => Ok(Prediction {
            nse_norm: Some(s.nse_norm(dims, noise)),
            lambda_effective: if s.beta_on_boundary { lambda } else { lambda / s.beta_star },
            clamped: !s.beta_on_boundary,
            divergent: false,
            ..base
        }),
        Err(Error::Diverged { .. }) => Ok(base),
        Err(e) => Err(e),
    }
}

/// `λ_best = argmin_{λ > 0} D(λ)`, the root of `D′`.
pub fn lambda_best(dims: Dims) -> f64 {
    let mut hi = 1.0;
    while big_d_prime(hi, dims) <= 0.0 {
        hi *= 2.0;
    }
    bisect(|l| big_d_prime(l, dims), 0.0, hi, 1e-12, "lambda_best")
        .expect("D' < 0 at 0 and D' > 0 at the expanded end")
}

/// Largest root of `D(λ) = m`; errors with [`Error::NoStableRegion`] if
/// `m ≤ min D`.
pub fn lambda_max(dims: Dims) -> Result<f64> {
    let best = lambda_best(dims);
    let m = dims.m() as f64;
    let min_d = big_d(best, dims);
    if m <= min_d {
        return Err(Error::NoStableRegion { m: dims.m(), min_d });
    }
    let mut hi = 2.0 * best.max(0.5);
    while big_d(hi, dims) <= m {
        hi *= 2.0;
    }
    bisect(|l| big_d(l, dims) - m, best, hi, 1e-13, "lambda_max")
}

/// All critical values; `lambda_crit_sigma` is computed only for `σ² > 0`.
pub fn critical_values(dims: Dims, noise: Option<NoiseLevel>) -> Result<CriticalValues> {
    let lambda_crit_sigma = match noise {
        Some(nl) if !nl.is_zero() => Some(lambda_crit_sigma(dims, nl)?),
        _ => None,
    };
    let best = lambda_best(dims);
    Ok(CriticalValues {
        lambda_crit_min: lambda_crit_min(dims),
        lambda_crit_zero: lambda_crit_zero(dims),
        lambda_crit_sigma,
        lambda_best: best,
        lambda_max: lambda_max(dims)?,
        min_d: big_d(best, dims),
    })
}
