//! Standard normal tail function `Q`, its inverse, and related helpers.
//!
//! `Q(x) = P(g > x)` for `g ~ N(0, 1)` is evaluated through the complementary
//! error function, `Q(x) = erfc(x/√2)/2`, which keeps full relative accuracy
//! deep into the upper tail. The inverse starts from a rational approximation
//! of the normal quantile and is polished by Newton steps on `Q` itself.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// `1/√(2π)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `√(2/π)`.
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Upper-tail probability `Q(x) = P(g > x)`.
pub fn q_func(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `2Q(x) − 1 = −erf(x/√2)`, without the cancellation of computing it from `Q`.
///
/// Beyond `x = 8` the result is `−(1 − 2Q(x))` with `Q` taken from [`ln_q`].
pub fn two_q_minus_one(x: f64) -> f64 {
    if x.abs() <= 8.0 {
        -libm::erf(x * FRAC_1_SQRT_2)
    } else {
        let tail = 2.0 * ln_q(x.abs()).exp();
        -(1.0 - tail).copysign(x)
    }
}

/// Natural log of `Q(x)`, finite for every finite `x`.
pub fn ln_q(x: f64) -> f64 {
    if x < 30.0 {
        q_func(x).ln()
    } else {
        // Asymptotic Mills-ratio expansion; erfc underflows past x ≈ 38.
        let r = 1.0 / (x * x);
        -0.5 * x * x - x.ln() - 0.5 * (2.0 * PI).ln() + (1.0 - r + 3.0 * r * r - 15.0 * r * r * r).ln()
    }
}

/// Inverse of [`q_func`]: the `x` with `Q(x) = p`.
///
/// Fails with [`Error::Domain`] for `p ∉ (0, 1)`.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            what: "Q^-1",
            value: p,
            domain: "(0, 1)",
        });
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Q⁻¹(p) = Φ⁻¹(1 − p) = −Φ⁻¹(p).
    let mut x = -normal_quantile_guess(p);
    for _ in 0..6 {
        let step = (q_func(x) - p) / pdf(x);
        if !step.is_finite() {
            break;
        }
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1e-300) {
            break;
        }
    }
    Ok(x)
}

/// Rational approximation of the lower-tail normal quantile Φ⁻¹(p)
/// (Acklam), relative error about 1e-9.
fn normal_quantile_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}
