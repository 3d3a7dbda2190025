//! One-dimensional root bracketing and golden-section search.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Bisection on `[lo, hi]`; `f(lo)` and `f(hi)` must have opposite signs
/// (a zero at either end is returned immediately).
///
/// Stops when the bracket is narrower than `xtol`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, what: &'static str) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(Error::BracketFailure {
            what,
            scanned: vec![(lo, flo), (hi, fhi)],
        });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(argmax, max)`. The interval shrinks until its width falls below
/// `xtol` (absolute).
pub fn golden_max<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= xtol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Golden-section search for the minimum; see [`golden_max`].
pub fn golden_min<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (x, v) = golden_max(|x| -f(x), lo, hi, xtol);
    (x, -v)
}

/// `(x, f(x))` pairs from a scan.
pub type Samples = Vec<(f64, f64)>;

/// Result of [`scan_sign_changes`].
#[derive(Debug, Clone, PartialEq)]
pub struct SignScan {
    /// Adjacent scan points with finite values of opposite sign.
    pub brackets: Vec<(f64, f64)>,
    pub samples: Samples,
}

/// Evaluates `f` on `points` and collects every adjacent pair whose values
/// change sign.
pub fn scan_sign_changes<F>(mut f: F, points: &[f64]) -> SignScan
where
    F: FnMut(f64) -> f64,
{
    let samples: Samples = points.iter().map(|&x| (x, f(x))).collect();
    let brackets = samples
        .windows(2)
        .filter(|w| w[0].1.is_finite() && w[1].1.is_finite() && w[0].1.signum() != w[1].1.signum())
        .map(|w| (w[0].0, w[1].0))
        .collect();
    SignScan { brackets, samples }
}
