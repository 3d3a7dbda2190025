//! Closed-form scalar quantities behind every prediction.
//!
//! * `ρ(c, τ) = E[((|c g| − τ)⁺)²]`, the expected squared soft-threshold residual;
//! * `D(λ) = k(1 + λ²) + (n − k) ρ(1, λ)`, the sample-complexity functional;
//! * `C(λ) = −(λ/2) D′(λ)`;
//! * `ψ(λ)` and the map `f(λ, φ)` whose roots locate the critical regularizer and
//!   the fixed-point error.

use crate::dims::{Dims, NoiseLevel};
use crate::error::{Error, Result};
use crate::gaussian::{q_func, q_inv, two_q_minus_one, SQRT_2_OVER_PI};

/// `ρ(c, τ) = 2(c² + τ²) Q(τ/c) − √(2/π) c τ exp(−τ²/(2c²))`, with `ρ(0, τ) = 0`.
pub fn rho(c: f64, tau: f64) -> f64 {
    debug_assert!(c >= 0.0 && tau >= 0.0, "rho({c}, {tau})");
    if c == 0.0 {
        return 0.0;
    }
    let t = tau / c;
    let unit = 2.0 * (1.0 + t * t) * q_func(t) - SQRT_2_OVER_PI * t * (-0.5 * t * t).exp();
    c * c * unit.max(0.0)
}

/// `∂ρ(1, τ)/∂τ = 4τQ(τ) − 2√(2/π) exp(−τ²/2)`.
pub fn rho_unit_dtau(tau: f64) -> f64 {
    4.0 * tau * q_func(tau) - 2.0 * SQRT_2_OVER_PI * (-0.5 * tau * tau).exp()
}

/// `D(λ) = k(1 + λ²) + (n − k) ρ(1, λ)`. `D(0) = n`.
pub fn big_d(lambda: f64, dims: Dims) -> f64 {
    let (n, k, _) = dims.nkm();
    k * (1.0 + lambda * lambda) + (n - k) * rho(1.0, lambda)
}

/// Analytic derivative `D′(λ) = 2kλ + (n − k)(4λQ(λ) − 2√(2/π) e^{−λ²/2})`.
pub fn big_d_prime(lambda: f64, dims: Dims) -> f64 {
    let (n, k, _) = dims.nkm();
    2.0 * k * lambda + (n - k) * rho_unit_dtau(lambda)
}

/// `C(λ) = −(λ/2) D′(λ)`.
pub fn big_c(lambda: f64, dims: Dims) -> f64 {
    -0.5 * lambda * big_d_prime(lambda, dims)
}

/// The argument of Q⁻¹ inside ψ: `a(λ) = 1/2 + (m − D(λ) − C(λ))/(2k)`.
///
/// `a` is increasing on the relevant range; `a(λ_crit^min) = 0` and
/// `a(λ_crit^0) = 1/2`.
pub fn psi_argument(lambda: f64, dims: Dims) -> f64 {
    let (_, k, m) = dims.nkm();
    0.5 + (m - big_d(lambda, dims) - big_c(lambda, dims)) / (2.0 * k)
}

/// Value of `ψ(λ) = λ / Q⁻¹(a(λ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psi {
    Finite(f64),
    /// `a(λ) = 1/2`: Q⁻¹ vanishes and ψ is infinite.
    Infinite,
}

impl Psi {
    pub fn finite(self) -> Option<f64> {
        match self {
            Psi::Finite(v) => Some(v),
            Psi::Infinite => None,
        }
    }
}

/// `ψ(λ) = λ / Q⁻¹(1/2 + (m − D(λ) − C(λ))/(2k))`.
///
/// Returns [`Error::Domain`] when the Q⁻¹ argument leaves (0, 1) and
/// [`Psi::Infinite`] when it equals 1/2 exactly.
pub fn psi(lambda: f64, dims: Dims) -> Result<Psi> {
    check_positive("lambda", lambda)?;
    let ratio = lambda_over_psi(lambda, dims)?;
    if ratio == 0.0 {
        Ok(Psi::Infinite)
    } else {
        Ok(Psi::Finite(lambda / ratio))
    }
}

/// `λ/ψ(λ) = Q⁻¹(a(λ))`, finite wherever `a ∈ (0, 1)`, including `a = 1/2`.
pub fn lambda_over_psi(lambda: f64, dims: Dims) -> Result<f64> {
    let a = psi_argument(lambda, dims);
    q_inv(a).map_err(|_| Error::Domain {
        what: "psi: Q^-1 argument",
        value: a,
        domain: "(0, 1)",
    })
}

/// `f(λ, φ) = m − D(λ) + mσ²(1 − φ²) + k(φ² − λ² − 2)(2Q(λ/φ) − 1)
///            + k√(2/π) λφ exp(−λ²/(2φ²))`.
///
/// `φ = 0` returns the right limit [`f_map_zero_phi`]. For `λ/φ > 8` the tail
/// `2Q − 1` is formed in log space.
pub fn f_map(lambda: f64, phi: f64, dims: Dims, noise: NoiseLevel) -> f64 {
    debug_assert!(phi >= 0.0);
    if phi == 0.0 {
        return f_map_zero_phi(lambda, dims, noise);
    }
    let (_, k, m) = dims.nkm();
    let s2 = noise.sigma2();
    let t = lambda / phi;
    let phi2 = phi * phi;
    let gauss = if t > 40.0 { 0.0 } else { (-0.5 * t * t).exp() };
    m - big_d(lambda, dims)
        + m * s2 * (1.0 - phi2)
        + k * (phi2 - lambda * lambda - 2.0) * two_q_minus_one(t)
        + k * SQRT_2_OVER_PI * lambda * phi * gauss
}

/// `lim_{φ→0⁺} f(λ, φ) = m − D(λ) + mσ² + k(λ² + 2)`.
pub fn f_map_zero_phi(lambda: f64, dims: Dims, noise: NoiseLevel) -> f64 {
    let (_, k, m) = dims.nkm();
    m - big_d(lambda, dims) + m * noise.sigma2() + k * (lambda * lambda + 2.0)
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> Dims {
        Dims::new(500, 150, 20).unwrap()
    }

    #[test]
    fn rho_at_zero_threshold_is_second_moment() {
        assert!((rho(1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((rho(2.5, 0.0) - 6.25).abs() < 1e-13);
        assert_eq!(rho(0.0, 1.0), 0.0);
        assert_eq!(rho(0.0, 0.0), 0.0);
    }

    #[test]
    fn d_at_zero_is_n() {
        assert_eq!(big_d(0.0, fig1()), 500.0);
    }

    #[test]
    fn c_vanishes_at_zero() {
        assert_eq!(big_c(0.0, fig1()), 0.0);
    }

    #[test]
    fn psi_argument_closed_form() {
        // D + C = k + 2(n − k)Q(λ), so a = 1/2 + (m − k − 2(n − k)Q(λ))/(2k).
        let d = fig1();
        for &l in &[0.3, 1.0, 1.7, 3.0] {
            let alt = 0.5 + (150.0 - 20.0 - 960.0 * q_func(l)) / 40.0;
            assert!((psi_argument(l, d) - alt).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_domain_and_sample_value() {
        let d = fig1();
        assert!(matches!(psi(1.5, d), Err(Error::Domain { .. })));
        assert!(matches!(psi(1.0, d), Err(Error::Domain { .. })));
        assert!(psi(0.0, d).is_err());
        let a = psi_argument(1.05, d);
        assert!((a - 0.226).abs() < 1e-3, "a = {a}");
        let v = psi(1.05, d).unwrap().finite().unwrap();
        assert!((v - 1.40).abs() < 0.02, "psi = {v}");
        assert!((lambda_over_psi(1.05, d).unwrap() - 1.05 / v).abs() < 1e-14);
    }

    #[test]
    fn f_map_zero_phi_limit_and_noise_term() {
        let d = fig1();
        let quiet = NoiseLevel::zero();
        let lim = f_map_zero_phi(1.101, d, quiet);
        assert!((lim - 112.0).abs() < 1.0, "limit = {lim}");
        assert!((f_map(1.101, 1e-8, d, quiet) - lim).abs() < 1e-9);
        assert_eq!(f_map(1.101, 0.0, d, quiet), lim);

        let noisy = NoiseLevel::new(0.1).unwrap();
        let diff = f_map(1.2, 0.5, d, noisy) - f_map(1.2, 0.5, d, quiet);
        assert!((diff - 11.25).abs() < 1e-10);
    }

    #[test]
    fn f_map_term_by_term_value() {
        let v = f_map(1.05, 0.752, fig1(), NoiseLevel::zero());
        assert!((v - 90.5).abs() < 0.5, "f = {v}");
    }
}
