//! Problem dimensions and noise level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ambient dimension `n`, number of measurements `m` and sparsity `k`.
///
/// Always satisfies `0 < k < m < n` (the underdetermined regime).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDims", into = "RawDims")]
pub struct Dims {
    n: usize,
    m: usize,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct RawDims {
    n: usize,
    m: usize,
    k: usize,
}

impl TryFrom<RawDims> for Dims {
    type Error = Error;
    fn try_from(raw: RawDims) -> Result<Self> {
        Dims::new(raw.n, raw.m, raw.k)
    }
}

impl From<Dims> for RawDims {
    fn from(d: Dims) -> Self {
        RawDims {
            n: d.n,
            m: d.m,
            k: d.k,
        }
    }
}

impl Dims {
    pub fn new(n: usize, m: usize, k: usize) -> Result<Self> {
        let fail = |reason| Err(Error::InvalidDims { n, m, k, reason });
        if k == 0 {
            return fail("sparsity k must be positive");
        }
        if k >= m {
            return fail("k must be smaller than m");
        }
        if m >= n {
            return fail("m must be smaller than n (underdetermined regime)");
        }
        Ok(Dims { n, m, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Undersampling ratio m/n.
    pub fn delta(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    /// Sparsity ratio k/m.
    pub fn gamma(&self) -> f64 {
        self.k as f64 / self.m as f64
    }

    pub(crate) fn nkm(&self) -> (f64, f64, f64) {
        (self.n as f64, self.k as f64, self.m as f64)
    }
}

/// Noise variance σ² ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct NoiseLevel {
    sigma2: f64,
}

impl NoiseLevel {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !sigma2.is_finite() || sigma2 < 0.0 {
            return Err(Error::InvalidArgument {
                name: "sigma2",
                value: sigma2,
                reason: "noise variance must be finite and nonnegative",
            });
        }
        Ok(NoiseLevel { sigma2 })
    }

    /// The noiseless level σ² = 0.
    pub fn zero() -> Self {
        NoiseLevel { sigma2: 0.0 }
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.sigma2 == 0.0
    }

    /// Fails unless σ² > 0.
    pub(crate) fn require_positive(&self) -> Result<()> {
        if self.sigma2 > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument {
                name: "sigma2",
                value: self.sigma2,
                reason: "this computation requires a strictly positive noise variance",
            })
        }
    }
}
