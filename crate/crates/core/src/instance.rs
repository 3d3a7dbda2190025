//! Seeded Gaussian problem instances.
//!
//! Sampling is fully determined by the 64-bit seed:
//!
//! * the ChaCha20 key is the seed in little-endian order followed by 24 zero bytes;
//! * stream 0 fills `A` in column-major order, stream 1 the `k` support values of
//!   `x₀`, stream 2 the noise `z`;
//! * each stream produces uniforms `u = (w >> 11)·2⁻⁵³` from successive 64-bit
//!   words `w`, and standard normals by Box–Muller on consecutive pairs
//!   `(u₁, u₂)`: `√(−2 ln(1 − u₁))·cos(2πu₂)` then `…·sin(2πu₂)`;
//! * `A` is scaled by `1/√m`, `z` by `σ`, and `y = A x₀ + z` is computed.
//!
//! The support is always `{0, …, k − 1}`.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::dims::{Dims, NoiseLevel};
use crate::error::{Error, Result};

const STREAM_DESIGN: u64 = 0;
const STREAM_SIGNAL: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// One draw of `(A, x₀, z)` with `y = A x₀ + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub dims: Dims,
    pub sigma2: f64,
    pub seed: u64,
    /// `m × n`, entries `N(0, 1/m)`, column-major.
    pub a: DMatrix<f64>,
    pub x0: DVector<f64>,
    pub z: DVector<f64>,
    pub y: DVector<f64>,
    pub support: Vec<usize>,
}

/// Standard normal sampler over one ChaCha20 stream.
struct NormalStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl NormalStream {
    fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(stream);
        NormalStream { rng, spare: None }
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn next(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

impl ProblemInstance {
    /// Samples an instance. `σ² = 0` gives `z = 0` exactly.
    pub fn generate(dims: Dims, noise: NoiseLevel, seed: u64) -> Self {
        let (n, m, k) = (dims.n(), dims.m(), dims.k());
        let scale = 1.0 / (m as f64).sqrt();
        let mut design = NormalStream::new(seed, STREAM_DESIGN);
        let a = DMatrix::from_iterator(m, n, (0..m * n).map(|_| design.next() * scale));

        let mut signal = NormalStream::new(seed, STREAM_SIGNAL);
        let mut x0 = DVector::zeros(n);
        for i in 0..k {
            x0[i] = signal.next();
        }

        let z = if noise.is_zero() {
            DVector::zeros(m)
        } else {
            let mut stream = NormalStream::new(seed, STREAM_NOISE);
            let sigma = noise.sigma();
            DVector::from_fn(m, |_, _| stream.next() * sigma)
        };
        let y = &a * &x0 + &z;
        ProblemInstance {
            dims,
            sigma2: noise.sigma2(),
            seed,
            a,
            x0,
            z,
            y,
            support: (0..k).collect(),
        }
    }

    /// `‖x − x₀‖`.
    pub fn error_norm(&self, x: &DVector<f64>) -> f64 {
        (x - &self.x0).norm()
    }

    /// Writes the instance in the binary container described in the guide:
    /// magic `SQLI`, format version (u32), then `n, m, k` (u64), `σ²` (f64),
    /// seed (u64), and the entries of `A` (column-major), `x₀` and `z` as f64,
    /// all little-endian. `y` is recomputed on load.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        for v in [self.dims.n(), self.dims.m(), self.dims.k()] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        w.write_all(&self.sigma2.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for v in self.a.iter().chain(self.x0.iter()).chain(self.z.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads an instance written by [`write_to`](Self::write_to).
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Io("not an instance file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != FORMAT_VERSION {
            return Err(Error::Io(format!("unsupported instance format version {version}")));
        }
        let mut header = [0usize; 3];
        for h in &mut header {
            *h = usize::try_from(u64::from_le_bytes(read_array(&mut r)?))
                .map_err(|_| Error::Io("dimension overflows usize".into()))?;
        }
        let dims = Dims::new(header[0], header[1], header[2])?;
        let sigma2 = f64::from_le_bytes(read_array(&mut r)?);
        let noise = NoiseLevel::new(sigma2)?;
        let seed = u64::from_le_bytes(read_array(&mut r)?);
        let (n, m) = (dims.n(), dims.m());
        let mut read_f64s = |len: usize| -> Result<Vec<f64>> {
            (0..len).map(|_| Ok(f64::from_le_bytes(read_array(&mut r)?))).collect()
        };
        let a = DMatrix::from_vec(m, n, read_f64s(m * n)?);
        let x0 = DVector::from_vec(read_f64s(n)?);
        let z = DVector::from_vec(read_f64s(m)?);
        let y = &a * &x0 + &z;
        Ok(ProblemInstance {
            dims,
            sigma2: noise.sigma2(),
            seed,
            a,
            x0,
            z,
            y,
            support: (0..dims.k()).collect(),
        })
    }
}

const MAGIC: &[u8; 4] = b"SQLI";
const FORMAT_VERSION: u32 = 1;

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Seed of trial `index` in a run with base seed `base`: the SplitMix64
/// output `mix(base + (index + 1)·0x9E3779B97F4A7C15)` (wrapping arithmetic),
/// where `mix` is the SplitMix64 finalizer. Injective in `index` for a fixed base.
pub fn derive_trial_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
