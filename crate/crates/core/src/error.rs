use thiserror::Error;

/// Errors raised by the analytic routines, the oracle, the solver and the harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimensions (n={n}, m={m}, k={k}): {reason}")]
    InvalidDims {
        n: usize,
        m: usize,
        k: usize,
        reason: &'static str,
    },

    #[error("invalid argument `{name}` = {value}: {reason}")]
    InvalidArgument {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A function was evaluated outside its natural domain, e.g. Q⁻¹ at p ∉ (0, 1).
    #[error("{what}: argument {value} outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// ψ(λ) is infinite: the Q⁻¹ argument is exactly 1/2.
    #[error("psi diverges at lambda = {lambda} (Q^-1 argument is 1/2)")]
    PsiDiverges { lambda: f64 },

    /// An iterative routine ran out of budget before meeting its tolerance.
    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    /// The outer min-max search or a fixed point has no finite solution.
    #[error("{what} diverges: {detail}")]
    Diverged { what: &'static str, detail: String },

    /// No sign change was found while scanning for a root. Carries the scan.
    #[error("{what}: no sign change found over {} scanned points", scanned.len())]
    BracketFailure {
        what: &'static str,
        scanned: Vec<(f64, f64)>,
    },

    /// m ≤ min_λ D(λ): no regularizer gives stable recovery.
    #[error("no stable region: m = {m} is not above min D(lambda) = {min_d:.6}")]
    NoStableRegion { m: usize, min_d: f64 },

    #[error("all {trials} trials failed to converge")]
    AllTrialsDiverged { trials: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// `true` for well-posed but degenerate outcomes (divergent predictions,
    /// missing stable region). The CLI maps these to exit status 2.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::Diverged { .. } | Error::NoStableRegion { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
