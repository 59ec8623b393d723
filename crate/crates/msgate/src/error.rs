//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operator dimension {dim} exceeds the configured maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "displacement |beta|^2 = {beta_sq:.4} too large for {n_fock} Fock levels \
         (guard requires 4|beta|^2 < n_fock)"
    )]
    TruncationGuard { beta_sq: f64, n_fock: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t:.6e} s outside pulse window [0, {t_pulse:.6e} s]")]
    OutsidePulse { t: f64, t_pulse: f64 },

    #[error("Fock window too small: {0}")]
    WindowTooSmall(String),

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("fit failure: {0}")]
    Fit(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
