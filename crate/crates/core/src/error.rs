use thiserror::Error;

/// Errors raised by the solver and its supporting numerics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// (m_l + Φ_AB)² + κ² ≤ (Zα)²: γ would be imaginary.
    #[error("supercritical coupling: (m_l + phi_ab)^2 + kappa^2 - (z alpha)^2 = {radicand:e} <= 0")]
    SupercriticalCoupling { radicand: f64 },

    #[error("energy {energy} is not a bound-state energy for m0 = {m0} (requires |E| < m0)")]
    NotABoundState { energy: f64, m0: f64 },

    #[error("no bound state: {0}")]
    NoBoundState(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("no root in bracket [{lo}, {hi}]")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("node count mismatch: expected {expected}, found {found}")]
    NodeCountMismatch { expected: u32, found: u32 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
