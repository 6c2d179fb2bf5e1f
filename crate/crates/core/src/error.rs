use thiserror::Error;

use crate::surface::CriticalPoint;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("operation requires {required}, got {actual}")]
    WrongConfiguration { required: String, actual: String },

    #[error("closed form is only defined in the Ω = ω₂ = ω₃ = 1, ω₁ = 0 frame: {0}")]
    UnsupportedFrame(String),

    #[error("no start converged within budget (best energy {:.6e})", best.energy)]
    NonConvergence { best: Box<CriticalPoint> },

    #[error("Mandel parameter is indeterminate: ⟨M⟩ = 0")]
    IndeterminateQ,

    #[error("state has vanishing norm (odd branch at the origin)")]
    DegenerateState,

    #[error("Fock cutoff not converged at ν_max = {nu_max}: |ΔE| = {delta:.3e}")]
    CutoffNotConverged { nu_max: usize, delta: f64 },

    #[error("coherent amplitude tail {tail:.3e} beyond ν_max = {nu_max} exceeds tolerance")]
    TailTooLarge { nu_max: usize, tail: f64 },

    #[error("basis dimension {dim} exceeds configured limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("no transition found for μ in [{lo}, {hi}]")]
    NoTransitionFound { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
