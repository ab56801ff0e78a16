use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integral does not converge before cutoff r = {cutoff:e}")]
    DivergentIntegral { cutoff: f64 },

    #[error("potential term overflowed at radius {radius} (|value| = {value:e})")]
    PotentialOverflow { radius: f64, value: f64 },

    #[error("integration exceeded {max_steps} steps at independent variable {at}")]
    MaxStepsExceeded { max_steps: usize, at: f64 },

    #[error("step size collapsed to {step:e} at independent variable {at} (stiff or singular flow)")]
    StepCollapse { step: f64, at: f64 },

    #[error("non-finite state encountered at independent variable {at}")]
    NonFinite { at: f64 },

    #[error("angle lift violated: jump of {jump} rad between consecutive samples")]
    LiftViolation { jump: f64 },

    #[error("center-manifold seeding diverged after {retries} reseeds")]
    CenterSeedDiverged { retries: usize },

    #[error("seed robustness check failed: section angle moved by {change:e} when halving the seed offset")]
    SeedSensitive { change: f64 },

    #[error("oracle grid ladder did not converge: counts {counts:?}")]
    OracleNotConverged { counts: Vec<usize> },

    #[error("truncation radius too small: |W(R)| = {tail:e} at R = {radius} after doubling")]
    TruncationTooSmall { radius: f64, tail: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
