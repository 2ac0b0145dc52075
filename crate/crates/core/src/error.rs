use thiserror::Error;

/// Failure modes shared by every module of the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({0}, {1}) is outside the field's domain")]
    OutOfDomain(f64, f64),
    #[error("integration stalled at t = {t}: step size underflow")]
    Stalled { t: f64 },
    #[error("index {index} is outside the built range (max {max})")]
    Range { index: usize, max: usize },
    #[error("degenerate nesting at index {index}: support gap {gap:e}")]
    Degenerate { index: usize, gap: f64 },
    #[error("gradient undefined on the minimizer set")]
    UndefinedAtMin,
    #[error("segments {first} and {second} share more than one value")]
    Overlap { first: usize, second: usize },
    #[error("radial bisection failed in direction {angle}: field is not star-shaped there")]
    NotStarShaped { angle: f64 },
    #[error("critical value on the level grid: minimal slope {slope:e} at level {level:e}")]
    CriticalValue { level: f64, slope: f64 },
    #[error("tail model is not integrable (exponent {exponent})")]
    DivergentTail { exponent: f64 },
    #[error("growth integral diverges for alpha = {alpha}")]
    Divergent { alpha: f64 },
    #[error("empty valley at level {level:e}")]
    EmptyValley { level: f64 },
    #[error("prox parameter {lambda} must be below 1/alpha = {limit}")]
    StepTooLarge { lambda: f64, limit: f64 },
    #[error("prox subproblem did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("certificate failed at iterate {index} (margin {margin:e})")]
    CertFail { index: usize, margin: f64 },
    #[error("descent condition violated at iterate {index} (margin {margin:e})")]
    DescentViolation { index: usize, margin: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
