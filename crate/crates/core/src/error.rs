use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    /// The requested correction cannot satisfy its boundary conditions.
    #[error("constraint violation: {0}")]
    ConstraintViolation(&'static str),
    /// The reference field vanishes somewhere on the path (|B0| < 1e-9 rad/ns).
    #[error("gap closure: reference field vanishes at t = {t} ns")]
    GapClosure { t: f64 },
    #[error("undefined angle: {0}")]
    UndefinedAngle(&'static str),
    #[error("invalid calibration (condition number {condition:.3e})")]
    InvalidCalibration { condition: f64 },
    #[error("integrator failure at t = {t} ns: {reason}")]
    IntegratorFailure { t: f64, reason: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;
