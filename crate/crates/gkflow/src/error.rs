use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("zero spinor has no annihilator")]
    ZeroSpinor,
    #[error("spinor is not pure: annihilator dimension {found}, expected {expected}")]
    ImpureSpinor { found: usize, expected: usize },
    #[error("spinor is degenerate: |(phi, conj phi)| = {0:.3e}")]
    DegenerateSpinor(f64),
    #[error("matrix is singular or not invertible: {0}")]
    Singular(String),
    #[error("not a complex structure: |J^2 + Id| = {0:.3e}")]
    NotComplexStructure(f64),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("generalized metric is not positive definite (min eigenvalue {0:.3e})")]
    IndefiniteMetric(f64),
    #[error("generalized complex structures do not commute: |[J1,J2]| = {0:.3e}")]
    NonCommuting(f64),
    #[error("positivity loss: {0}")]
    PositivityLoss(String),
    #[error("admissibility loss: {0}")]
    AdmissibilityLoss(String),
    #[error("step rejected {0} times; giving up (dt = {1:.3e})")]
    StepRejection(usize, f64),
    #[error("conjugate gradient did not converge: residual {residual:.3e} after {iters} iterations")]
    CgNonConvergence { residual: f64, iters: usize },
    #[error("monitor violation: {0}")]
    MonitorViolation(String),
    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
