use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported operation on this geometry: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("volume density is not admissible: {0}")]
    InvalidDensity(String),

    #[error("matrix is not positive definite (smallest pivot or eigenvalue {smallest:e})")]
    NotPositiveDefinite { smallest: f64 },

    #[error("matrix is too ill-conditioned (estimated condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("Kähler positivity lost at node {node} (t = {t}, density {value:e})")]
    PositivityLost { node: usize, t: f64, value: f64 },

    #[error("time step underflow at t = {t} (dt = {dt:e})")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("no convergence after {steps} steps (residual {residual:e})")]
    NotConverged { steps: usize, residual: f64 },

    #[error("trace sink failed: {0}")]
    Sink(String),
}
