use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("site index {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("Hilbert space dimension {dim} exceeds the dense cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("operation requires a qubit layout (site_dim = 2), got site_dim = {0}")]
    NotQubitLayout(usize),

    #[error("operation requires a three-level layout (site_dim = 3), got site_dim = {0}")]
    NotLambdaLayout(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("thermal tail mass {tail:.3e} above 1e-6; increase fock_dim beyond {fock_dim}")]
    ThermalTail { tail: f64, fock_dim: usize },

    #[error("singular effective coupling for qubit {site}: vanishing detuning denominator")]
    SingularCoupling { site: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error(
        "step size underflow at t = {time:.6} ns (h = {step:.3e}); \
         largest Hamiltonian frequency {max_frequency:.4e} rad/ns"
    )]
    StepUnderflow {
        time: f64,
        step: f64,
        max_frequency: f64,
    },

    #[error("propagator not block-diagonal in the Fock index (leakage {leakage:.3e})")]
    NotBlockDiagonal { leakage: f64 },

    #[error("time {time} is not a closure time (delta*t mod 2pi residual {residual:.3e})")]
    NotClosureTime { time: f64, residual: f64 },

    #[error("invalid time interval [{t0}, {t1}]")]
    InvalidInterval { t0: f64, t1: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("propagation failed: {0}")]
    PropagationFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
