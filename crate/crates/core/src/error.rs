use thiserror::Error;

use crate::rates::ReceiverKind;

/// Errors raised by the numerical library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// System parameters violate a structural invariant (e.g. `K >= T`).
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),

    /// A data duration outside `[1, T - K]` was requested.
    #[error("data duration T_d = {t_d} outside the feasible range [1, {max}]")]
    InfeasibleDuration { t_d: f64, max: usize },

    /// The receiver needs more antennas than users.
    #[error("{receiver} requires M {relation} K (got M = {antennas}, K = {users})")]
    Dimension {
        receiver: ReceiverKind,
        relation: &'static str,
        antennas: usize,
        users: usize,
    },

    /// The peak-power constraint leaves no admissible training fraction.
    #[error("peak-power interval for alpha is empty: [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },

    /// The optimization problem has no feasible point.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// The operation is not defined for this receiver.
    #[error("{operation} is not available for the {receiver} receiver")]
    Unsupported {
        operation: &'static str,
        receiver: ReceiverKind,
    },

    /// The estimated-channel Gram matrix is numerically singular.
    #[error("estimated channel Gram matrix is singular (block {block}, {attempts} attempts)")]
    SingularGram { block: u64, attempts: u32 },

    /// A Monte Carlo trial configuration is invalid.
    #[error("invalid trial configuration: {0}")]
    InvalidTrial(String),
}

pub type Result<T> = std::result::Result<T, Error>;
