use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes surfaced by the library. Numerical routines never return
/// infinities or NaN through the happy path; anything unrepresentable maps
/// to one of these variants instead.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{context}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("loss rate for mode {mode} is {value}, outside [0, 1]")]
    LossOutOfRange { mode: usize, value: f64 },

    #[error("{what} must be at least 1")]
    ZeroCount { what: &'static str },

    #[error("{what} must be finite")]
    NonFinite { what: &'static str },

    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weights sum to {sum}, not 1")]
    WeightSumInvalid { sum: f64 },

    #[error("probe is fully lost: every surviving-amplitude weight is zero")]
    SingularModel,

    #[error("mode {mode} has no surviving amplitude; the associated relative phase is unidentifiable")]
    UnidentifiablePhase { mode: usize },

    #[error("mode {mode} has unit loss; optimal weights are undefined")]
    DegenerateEnvironment { mode: usize },

    #[error("truncated Fock space needs {required} matrix entries, above the cap of {cap}")]
    BasisOverflow { required: u128, cap: u128 },

    #[error("eigendecomposition failed to converge for a {dim}x{dim} matrix")]
    EigenFailure { dim: usize },

    #[error("matrix is not Hermitian: worst asymmetry {residual}")]
    NotHermitian { residual: f64 },

    #[error("matrix is not symmetric: worst asymmetry {residual}")]
    NotSymmetric { residual: f64 },

    #[error("matrix is not unitary: worst residual {residual}")]
    NotUnitary { residual: f64 },

    #[error("{which} is {value}, outside its allowed range")]
    AngleOutOfRange { which: &'static str, value: f64 },

    #[error("invalid {what} interval [{lo}, {hi}]")]
    IntervalInvalid {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("density matrix trace is {trace}, not 1")]
    TraceNotOne { trace: f64 },

    #[error("matrix has eigenvalue {eigenvalue} below the positivity floor")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("Fisher matrix is numerically singular (condition {condition:.3e}); the measurement cannot identify all phases")]
    SingularFisherMatrix { condition: f64 },

    #[error("every restart ended on a singular measurement; try different evaluation phases")]
    AllRestartsSingular,

    #[error("verification request needs ~{estimated} work units, above the budget of {budget}; lower the photon number, phase count, or grid density")]
    WorkBudgetExceeded { estimated: u128, budget: u128 },
}
