//! Numerical tolerances and guard thresholds, collected in one place so
//! tests and implementation code agree on every cutoff.

/// Allowed deviation of a weight vector's sum from 1.
pub const WEIGHT_SUM: f64 = 1e-12;

/// Worst allowed |F[a][b] - F[b][a]| in a Fisher matrix.
pub const FISHER_SYMMETRY: f64 = 1e-10;

/// Eigenvalue floor for positive-semidefinite checks on Fisher matrices.
pub const FISHER_EIGEN_FLOOR: f64 = -1e-10;

/// Worst allowed Hermiticity violation in a density matrix.
pub const DENSITY_HERMITIAN: f64 = 1e-12;

/// Allowed deviation of a density-matrix trace from 1.
pub const DENSITY_TRACE: f64 = 1e-10;

/// Eigenvalue floor for positive-semidefinite checks on density matrices.
pub const DENSITY_EIGEN_FLOOR: f64 = -1e-10;

/// Worst allowed |U U^H - I| entry for a scattering matrix.
pub const UNITARITY: f64 = 1e-12;

/// Worst allowed Hermiticity violation in a logarithmic-derivative operator.
pub const SLD_HERMITIAN: f64 = 1e-10;

/// Eigenvalue-pair sums below this are treated as outside the state's
/// support when solving for logarithmic derivatives.
pub const SUPPORT_EPS: f64 = 1e-12;

/// Eigenvalue gaps below this are treated as degenerate when forming
/// eigenvector derivatives by perturbation theory.
pub const EIGEN_GAP: f64 = 1e-8;

/// Worst allowed disagreement between independently computed routes to the
/// same quantity (closed form vs eigendecomposition, the two information
/// assemblies, logarithmic-derivative residuals, commutator witnesses).
pub const CROSS_ROUTE: f64 = 1e-8;

/// Outcome probabilities below this contribute nothing to the classical
/// Fisher information and are skipped.
pub const PROB_FLOOR: f64 = 1e-12;

/// Allowed deviation of (sum of outcome probabilities + residual mass) from 1.
pub const DISTRIBUTION_NORM: f64 = 1e-10;

/// Condition numbers above this mark a classical Fisher matrix as singular.
pub const FIM_CONDITION_LIMIT: f64 = 1e12;

/// Matrix-entry cap for the truncated Fock space.
pub const FOCK_ENTRY_CAP: u128 = 1_000_000;

/// Objective spread below which a simplex search is considered converged.
pub const SIMPLEX_SPREAD: f64 = 1e-10;

/// Evaluation budget per simplex-search restart.
pub const SIMPLEX_MAX_EVALS: usize = 5000;

/// Absolute tolerance of the critical-loss bisection.
pub const BISECTION_TOL: f64 = 1e-10;

/// Upper end of the critical-loss search bracket.
pub const LOSS_BRACKET_TOP: f64 = 1.0 - 1e-9;
