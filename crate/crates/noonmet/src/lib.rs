//! Precision limits for simultaneous estimation of `d` optical phases with
//! an `N`-photon multi-mode NOON probe under per-mode photon loss, plus the
//! measurement side: interferometer read-out models and their optimization.
//!
//! Module map:
//! - [`model`]: scenario and matrix value types.
//! - [`bounds`]: closed-form quantum/classical precision bounds and weights.
//! - [`fockspace`]: dense truncated-Fock reference computations that the
//!   closed forms are checked against.
//! - [`channel`]: generic Fock-space channels (loss, phase, mode mixing).
//! - [`interferometer`]: photon-counting read-out behind a linear mesh.
//! - [`optimize`]: derivative-free search over meshes and input weights.
//! - [`montecarlo`]: randomized loss-landscape sweeps.
//! - [`verify`]: cross-route consistency sweeps used by tests and the CLI.

pub mod bounds;
pub mod channel;
mod combin;
mod eigen;
pub mod error;
pub mod fockspace;
pub mod interferometer;
pub mod model;
pub mod montecarlo;
pub mod optimize;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    validate_scenario, FisherKind, FisherMatrix, LossProfile, PhaseVector, Scenario, WeightVector,
};
