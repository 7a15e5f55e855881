//! Charged particle in a time-varying magnetic field with time-dependent
//! masses and a bilinear `X₁X₂` coupling.
//!
//! The crate reduces the system to two decoupled oscillators through a chain
//! of canonical maps ([`reduction`]), propagates Hamilton's equations in the
//! original and decoupled frames ([`dynamics`]), solves the auxiliary
//! Ermakov equations ([`ermakov`]) and builds the invariant-based wave
//! functions and their diagnostics ([`quantum`]). Scenarios are read from
//! JSON files ([`scenario`]).

pub mod dynamics;
pub mod ermakov;
pub mod error;
pub mod ode;
pub mod parallel;
pub mod profiles;
pub mod quadrature;
pub mod quantum;
pub mod reduction;
pub mod scenario;
pub mod validate;

pub use error::{Error, Result};
pub use parallel::Exec;
pub use profiles::{ParameterProfile, SystemParams};
pub use reduction::{Frame, PhaseSpaceState, Reduction};
