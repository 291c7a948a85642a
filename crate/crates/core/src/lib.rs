//! Threshold quantum multi-secret sharing over two-particle cluster states.
//!
//! A dealer encrypts single-qubit secrets with `R_X` rotations whose angles
//! come from a Shamir polynomial over GF(q). Any `t` shareholders recover the
//! secrets: each non-reconstructor user steers a teleported `|+_δ⟩` particle
//! with a rotated-basis measurement and later publishes a masked angle, and
//! the reconstructor runs an entangle–measure–correct chain that adds every
//! user's rotation without learning it.
//!
//! Modules:
//! - [`field`], [`angle`]: share arithmetic and exact rotation angles
//! - [`statevector`], [`identities`]: dense simulator and operator checks
//! - [`protocol`]: sessions, transcripts, replay
//! - [`channel`], [`attacks`]: decoy-protected channel and adversary models
//! - [`circuit`]: the five-qubit experiment circuits and a QASM subset
//! - [`campaign`], [`selftest`], [`exec`]: Monte Carlo harnesses

pub mod angle;
pub mod attacks;
pub mod campaign;
pub mod channel;
pub mod circuit;
pub mod error;
pub mod exec;
pub mod field;
pub mod identities;
pub mod protocol;
pub mod selftest;
pub mod statevector;

pub use angle::RationalAngle;
pub use error::{AngleError, CircuitError, ConfigError, FieldError, StateError, TranscriptError};
pub use field::{FieldElement, ParticipantId, PrimeModulus};
pub use statevector::{fidelity_up_to_phase, Basis, Gate, StateVector};
