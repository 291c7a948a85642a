//! Session configuration, the protocol engine and its public transcript.

pub mod engine;
pub mod privacy;
pub mod session;
pub mod transcript;

pub use engine::{run_full_session, run_seeded, AbortReason, ReconstructionReport, ReplayOutcome};
pub use session::{ConfigFile, SessionConfig, SessionPlan, Threats};
pub use transcript::{MessageBody, Phase, Transcript, TranscriptMessage};
