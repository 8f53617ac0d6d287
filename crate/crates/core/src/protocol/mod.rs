//! The m-Alice, n-Bob sharing protocol, step by step.
//!
//! Alice 1 prepares six-state photons, each further Alice checks a sample of
//! what she received and encodes the rest with one of nine operations, and the
//! Bobs split Alice m's output position by position. After the bases are
//! announced, each block of `n` positions yields one raw key bit, shared as
//! the XOR of the Bobs' bits.

mod adversary;
mod config;
mod photon;
mod records;
mod report;
mod session;

use thiserror::Error;

pub use adversary::{AnnounceContext, Adversary, Link, Passive, SampleOutcome};
pub use config::{
    ConfigError, MemoryMode, ProtocolConfig, DEFAULT_BOB_FRACTION, DEFAULT_ERROR_THRESHOLD,
    DEFAULT_FINAL_FRACTION, DEFAULT_HOP_FRACTION,
};
pub use photon::{IdAllocator, Payload, Photon, PhotonId, SharedPair};
pub use records::{implied_label, Announcement, Origin, PartyRecords};
pub use report::{AbortReason, BitString, CheckSummary, RunReport, Stage};
pub use session::{
    distribute, extract_keys, run_honest, run_protocol, run_trial, BobSlot, Encoded, EncoderPolicy,
    HopOutcome, KeyExtraction, MeasuredBit, RunOutcome, Session,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}
