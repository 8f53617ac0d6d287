//! Simulation of six-state quantum secret sharing between `m` senders and `n`
//! receivers, with attack campaigns and the overlap bounds that limit a
//! cheating sender.
//!
//! ```
//! use qss6::protocol::{run_honest, ProtocolConfig};
//!
//! let report = run_honest(&ProtocolConfig::new(3, 2, 200).with_seed(7)).unwrap();
//! assert!(!report.aborted);
//! assert_eq!(report.bob_xor_key, report.alice_combined_bits);
//! ```

pub mod attacks;
pub mod bounds;
pub mod experiment;
pub mod label;
pub mod protocol;
pub mod quantum;
pub mod rng;

pub use label::{EncodingRecord, StateLabel};
pub use quantum::{Basis, OpCode, PureState, Trit};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/six-states.md")]
    pub struct SixStates;
    #[doc = include_str!("../../../book/src/protocol.md")]
    pub struct Protocol;
    #[doc = include_str!("../../../book/src/attacks.md")]
    pub struct Attacks;
    #[doc = include_str!("../../../book/src/bounds.md")]
    pub struct Bounds;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
