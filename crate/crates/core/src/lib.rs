//! Refractory finite-state channel model of the P300 speller.
//!
//! A target character's flash pattern `x` passes through a finite state
//! machine with `L` refractory states (a flash only elicits a response when
//! the previous `L` flashes of that character were dark) followed by a
//! memoryless noise channel. On top of that model the crate provides:
//!
//! * [`channel`]: the state machine, noise laws and the joint trellis;
//! * [`rate`]: closed-form noiseless rates, the maxentropic source and an
//!   exact enumeration oracle for small block lengths;
//! * [`gbaa`]: simulation-based information-rate estimation and the
//!   generalized Blahut-Arimoto optimizer for Markov sources;
//! * [`codebook`]: memory-based codebooks and the RCP / CBP / max-min
//!   distance baselines, with CSV import/export;
//! * [`sim`]: Monte Carlo spelling experiments with a MAP decoder;
//! * [`cli`]: the `p300fsc` command-line front end.

pub mod channel;
pub mod cli;
pub mod codebook;
mod error;
pub mod gbaa;
pub mod linalg;
pub mod rate;
pub mod rng;
pub mod selftest;
pub mod sim;
pub mod source;

pub use channel::{ChannelSpec, ChannelState, Noise, Observations, Trellis};
pub use codebook::{Codebook, CodebookKind};
pub use error::{Error, Result};
pub use gbaa::{GbaaConfig, GbaaOutcome, RateEstimate};
pub use rate::{RateMethod, RateResult};
pub use sim::{SimConfig, SimReport};
pub use source::MarkovSource;
