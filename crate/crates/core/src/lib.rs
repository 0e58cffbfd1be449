//! Bounded arm-memory multi-armed bandits over a single-pass stream of arms.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: ground-truth instances, Bernoulli rewards and run outcomes.
//! - [`rng`]: reproducible per-trial random streams.
//! - [`stream`]: the streaming session that enforces arm memory, single-pass
//!   discard and the pull ledger. Every algorithm observes rewards only
//!   through [`stream::StreamSession::pull`].
//! - [`schedule`]: iterated logarithms and the per-level sample/block tables.
//! - [`pac`]: best-arm identification algorithms (r-round selective
//!   promotion, budgeted king challenges and the two counterexample variants).
//! - [`regret`]: uniform-exploration streaming regret minimisation and a
//!   full-memory UCB1 baseline.
//! - [`instances`]: lower-bound families, adversarial streams and truncated
//!   mean distributions.
//! - [`harness`]: Monte Carlo runner, aggregation and CSV/SVG reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod harness;
pub mod instances;
pub mod model;
pub mod pac;
pub mod regret;
pub mod rng;
pub mod schedule;
pub mod stream;

mod error;

pub use error::{Error, Result};
pub use model::{epsilon_best, ArmId, Instance, RewardModel, RunOutcome};
pub use rng::{SeedSpec, StreamTag};
pub use stream::{Capacity, StreamOrder, StreamSession};
