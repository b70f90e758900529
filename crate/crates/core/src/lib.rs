//! Contextual ranking and selection from single noisy simulation runs.
//!
//! The estimator is shrinking-neighborhood averaging ([`sne`]); the budget
//! allocator is a rejection sampler over a rate-optimal intensity field
//! ([`allocation`]). A Kriging baseline, two benchmark oracles and an
//! experiment harness complete the toolkit.

pub mod allocation;
pub mod domain;
pub mod error;
pub mod harness;
pub mod kriging;
pub mod numerics;
pub mod oracles;
pub mod sne;

pub use domain::{argmin_tiebreak, decision_loss, Context, ContextBox, Dataset, Decision, LossMetric, Observation};
pub use error::{Error, Result};
pub use oracles::Oracle;
pub use sne::SneParams;
