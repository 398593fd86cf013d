//! Decision procedures and discrete quasi-norms for Morrey-type smoothness
//! scales built over admissible weight functions.
//!
//! The crate has three layers:
//! - `weights` / `dyadic`: weight-class analysis and dyadic cube geometry;
//! - `seqnorm` / `witnesses`: sequence-space quasi-norms (with an exhaustive
//!   reference implementation) and extremal coefficient families;
//! - `oracle` / `verifier`: embedding verdicts with condition traces, and
//!   numeric falsification/boundedness scans that cross-check them.

// `!(x > 0.0)` is used deliberately as a NaN-rejecting guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dyadic;
pub mod oracle;
pub mod seqnorm;
pub mod verifier;
pub mod witnesses;
pub mod weights;

pub use oracle::{Decision, EmbeddingVerdict, SpaceSpec};
pub use weights::{AsymptoticProfile, WeightFamily, WeightFunction};

/// Wire-format identifier embedded in all JSON payloads.
pub const SCHEMA: &str = "morrey-embed/1";
