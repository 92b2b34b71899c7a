//! Reply-set planning for smart-reply systems.
//!
//! The crate turns a (message, reply) corpus into (message, reply set)
//! pairs by simulating a user over a dense retrieval model and greedily
//! building the set that maximises expected term-level F1 coverage. It also
//! carries the diversified-retrieval baselines (Matching, MMR, topic dedup)
//! and the weighted ROUGE / Self-ROUGE evaluation used to compare them.
//!
//! Everything here is pure computation over in-memory data and builds with
//! `alloc` only; file formats, parallel drivers and the command line live in
//! the `replyset` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod corpus;
pub mod encoder;
mod error;
pub mod index;
pub mod matrix;
pub mod metrics;
pub mod planner;
pub mod text;

pub use error::{Error, Result};
