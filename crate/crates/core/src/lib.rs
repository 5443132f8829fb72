//! Lossy streaming text compression with a "rewind" decoder.
//!
//! A document is modelled by an order-k character Markov model. At every
//! position the encoder keeps only the most likely characters of the
//! context's distribution (the smallest prefix that minimises the expected
//! `2L + E` contribution), arithmetic-codes the kept characters into a hints
//! payload and silently drops the rest. The decoder receives the document one
//! character at a time, guesses from the hints, and on a wrong guess rewinds
//! the coder so the same bits are reinterpreted under the corrected context.
//!
//! Module map:
//!
//! * [`text_model`]: alphabets, order-k count models, prediction, surprise and entropy.
//! * [`selector`]: the kept-subset rule, its cost functional and an exhaustive oracle.
//! * [`coder`]: 32-bit integer arithmetic coder with decoder checkpoints.
//! * [`rewind`]: document encoder, guess/reveal decoder session and traces.
//! * [`harness`]: `2L + E` scoring, end-to-end evaluation and seeded sources.

pub mod coder;
mod error;
pub mod harness;
pub mod rewind;
pub mod selector;
pub mod text_model;

pub use error::{Error, ParseError, Result};
