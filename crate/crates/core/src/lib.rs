//! Community-aware group testing.
//!
//! This crate simulates pooled (group) testing over a population partitioned
//! into families whose infections are correlated. It provides:
//!
//! - ground-truth samplers for combinatorial and probabilistic community
//!   infection models ([`model`]),
//! - a pooled-test channel with optional one-sided (Z-channel) noise
//!   ([`channel`]),
//! - non-adaptive test matrix constructions, including the family/member
//!   two-block community design ([`designs`]),
//! - adaptive algorithms: binary splitting, Hwang's generalized binary
//!   splitting, community-aware adaptive testing, and a two-stage variant
//!   ([`adaptive`]),
//! - decoders: COMP, community COMP, threshold rules, and a loopy belief
//!   propagation decoder over the community factor graph ([`decoders`]),
//! - closed-form lower bounds, expected-test formulas, and error-probability
//!   formulas ([`bounds`]),
//! - a Monte Carlo experiment harness with CSV output ([`harness`]).

pub mod adaptive;
pub mod bounds;
pub mod channel;
pub mod config;
pub mod decoders;
pub mod designs;
pub mod error;
pub mod harness;
pub mod model;

pub use error::{Error, Result};
