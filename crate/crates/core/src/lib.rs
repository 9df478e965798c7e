//! Match-3 engine, synthetic players and a playtesting harness.
//!
//! The crate is organised bottom-up:
//!
//! - [`engine`]: board mechanics (swaps, matches, cascades, jokers, blockers).
//! - [`levels`]: level definitions and live match bookkeeping.
//! - [`nn`]: a small dense network with batch-norm and Adam, generic over the scalar type.
//! - [`agents`]: random, smart and DDQN ("JellyGym") players.
//! - [`harness`]: match playout, training campaigns, comparisons and reports.
//!
//! Numeric code is generic over [`Scalar`]; the aliases below pin the usual
//! `f64` and `f32` instantiations.

pub mod agents;
pub mod engine;
pub mod error;
pub mod harness;
pub mod levels;
pub mod nn;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision network (used by the CLI and the harness).
pub type Network64 = nn::Network<f64>;
/// Single-precision network.
pub type Network32 = nn::Network<f32>;
/// Double-precision Adam state.
pub type AdamState64 = nn::AdamState<f64>;
/// Double-precision DDQN agent.
pub type JellyGym64 = agents::JellyGym<f64>;
/// Single-precision DDQN agent.
pub type JellyGym32 = agents::JellyGym<f32>;
