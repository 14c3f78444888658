//! Empowerment of agents in small grid worlds.
//!
//! The crate computes the channel capacity between `K`-step action
//! sequences and the resulting state, exactly (Blahut-Arimoto, path
//! counting, an importance-sampling estimator) and approximately through
//! stochastic variational information maximisation with small neural
//! networks. Empowerment maps then drive a greedy behaviour policy.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod channel;
pub mod error;
pub mod gridworld;
pub mod particles;
pub mod plan;
pub mod svim;

pub use error::{Error, Result};
