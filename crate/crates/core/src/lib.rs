//! Synthetic cultural agents.
//!
//! The crate covers the whole batch pipeline: build a tribe knowledge base from
//! web sources ([`knowledge`]), turn it into a cultural profile ([`profile`]),
//! run dictator/ultimatum strategy-method sweeps against agents conditioned on
//! that profile ([`experiment`]), and analyze the resulting stratified count
//! tables ([`stats`]). All model access goes through [`gateway`].

pub mod experiment;
pub mod fixtures;
pub mod gateway;
pub mod knowledge;
pub mod profile;
pub mod stats;
pub mod time;

pub use gateway::{ChatModel, Embedder, GatewayError, ModelConfig};
