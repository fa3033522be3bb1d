//! Sentence ordering over a relational document graph.
//!
//! A document becomes a graph of sentence nodes, past/future commonsense nodes
//! and one global node ([`graph`]). A two-layer relational graph convolution
//! ([`rgcn`]) contextualizes every node; an antisymmetric scorer
//! ([`classifier`]) turns each sentence pair into complementary precedence
//! probabilities, and a constrained topological sort ([`solver`]) assembles the
//! full order. [`trainer`] fits the model with Adam on pairwise binary
//! cross-entropy and [`metrics`] scores predicted orders.
//!
//! Embeddings arrive through STEB bank files ([`corpus`]); [`embed`] produces
//! banks without pretrained encoders.

pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod embed;
mod error;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod numeric;
pub mod rgcn;
pub mod solver;
pub mod trainer;

pub use error::{Error, Result};
