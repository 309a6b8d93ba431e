//! Credibility checking and relation repair for knowledge-graph facts using
//! their textual provenance.
//!
//! A fact's provenance sentences are filtered by relevance rules, pooled into
//! a word-embedding feature vector with relevance flags, and scored by a
//! jointly trained multilayer perceptron that predicts both whether the fact
//! is credible and which relation it should have had. Logistic-regression
//! baselines, metrics, a synthetic corpus generator, hyperparameter search
//! and ablation sweeps round out the experiment tooling.

pub mod baselines;
pub(crate) mod binio;
pub mod catalog;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod mlp;
pub mod pipeline;
pub mod relevance;
pub mod sampler;
pub mod seeds;
pub mod tuner;

pub use error::{Error, Result};
