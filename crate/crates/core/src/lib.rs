//! Binary classification of tweets into informative and uninformative, built
//! around pluggable contextual encoders with a linear sigmoid head.
//!
//! The pipeline: load tab-separated splits ([`corpus`]), normalize and frame
//! text ([`preprocess`]), encode and score with the first-token summary
//! ([`model`]), fine-tune over a learning-rate grid with validation-F1
//! checkpoint selection ([`trainer`]), combine multiple models by probability
//! averaging or majority voting ([`ensemble`]), and report positive-class
//! precision/recall/F1 ([`metrics`]). The `tweetsift` binary exposes each
//! stage as a subcommand ([`cli`]).

pub mod cli;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
