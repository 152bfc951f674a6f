//! Suggests where logging statements belong in Java methods and what they
//! should say, by finding log-aware clones of the method and refining the
//! clone's log description with a token-level language model.

pub mod clones;
pub mod config;
pub mod corpus;
pub mod eval;
pub mod error;
pub mod features;
pub mod ingest;
pub mod lexer;
pub mod lm;
pub mod metrics;
pub mod pipeline;
pub mod stage;

pub use error::{Error, Result};
