//! Graph-to-text generation with structure-aware input embeddings.

pub mod cli;
pub mod data;
pub mod error;
pub mod graph;
pub mod linearize;
pub mod metrics;
pub mod model;
pub mod train;
pub mod vocab;

pub use error::{Error, Result};
pub use graph::{Corpus, Example, KnowledgeGraph, Triple};
pub use linearize::{linearize, LinearizedInput};
pub use vocab::{EncodedInput, Vocabulary};
