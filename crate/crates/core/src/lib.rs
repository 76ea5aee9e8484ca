//! Reference-free, document-level translation evaluation with topic models.
//!
//! Source and target documents are reduced to noun tokens, each side gets
//! its own representative topic from LSA, LDA and an embedding-clustering
//! model, and the two topics are aligned through a bilingual dictionary and
//! compared by cosine similarity. Every score keeps the token pairs that
//! produced it.

pub mod align;
pub mod coherence;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod knee;
pub mod lda;
pub mod lsa;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod tokenize;
pub mod topic;
pub mod vectorize;

pub use error::{Error, Result};
