//! Source-level vulnerability detection over C/C++ code gadgets.
//!
//! The pipeline symbolizes labeled gadgets ([`symbolizer`]), turns them into
//! fixed-length vectors with a word-level or document-level embedder
//! ([`embedding`]), and classifies the vectors with either a bidirectional LSTM
//! trained by backpropagation through time ([`bilstm`]) or a random vector
//! functional link network solved in closed form ([`rvfl`]). [`pipeline`] wires
//! the stages together and reports FPR / FNR / precision / F1 with timings.

pub mod bilstm;
pub mod corpus;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model_io;
pub mod pipeline;
pub mod rvfl;
pub mod symbolizer;
pub mod synthetic;

pub use error::{Error, Result};

// The book chapters are compiled as doc comments so `cargo test` runs their snippets.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/symbolization.md")]
    mod symbolization {}
    #[doc = include_str!("../../../book/src/embeddings.md")]
    mod embeddings {}
    #[doc = include_str!("../../../book/src/rvfl.md")]
    mod rvfl {}
    #[doc = include_str!("../../../book/src/bilstm.md")]
    mod bilstm {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
