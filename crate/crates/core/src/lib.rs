//! Segment-level interpolation data augmentation for sequence labeling and
//! relation extraction.
//!
//! The crate is organised bottom-up:
//!
//! * [`corpus`]: CoNLL-style NER and offset-based RE corpora.
//! * [`pools`]: segment pools (mentions, tokens, sentences, nominal pairs) and
//!   synonym lexicons.
//! * [`mixer`]: embedding table, interpolation primitives and the generation
//!   loop, plus hard-replacement and whole-sequence special cases.
//! * [`model`]: linear taggers and relation classifiers trained with soft
//!   cross-entropy.
//! * [`eval`]: entity/span F1, relation accuracy, confusion matrices and
//!   nearest-token recovery.
//!
//! Generation and batch evaluation run on rayon when the `parallel` feature
//! is enabled (the default); results are identical either way.

mod binio;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod mixer;
pub mod model;
pub mod par;
pub mod pools;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
