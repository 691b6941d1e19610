//! Character-level BiLSTM part-of-speech taggers with per-unit probing.
//!
//! The crate trains hierarchical taggers (character BiLSTM feeding a word
//! BiLSTM and per-attribute MLP heads) whose character layer may have any
//! forward/backward unit split, and scores every character unit by the
//! mutual information between its binned activations and POS labels.

pub mod autodiff;
pub mod corpus;
pub mod error;
pub mod kv;
pub mod model;
pub mod synthlang;
pub mod probe;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
