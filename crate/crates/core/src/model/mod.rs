//! The hierarchical character-to-word tagger and its checkpoints.

mod checkpoint;
mod config;
mod lstm;
mod params;
mod tagger;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC};
pub use config::{ArchConfig, Attribute, Charset, ModelConfig, NONE_LABEL, POS_ATTRIBUTE};
pub use lstm::{LstmDirection, SequenceMasks};
pub use params::{glorot_uniform, Binder, ParamStore};
pub use tagger::{argmax, ActivationTrace, Direction, SentenceLogits, Tagger};
