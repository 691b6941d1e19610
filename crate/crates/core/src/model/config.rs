use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::KvFile;

/// Label used for tokens that do not carry a given attribute.
pub const NONE_LABEL: &str = "<NONE>";
/// Name of the mandatory first attribute.
pub const POS_ATTRIBUTE: &str = "POS";

/// Indexed character inventory. Index 0 is reserved for unknown characters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "CharsetRepr", into = "CharsetRepr")]
pub struct Charset {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

#[derive(Serialize, Deserialize)]
struct CharsetRepr {
    chars: Vec<char>,
}

impl From<CharsetRepr> for Charset {
    fn from(r: CharsetRepr) -> Self {
        Charset::new(r.chars)
    }
}

impl From<Charset> for CharsetRepr {
    fn from(c: Charset) -> Self {
        CharsetRepr { chars: c.chars }
    }
}

impl PartialEq for Charset {
    fn eq(&self, other: &Self) -> bool {
        self.chars == other.chars
    }
}

impl Charset {
    pub const UNK: usize = 0;

    /// Builds an inventory from known characters; duplicates are dropped and
    /// first-seen order is kept.
    pub fn new(chars: impl IntoIterator<Item = char>) -> Self {
        let mut out = Vec::new();
        let mut index = HashMap::new();
        for c in chars {
            if !index.contains_key(&c) {
                index.insert(c, out.len() + 1);
                out.push(c);
            }
        }
        Charset { chars: out, index }
    }

    /// Number of indices including UNK.
    pub fn len(&self) -> usize {
        self.chars.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Known characters in index order (index `i + 1`).
    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn contains(&self, c: char) -> bool {
        self.index.contains_key(&c)
    }

    pub fn encode_char(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(Self::UNK)
    }

    pub fn encode(&self, word: &str) -> Vec<usize> {
        word.chars().map(|c| self.encode_char(c)).collect()
    }
}

/// A predicted attribute (POS or a morphosyntactic feature) and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub values: Vec<String>,
}

impl Attribute {
    pub fn new(name: impl Into<String>, values: Vec<String>) -> Self {
        Attribute {
            name: name.into(),
            values,
        }
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// Architecture dimensions, independent of any corpus inventory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub char_emb_dim: usize,
    pub fwd_units: usize,
    pub bwd_units: usize,
    pub word_hidden_total: usize,
    pub word_layers: usize,
    pub dropout_rate: f64,
}

impl Default for ArchConfig {
    /// 256-dim character embeddings, 64/64 character units, a two-layer
    /// 128-wide word BiLSTM and 50% dropout.
    fn default() -> Self {
        ArchConfig {
            char_emb_dim: 256,
            fwd_units: 64,
            bwd_units: 64,
            word_hidden_total: 128,
            word_layers: 2,
            dropout_rate: 0.5,
        }
    }
}

impl ArchConfig {
    pub const KEYS: [&'static str; 6] = [
        "char_emb_dim",
        "fwd_units",
        "bwd_units",
        "word_hidden_total",
        "word_layers",
        "dropout_rate",
    ];

    pub fn with_split(mut self, fwd_units: usize, bwd_units: usize) -> Self {
        self.fwd_units = fwd_units;
        self.bwd_units = bwd_units;
        self
    }

    /// Overrides any of [`Self::KEYS`] present in `kv`.
    pub fn apply_kv(&mut self, kv: &KvFile) -> Result<()> {
        if let Some(v) = kv.parsed("char_emb_dim")? {
            self.char_emb_dim = v;
        }
        if let Some(v) = kv.parsed("fwd_units")? {
            self.fwd_units = v;
        }
        if let Some(v) = kv.parsed("bwd_units")? {
            self.bwd_units = v;
        }
        if let Some(v) = kv.parsed("word_hidden_total")? {
            self.word_hidden_total = v;
        }
        if let Some(v) = kv.parsed("word_layers")? {
            self.word_layers = v;
        }
        if let Some(v) = kv.parsed("dropout_rate")? {
            self.dropout_rate = v;
        }
        Ok(())
    }

    pub fn write_kv(&self, kv: &mut KvFile) {
        kv.push("char_emb_dim", self.char_emb_dim);
        kv.push("fwd_units", self.fwd_units);
        kv.push("bwd_units", self.bwd_units);
        kv.push("word_hidden_total", self.word_hidden_total);
        kv.push("word_layers", self.word_layers);
        kv.push("dropout_rate", self.dropout_rate);
    }
}

/// Architecture of the hierarchical tagger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub char_emb_dim: usize,
    pub fwd_units: usize,
    pub bwd_units: usize,
    /// Word BiLSTM width, split evenly between the two directions.
    pub word_hidden_total: usize,
    pub word_layers: usize,
    pub dropout_rate: f64,
    pub attributes: Vec<Attribute>,
    pub charset: Charset,
}

impl ModelConfig {
    /// Default architecture over the given inventories.
    pub fn with_inventories(charset: Charset, attributes: Vec<Attribute>) -> Self {
        Self::from_arch(&ArchConfig::default(), charset, attributes)
    }

    pub fn from_arch(arch: &ArchConfig, charset: Charset, attributes: Vec<Attribute>) -> Self {
        ModelConfig {
            char_emb_dim: arch.char_emb_dim,
            fwd_units: arch.fwd_units,
            bwd_units: arch.bwd_units,
            word_hidden_total: arch.word_hidden_total,
            word_layers: arch.word_layers,
            dropout_rate: arch.dropout_rate,
            attributes,
            charset,
        }
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            char_emb_dim: self.char_emb_dim,
            fwd_units: self.fwd_units,
            bwd_units: self.bwd_units,
            word_hidden_total: self.word_hidden_total,
            word_layers: self.word_layers,
            dropout_rate: self.dropout_rate,
        }
    }

    /// Total number of character-level hidden units.
    pub fn char_units(&self) -> usize {
        self.fwd_units + self.bwd_units
    }

    pub fn word_hidden_per_direction(&self) -> usize {
        self.word_hidden_total / 2
    }

    pub fn attribute(&self, name: &str) -> Result<&Attribute> {
        self.attributes
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Config(format!("unknown attribute {name:?}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.char_units() == 0 {
            return Err(Error::Config(
                "character layer needs at least one unit (fwd_units + bwd_units = 0)".into(),
            ));
        }
        if self.char_emb_dim == 0 {
            return Err(Error::Config("char_emb_dim must be positive".into()));
        }
        if self.word_hidden_total < 2 || self.word_hidden_total % 2 != 0 {
            return Err(Error::Config(format!(
                "word_hidden_total must be a positive even number, got {}",
                self.word_hidden_total
            )));
        }
        if self.word_layers == 0 {
            return Err(Error::Config("word_layers must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        match self.attributes.first() {
            Some(a) if a.name == POS_ATTRIBUTE => {}
            _ => {
                return Err(Error::Config(
                    "the first attribute must be POS".into(),
                ))
            }
        }
        for a in &self.attributes {
            if a.values.is_empty() {
                return Err(Error::Config(format!("attribute {} has no values", a.name)));
            }
        }
        Ok(())
    }
}
