//! Treebank ingestion: CoNLL-U, token normalization, inventories and splits.

mod conllu;
mod treebank;

pub use conllu::{parse_conllu, parse_conllu_str, to_conllu_string, write_conllu, Sentence, Token};
pub use treebank::{make_splits, Affixation, SplitPolicy, Synthesis, Treebank};

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{Attribute, Charset, NONE_LABEL, POS_ATTRIBUTE};

/// Replaces URL-like and e-mail-like tokens by placeholders.
///
/// Matching is case-sensitive; `http` is checked before `@`.
pub fn normalize_token(form: &str) -> String {
    if form.contains("http") {
        "URL".to_string()
    } else if form.contains('@') {
        "EMAIL".to_string()
    } else {
        form.to_string()
    }
}

/// Normalizes every token form in place.
pub fn normalize_sentences(sentences: &mut [Sentence]) {
    for t in sentences.iter_mut().flat_map(|s| s.tokens.iter_mut()) {
        t.form = normalize_token(&t.form);
    }
}

/// Character inventory and per-attribute tagsets observed in a training
/// split. The POS tagset is the set of observed UPOS values; every feature
/// attribute also gets a [`NONE_LABEL`] value for tokens lacking it.
pub fn build_inventories(train: &[Sentence]) -> Result<(Charset, Vec<Attribute>)> {
    if train.iter().all(Sentence::is_empty) {
        return Err(Error::Data("training split is empty".into()));
    }
    let mut chars = BTreeSet::new();
    let mut pos = BTreeSet::new();
    let mut feats: std::collections::BTreeMap<&str, BTreeSet<&str>> = Default::default();
    for t in train.iter().flat_map(|s| &s.tokens) {
        chars.extend(normalize_token(&t.form).chars());
        pos.insert(t.upos.as_str());
        for (k, v) in &t.feats {
            feats.entry(k.as_str()).or_default().insert(v.as_str());
        }
    }
    let mut attributes = vec![Attribute::new(
        POS_ATTRIBUTE,
        pos.into_iter().map(String::from).collect(),
    )];
    for (name, values) in feats {
        if name == POS_ATTRIBUTE {
            continue;
        }
        let mut v = vec![NONE_LABEL.to_string()];
        v.extend(values.into_iter().map(String::from));
        attributes.push(Attribute::new(name, v));
    }
    Ok((Charset::new(chars), attributes))
}

/// Gold label index of a token for each attribute. `None` marks a value
/// outside the tagset (only possible on held-out data).
pub fn gold_labels(token: &Token, attributes: &[Attribute]) -> Vec<Option<usize>> {
    attributes
        .iter()
        .map(|a| {
            if a.name == POS_ATTRIBUTE {
                a.index_of(&token.upos)
            } else {
                a.index_of(token.feats.get(&a.name).map_or(NONE_LABEL, String::as_str))
            }
        })
        .collect()
}
