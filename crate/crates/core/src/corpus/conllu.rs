//! Reading and writing the 10-column CoNLL-U format.
//!
//! Only FORM, UPOS and FEATS are retained. Comment lines, multiword token
//! ranges (`3-4`) and empty nodes (`5.1`) are skipped on input.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub upos: String,
    /// Morphosyntactic attribute-value pairs from FEATS.
    pub feats: BTreeMap<String, String>,
}

impl Token {
    pub fn new(form: impl Into<String>, upos: impl Into<String>) -> Self {
        Token {
            form: form.into(),
            upos: upos.into(),
            feats: BTreeMap::new(),
        }
    }

    pub fn with_feat(mut self, attr: impl Into<String>, value: impl Into<String>) -> Self {
        self.feats.insert(attr.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens }
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn parse_feats(field: &str, line: usize) -> Result<BTreeMap<String, String>> {
    let mut feats = BTreeMap::new();
    if field == "_" {
        return Ok(feats);
    }
    for pair in field.split('|') {
        let (k, v) = pair.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("malformed FEATS entry {pair:?}"),
        })?;
        feats.insert(k.to_string(), v.to_string());
    }
    Ok(feats)
}

/// Parses CoNLL-U text into sentences.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(Sentence::new(std::mem::take(&mut current)));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        current.push(Token {
            form: cols[1].to_string(),
            upos: cols[3].to_string(),
            feats: parse_feats(cols[5], lineno)?,
        });
    }
    if !current.is_empty() {
        sentences.push(Sentence::new(current));
    }
    Ok(sentences)
}

pub fn parse_conllu_str(text: &str) -> Result<Vec<Sentence>> {
    parse_conllu(text.as_bytes())
}

/// Writes sentences as CoNLL-U. Columns other than ID, FORM, UPOS and
/// FEATS are written as `_`.
pub fn write_conllu<W: Write>(sentences: &[Sentence], mut out: W) -> std::io::Result<()> {
    for s in sentences {
        for (i, t) in s.tokens.iter().enumerate() {
            let feats = if t.feats.is_empty() {
                "_".to_string()
            } else {
                t.feats
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join("|")
            };
            writeln!(
                out,
                "{}\t{}\t_\t{}\t_\t{}\t_\t_\t_\t_",
                i + 1,
                t.form,
                t.upos,
                feats
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn to_conllu_string(sentences: &[Sentence]) -> String {
    let mut buf = Vec::new();
    write_conllu(sentences, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 input")
}
