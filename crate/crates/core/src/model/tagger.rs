use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::lstm::{LstmDirection, SequenceMasks};
use super::params::{glorot_uniform, Binder, ParamStore};
use crate::autodiff::{dropout_mask, softmax, Graph, NodeId};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Reading direction of a character-level unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }

    pub fn is_forward(self) -> bool {
        self == Direction::Forward
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" | "f" => Ok(Direction::Forward),
            "backward" | "b" => Ok(Direction::Backward),
            other => Err(Error::Data(format!("unknown direction {other:?}"))),
        }
    }
}

/// Per-character outputs of every character-level unit on one word.
///
/// Units `0..fwd_units` are forward, the rest backward. Backward values are
/// stored by character position: the value at position `c` is the state
/// after reading characters `|w|-1 ..= c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    pub word: Vec<char>,
    /// `values[unit][position]`
    pub values: Vec<Vec<f64>>,
    pub directions: Vec<Direction>,
}

impl ActivationTrace {
    pub fn new(word: &str, values: Vec<Vec<f64>>, directions: Vec<Direction>) -> Result<Self> {
        let word: Vec<char> = word.chars().collect();
        if word.is_empty() {
            return Err(Error::Contract("activation trace of an empty word".into()));
        }
        if values.len() != directions.len() {
            return Err(Error::Contract(format!(
                "{} unit rows but {} direction labels",
                values.len(),
                directions.len()
            )));
        }
        if let Some(row) = values.iter().find(|r| r.len() != word.len()) {
            return Err(Error::Contract(format!(
                "unit row of length {} for a word of length {}",
                row.len(),
                word.len()
            )));
        }
        Ok(ActivationTrace {
            word,
            values,
            directions,
        })
    }

    pub fn num_units(&self) -> usize {
        self.values.len()
    }

    pub fn word_len(&self) -> usize {
        self.word.len()
    }

    pub fn unit(&self, i: usize) -> Result<&[f64]> {
        self.values.get(i).map(Vec::as_slice).ok_or(Error::Index {
            what: "unit",
            index: i,
            size: self.values.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Head {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Layout {
    char_emb: usize,
    char_fwd: Option<LstmDirection>,
    char_bwd: Option<LstmDirection>,
    word: Vec<(LstmDirection, LstmDirection)>,
    heads: Vec<Head>,
}

/// Character BiLSTM → word BiLSTM → per-attribute MLP tagger.
#[derive(Debug, Clone, PartialEq)]
pub struct Tagger {
    config: ModelConfig,
    params: ParamStore,
    layout: Layout,
}

/// Logit nodes for one sentence: `logits[token][attribute]`.
pub type SentenceLogits = Vec<Vec<NodeId>>;

fn build<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> (ParamStore, Layout) {
    let mut store = ParamStore::new();
    let emb = config.char_emb_dim;
    let char_emb = store.push(
        "char.emb",
        glorot_uniform(config.charset.len(), emb, rng),
    );
    let char_fwd = (config.fwd_units > 0)
        .then(|| LstmDirection::init(&mut store, "char.fwd", emb, config.fwd_units, rng));
    let char_bwd = (config.bwd_units > 0)
        .then(|| LstmDirection::init(&mut store, "char.bwd", emb, config.bwd_units, rng));
    let hw = config.word_hidden_per_direction();
    let mut word = Vec::with_capacity(config.word_layers);
    for l in 0..config.word_layers {
        let input = if l == 0 {
            config.char_units()
        } else {
            config.word_hidden_total
        };
        let f = LstmDirection::init(&mut store, &format!("word.l{l}.fwd"), input, hw, rng);
        let b = LstmDirection::init(&mut store, &format!("word.l{l}.bwd"), input, hw, rng);
        word.push((f, b));
    }
    let heads = config
        .attributes
        .iter()
        .map(|a| {
            let k = a.values.len();
            let p = format!("head.{}", a.name);
            Head {
                w1: store.push(
                    format!("{p}.w1"),
                    glorot_uniform(k, config.word_hidden_total, rng),
                ),
                b1: store.push(format!("{p}.b1"), Tensor::zeros(&[k])),
                w2: store.push(format!("{p}.w2"), glorot_uniform(k, k, rng)),
                b2: store.push(format!("{p}.b2"), Tensor::zeros(&[k])),
            }
        })
        .collect();
    (
        store,
        Layout {
            char_emb,
            char_fwd,
            char_bwd,
            word,
            heads,
        },
    )
}

impl Tagger {
    /// Glorot-uniform weights, zero biases, deterministic per seed.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (params, layout) = build(&config, &mut rng);
        Ok(Tagger {
            config,
            params,
            layout,
        })
    }

    /// Reassembles a tagger from a config and previously trained tensors.
    pub fn from_parts(config: ModelConfig, params: ParamStore) -> Result<Self> {
        config.validate()?;
        let (reference, layout) = build(&config, &mut ChaCha8Rng::seed_from_u64(0));
        reference.check_layout(&params)?;
        Ok(Tagger {
            config,
            params,
            layout,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize> {
        self.config
            .attributes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::Config(format!("unknown attribute {name:?}")))
    }

    /// Direction label of every character unit, forward units first.
    pub fn unit_directions(&self) -> Vec<Direction> {
        let mut d = vec![Direction::Forward; self.config.fwd_units];
        d.extend(std::iter::repeat(Direction::Backward).take(self.config.bwd_units));
        d
    }

    /// Character BiLSTM on one word inside `graph`. Returns the word vector
    /// and the per-position outputs of each direction.
    pub fn encode_in_graph(
        &self,
        graph: &mut Graph,
        binder: &mut Binder<'_>,
        word: &str,
    ) -> Result<(NodeId, Vec<NodeId>, Vec<NodeId>)> {
        let ids = self.config.charset.encode(word);
        if ids.is_empty() {
            return Err(Error::Contract("cannot encode an empty word".into()));
        }
        let table = binder.bind(graph, self.layout.char_emb);
        let embs = ids
            .iter()
            .map(|&i| graph.lookup(table, i))
            .collect::<Result<Vec<_>>>()?;
        let none = SequenceMasks::default();
        let fwd = match &self.layout.char_fwd {
            Some(d) => d.run(graph, binder, &embs, none)?,
            None => Vec::new(),
        };
        let bwd = match &self.layout.char_bwd {
            Some(d) => d.run_reversed(graph, binder, &embs, none)?,
            None => Vec::new(),
        };
        let mut finals = Vec::with_capacity(2);
        if let Some(&h) = fwd.last() {
            finals.push(h);
        }
        if let Some(&h) = bwd.first() {
            finals.push(h);
        }
        let vector = if finals.len() == 1 {
            finals[0]
        } else {
            graph.concat(&finals)?
        };
        Ok((vector, fwd, bwd))
    }

    /// Word representation (`fwd_units + bwd_units` values) and, when asked,
    /// the activation trace of every character unit.
    pub fn encode_word(
        &self,
        word: &str,
        record_trace: bool,
    ) -> Result<(Vec<f64>, Option<ActivationTrace>)> {
        let mut graph = Graph::new();
        let mut binder = Binder::new(&self.params);
        let (vector, fwd, bwd) = self.encode_in_graph(&mut graph, &mut binder, word)?;
        let vector = graph.value(vector).data().to_vec();
        if !record_trace {
            return Ok((vector, None));
        }
        let n = fwd.len().max(bwd.len());
        let mut values = Vec::with_capacity(self.config.char_units());
        for (states, units) in [(&fwd, self.config.fwd_units), (&bwd, self.config.bwd_units)] {
            for u in 0..units {
                values.push((0..n).map(|c| graph.value(states[c]).data()[u]).collect());
            }
        }
        let trace = ActivationTrace::new(word, values, self.unit_directions())?;
        Ok((vector, Some(trace)))
    }

    /// Builds the full tagger over a sentence. With `dropout_rng`, variational
    /// dropout masks are drawn for the word BiLSTM (one per layer, direction
    /// and connection type, reused across time steps).
    pub fn forward(
        &self,
        graph: &mut Graph,
        binder: &mut Binder<'_>,
        forms: &[&str],
        mut dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<SentenceLogits> {
        if forms.is_empty() {
            return Err(Error::Contract("cannot tag an empty sentence".into()));
        }
        let mut seq = forms
            .iter()
            .map(|w| self.encode_in_graph(graph, binder, w).map(|r| r.0))
            .collect::<Result<Vec<_>>>()?;
        let rate = self.config.dropout_rate;
        for (fwd, bwd) in &self.layout.word {
            let mut masks = [SequenceMasks::default(); 2];
            if let Some(rng) = dropout_rng.as_deref_mut() {
                if rate > 0.0 {
                    for (m, dir) in masks.iter_mut().zip([fwd, bwd]) {
                        let input = dropout_mask(&[dir.input_dim], rate, rng)?;
                        let rec = dropout_mask(&[dir.hidden_dim], rate, rng)?;
                        m.input = Some(graph.constant(input));
                        m.recurrent = Some(graph.constant(rec));
                    }
                }
            }
            let hf = fwd.run(graph, binder, &seq, masks[0])?;
            let hb = bwd.run_reversed(graph, binder, &seq, masks[1])?;
            seq = hf
                .iter()
                .zip(&hb)
                .map(|(&f, &b)| graph.concat(&[f, b]))
                .collect::<Result<Vec<_>>>()?;
        }
        let mut logits = Vec::with_capacity(seq.len());
        for &h in &seq {
            let mut per_attr = Vec::with_capacity(self.layout.heads.len());
            for head in &self.layout.heads {
                let w1 = binder.bind(graph, head.w1);
                let b1 = binder.bind(graph, head.b1);
                let w2 = binder.bind(graph, head.w2);
                let b2 = binder.bind(graph, head.b2);
                let z1 = graph.matvec(w1, h)?;
                let z1 = graph.add(z1, b1)?;
                let a1 = graph.tanh(z1);
                let z2 = graph.matvec(w2, a1)?;
                per_attr.push(graph.add(z2, b2)?);
            }
            logits.push(per_attr);
        }
        Ok(logits)
    }

    /// Per-token, per-attribute probability distributions. Dropout is applied
    /// only in train mode.
    pub fn tag_sentence(
        &self,
        forms: &[&str],
        train_mode: bool,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Vec<Vec<f64>>>> {
        let mut graph = Graph::new();
        let mut binder = Binder::new(&self.params);
        let dropout = if train_mode { Some(rng) } else { None };
        let logits = self.forward(&mut graph, &mut binder, forms, dropout)?;
        Ok(logits
            .iter()
            .map(|attrs| {
                attrs
                    .iter()
                    .map(|&id| softmax(graph.value(id).data()))
                    .collect()
            })
            .collect())
    }

    /// Argmax label index per token and attribute, without dropout.
    pub fn predict(&self, forms: &[&str]) -> Result<Vec<Vec<usize>>> {
        let mut graph = Graph::new();
        let mut binder = Binder::new(&self.params);
        let logits = self.forward(&mut graph, &mut binder, forms, None)?;
        Ok(logits
            .iter()
            .map(|attrs| {
                attrs
                    .iter()
                    .map(|&id| argmax(graph.value(id).data()))
                    .collect()
            })
            .collect())
    }
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
