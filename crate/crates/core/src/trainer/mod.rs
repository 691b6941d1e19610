//! Training, evaluation and the directionality sweep.

mod stats;
mod sweep;

pub use stats::{mean, paired_t_test};
pub use sweep::{
    aggregate, read_raw_tsv, run_sweep, write_raw_tsv, JobResult, JobStatus, SweepCell, SweepRow,
    SweepSpec, SweepTable,
};

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Gradients, Graph, NodeId};
use crate::corpus::{build_inventories, gold_labels, Sentence, Treebank};
use crate::error::{Error, Result};
use crate::kv::KvFile;
use crate::model::{ArchConfig, Binder, Checkpoint, ModelConfig, ParamStore, Tagger};
use crate::tensor::Tensor;

/// Optimisation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Global gradient-norm clipping threshold; off by default.
    pub clip_norm: Option<f64>,
    /// Stop after this many epochs without a dev POS improvement.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 80,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 1,
            clip_norm: None,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub const KEYS: [&'static str; 6] = [
        "max_epochs",
        "learning_rate",
        "momentum",
        "seed",
        "clip_norm",
        "patience",
    ];

    /// Overrides any of [`Self::KEYS`] present in `kv`.
    pub fn apply_kv(&mut self, kv: &KvFile) -> Result<()> {
        if let Some(v) = kv.parsed("max_epochs")? {
            self.max_epochs = v;
        }
        if let Some(v) = kv.parsed("learning_rate")? {
            self.learning_rate = v;
        }
        if let Some(v) = kv.parsed("momentum")? {
            self.momentum = v;
        }
        if let Some(v) = kv.parsed("seed")? {
            self.seed = v;
        }
        if let Some(v) = kv.parsed("clip_norm")? {
            self.clip_norm = Some(v);
        }
        if let Some(v) = kv.parsed("patience")? {
            self.patience = Some(v);
        }
        Ok(())
    }

    /// Writes every setting; unset optional ones are omitted.
    pub fn write_kv(&self, kv: &mut KvFile) {
        kv.push("max_epochs", self.max_epochs);
        kv.push("learning_rate", self.learning_rate);
        kv.push("momentum", self.momentum);
        kv.push("seed", self.seed);
        if let Some(c) = self.clip_norm {
            kv.push("clip_norm", c);
        }
        if let Some(p) = self.patience {
            kv.push("patience", p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning_rate must be a finite non-negative number, got {}",
                self.learning_rate
            )));
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return Err(Error::Config("clip_norm must be positive".into()));
        }
        Ok(())
    }
}

/// Summed negative log-likelihood over tokens and attributes.
///
/// `gold[token][attribute]` must align with `logits`.
pub fn sentence_loss(graph: &mut Graph, logits: &[Vec<NodeId>], gold: &[Vec<usize>]) -> Result<NodeId> {
    if logits.len() != gold.len() {
        return Err(Error::Contract(format!(
            "{} token outputs but {} gold tokens",
            logits.len(),
            gold.len()
        )));
    }
    let mut terms = Vec::with_capacity(logits.len() * logits.first().map_or(0, Vec::len));
    for (i, (l, g)) in logits.iter().zip(gold).enumerate() {
        if l.len() != g.len() {
            return Err(Error::Contract(format!(
                "token {i}: {} attribute outputs but {} gold labels",
                l.len(),
                g.len()
            )));
        }
        for (&node, &label) in l.iter().zip(g) {
            terms.push(graph.softmax_nll(node, label)?);
        }
    }
    graph.sum(&terms)
}

/// Gold label indices for a training sentence. Every label must be in the
/// tagsets.
pub fn training_labels(config: &ModelConfig, sentence: &Sentence) -> Result<Vec<Vec<usize>>> {
    sentence
        .tokens
        .iter()
        .map(|t| {
            gold_labels(t, &config.attributes)
                .into_iter()
                .zip(&config.attributes)
                .map(|(g, a)| {
                    g.ok_or_else(|| {
                        Error::Data(format!(
                            "token {:?} has a {} label outside the tagset",
                            t.form, a.name
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

/// Loss and parameter gradients for one sentence. With `dropout_rng`, the
/// model runs in train mode.
pub fn loss_and_gradients(
    tagger: &Tagger,
    sentence: &Sentence,
    dropout_rng: Option<&mut dyn rand::RngCore>,
) -> Result<(f64, Gradients)> {
    let gold = training_labels(tagger.config(), sentence)?;
    let mut graph = Graph::new();
    let mut binder = Binder::new(tagger.params());
    let logits = tagger.forward(&mut graph, &mut binder, &sentence.forms(), dropout_rng)?;
    let loss = sentence_loss(&mut graph, &logits, &gold)?;
    let value = graph.value(loss).data()[0];
    let grads = graph.backward(loss)?;
    Ok((value, grads))
}

/// Mean per-sentence loss without dropout. Gold labels outside the tagsets
/// (possible on held-out data) are left out of the sum.
pub fn mean_loss(tagger: &Tagger, sentences: &[Sentence]) -> Result<f64> {
    let attrs = &tagger.config().attributes;
    let mut total = 0.0;
    let mut count = 0usize;
    for s in sentences.iter().filter(|s| !s.is_empty()) {
        let mut graph = Graph::new();
        let mut binder = Binder::new(tagger.params());
        let logits = tagger.forward(&mut graph, &mut binder, &s.forms(), None)?;
        for (token, outputs) in s.tokens.iter().zip(&logits) {
            for (gold, &node) in gold_labels(token, attrs).into_iter().zip(outputs) {
                if let Some(g) = gold {
                    let nll = graph.softmax_nll(node, g)?;
                    total += graph.value(nll).data()[0];
                }
            }
        }
        count += 1;
    }
    Ok(total / count.max(1) as f64)
}

/// Classical momentum: `v ← μv − η∇`, `θ ← θ + v`.
#[derive(Debug, Clone)]
pub struct MomentumSgd {
    pub learning_rate: f64,
    pub momentum: f64,
    pub clip_norm: Option<f64>,
    velocity: Vec<Tensor>,
}

impl MomentumSgd {
    pub fn new(params: &ParamStore, learning_rate: f64, momentum: f64) -> Self {
        MomentumSgd {
            learning_rate,
            momentum,
            clip_norm: None,
            velocity: params.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect(),
        }
    }

    pub fn step(&mut self, params: &mut ParamStore, grads: &Gradients) {
        let scale = match self.clip_norm {
            Some(max) => {
                let norm = grads
                    .params()
                    .flat_map(|(_, g)| g.data().iter())
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt();
                if norm > max {
                    max / norm
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        let mut touched = vec![false; params.len()];
        for (p, g) in grads.params() {
            touched[p] = true;
            let v = self.velocity[p].data_mut();
            let theta = params.get_mut(p).data_mut();
            for ((vi, ti), &gi) in v.iter_mut().zip(theta.iter_mut()).zip(g.data()) {
                *vi = self.momentum * *vi - self.learning_rate * scale * gi;
                *ti += *vi;
            }
        }
        // Parameters absent from this graph still coast on their velocity.
        for (p, done) in touched.into_iter().enumerate() {
            if done {
                continue;
            }
            let v = self.velocity[p].data_mut();
            let theta = params.get_mut(p).data_mut();
            for (vi, ti) in v.iter_mut().zip(theta.iter_mut()) {
                *vi *= self.momentum;
                *ti += *vi;
            }
        }
    }
}

/// Token accuracy per attribute, in config attribute order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub attributes: Vec<(String, f64)>,
    pub tokens: usize,
}

impl Accuracy {
    pub fn pos(&self) -> f64 {
        self.attributes[0].1
    }
}

/// Argmax decoding accuracy. Gold values outside the tagset count as errors.
pub fn evaluate(tagger: &Tagger, sentences: &[Sentence]) -> Result<Accuracy> {
    let attrs = &tagger.config().attributes;
    let mut correct = vec![0usize; attrs.len()];
    let mut total = 0usize;
    for s in sentences.iter().filter(|s| !s.is_empty()) {
        let pred = tagger.predict(&s.forms())?;
        for (t, p) in s.tokens.iter().zip(&pred) {
            total += 1;
            for (a, (g, &pi)) in gold_labels(t, attrs).iter().zip(p).enumerate() {
                correct[a] += (*g == Some(pi)) as usize;
            }
        }
    }
    if total == 0 {
        return Err(Error::Data("evaluation split has no tokens".into()));
    }
    Ok(Accuracy {
        attributes: attrs
            .iter()
            .zip(correct)
            .map(|(a, c)| (a.name.clone(), c as f64 / total as f64))
            .collect(),
        tokens: total,
    })
}

/// Accuracy from precomputed per-token (gold, predicted) pairs.
pub fn accuracy_from_pairs(pairs: &[(Option<usize>, usize)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().filter(|(g, p)| *g == Some(*p)).count() as f64 / pairs.len() as f64
}

/// One row of the per-epoch training log. Epoch 0 is the untrained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: Option<f64>,
    /// Mean per-sentence dev loss without dropout.
    pub dev_loss: f64,
    pub dev: Accuracy,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_dev_pos: f64,
}

/// Renders the epoch log as TSV.
pub fn log_to_tsv(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch\ttrain_loss\tdev_loss");
    if let Some(first) = log.first() {
        for (name, _) in &first.dev.attributes {
            let _ = write!(out, "\tdev_{name}");
        }
    }
    out.push('\n');
    for row in log {
        let _ = write!(out, "{}", row.epoch);
        match row.train_loss {
            Some(l) => {
                let _ = write!(out, "\t{l}");
            }
            None => out.push_str("\tNA"),
        }
        let _ = write!(out, "\t{}", row.dev_loss);
        for (_, acc) in &row.dev.attributes {
            let _ = write!(out, "\t{acc}");
        }
        out.push('\n');
    }
    out
}

/// Trains a tagger on the treebank's train split, selecting the epoch with
/// the best dev POS accuracy (earliest on ties).
pub fn train(treebank: &Treebank, arch: &ArchConfig, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let train_split = treebank.train()?;
    let dev_split = treebank.dev()?;
    if train_split.is_empty() || dev_split.is_empty() {
        return Err(Error::Data(format!(
            "treebank {} needs nonempty train and dev splits",
            treebank.name
        )));
    }
    let (charset, attributes) = build_inventories(train_split)?;
    let model_config = ModelConfig::from_arch(arch, charset, attributes);
    let mut tagger = Tagger::init(model_config, config.seed)?;
    let mut optimizer = MomentumSgd::new(tagger.params(), config.learning_rate, config.momentum);
    optimizer.clip_norm = config.clip_norm;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0f_7a11);

    let train_sentences: Vec<&Sentence> = train_split.iter().filter(|s| !s.is_empty()).collect();
    let initial = evaluate(&tagger, dev_split)?;
    let mut best = (0, initial.pos(), tagger.clone());
    let mut log = vec![EpochLog {
        epoch: 0,
        train_loss: None,
        dev_loss: mean_loss(&tagger, dev_split)?,
        dev: initial,
    }];
    let mut order: Vec<usize> = (0..train_sentences.len()).collect();
    let mut since_best = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (loss, grads) = loss_and_gradients(&tagger, train_sentences[i], Some(&mut rng))?;
            if !loss.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite training loss at epoch {epoch}; lower the learning rate"
                )));
            }
            total += loss;
            optimizer.step(tagger.params_mut(), &grads);
        }
        let dev = evaluate(&tagger, dev_split)?;
        let pos = dev.pos();
        log.push(EpochLog {
            epoch,
            train_loss: Some(total / train_sentences.len() as f64),
            dev_loss: mean_loss(&tagger, dev_split)?,
            dev,
        });
        if pos > best.1 {
            best = (epoch, pos, tagger.clone());
            since_best = 0;
        } else {
            since_best += 1;
        }
        if matches!(config.patience, Some(p) if since_best >= p) {
            break;
        }
    }

    let (best_epoch, best_dev_pos, best_tagger) = best;
    let mut checkpoint = Checkpoint::new(best_tagger);
    checkpoint.meta.insert("treebank".into(), treebank.name.clone());
    checkpoint.meta.insert("seed".into(), config.seed.to_string());
    checkpoint.meta.insert("epoch".into(), best_epoch.to_string());
    checkpoint
        .meta
        .insert("dev_pos_accuracy".into(), best_dev_pos.to_string());
    Ok(TrainOutcome {
        checkpoint,
        log,
        best_epoch,
        best_dev_pos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use crate::model::{Attribute, Charset};

    fn uniform_logits(graph: &mut Graph, n: usize) -> NodeId {
        graph.constant(Tensor::vector(vec![0.0; n]))
    }

    #[test]
    fn loss_of_uniform_predictions() {
        let mut g = Graph::new();
        let l = uniform_logits(&mut g, 10);
        let loss = sentence_loss(&mut g, &[vec![l]], &[vec![3]]).unwrap();
        assert!((g.value(loss).data()[0] - 10f64.ln()).abs() < 1e-12);

        let mut g = Graph::new();
        let a = uniform_logits(&mut g, 10);
        let b = uniform_logits(&mut g, 3);
        let c = uniform_logits(&mut g, 4);
        let loss = sentence_loss(&mut g, &[vec![a, b, c]], &[vec![0, 1, 2]]).unwrap();
        let expect = 10f64.ln() + 3f64.ln() + 4f64.ln();
        assert!((g.value(loss).data()[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn loss_of_confident_correct_predictions_is_near_zero() {
        let mut g = Graph::new();
        let l = g.constant(Tensor::vector(vec![50.0, 0.0, 0.0]));
        let loss = sentence_loss(&mut g, &[vec![l], vec![l]], &[vec![0], vec![0]]).unwrap();
        assert!(g.value(loss).data()[0] < 1e-20);
    }

    #[test]
    fn misaligned_gold_is_contract_error() {
        let mut g = Graph::new();
        let l = uniform_logits(&mut g, 3);
        assert!(matches!(
            sentence_loss(&mut g, &[vec![l]], &[vec![0], vec![1]]),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            sentence_loss(&mut g, &[vec![l]], &[vec![0, 1]]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn zero_momentum_matches_plain_sgd() {
        let mut store = ParamStore::new();
        store.push("w", Tensor::vector(vec![1.0, -2.0]));
        let mut plain = store.clone();
        let mut opt = MomentumSgd::new(&store, 0.1, 0.0);
        for step in 0..5 {
            let mut g = Graph::new();
            let w = g.param(store.get(0).clone(), 0);
            let sq = g.mul(w, w).unwrap();
            let a = g.slice(sq, 0, 1).unwrap();
            let b = g.slice(sq, 1, 1).unwrap();
            let loss = g.sum(&[a, b]).unwrap();
            let grads = g.backward(loss).unwrap();
            opt.step(&mut store, &grads);
            for v in plain.get_mut(0).data_mut() {
                *v -= 0.1 * 2.0 * *v;
            }
            assert_eq!(store, plain, "step {step}");
        }
    }

    #[test]
    fn momentum_accumulates_velocity() {
        let mut store = ParamStore::new();
        store.push("w", Tensor::scalar(0.0));
        let mut opt = MomentumSgd::new(&store, 1.0, 0.5);
        for _ in 0..2 {
            let mut g = Graph::new();
            let w = g.param(store.get(0).clone(), 0);
            let grads = g.backward(w).unwrap();
            opt.step(&mut store, &grads);
        }
        // v1 = -1, w1 = -1; v2 = -0.5 - 1 = -1.5, w2 = -2.5
        assert_eq!(store.get(0).data(), &[-2.5]);
    }

    fn tiny_tagger() -> Tagger {
        let cfg = ModelConfig {
            char_emb_dim: 4,
            fwd_units: 2,
            bwd_units: 2,
            word_hidden_total: 4,
            word_layers: 1,
            dropout_rate: 0.0,
            attributes: vec![Attribute::new("POS", vec!["A".into(), "B".into()])],
            charset: Charset::new("ab".chars()),
        };
        Tagger::init(cfg, 3).unwrap()
    }

    #[test]
    fn evaluation_counts_tokens_and_is_order_invariant() {
        let t = tiny_tagger();
        let sents = vec![
            Sentence::new(vec![Token::new("a", "A"), Token::new("b", "B")]),
            Sentence::new(vec![Token::new("ab", "A"), Token::new("ba", "Z")]),
        ];
        let acc = evaluate(&t, &sents).unwrap();
        assert_eq!(acc.tokens, 4);
        let rev: Vec<_> = sents.iter().rev().cloned().collect();
        assert_eq!(evaluate(&t, &rev).unwrap(), acc);
        // the Z token can never be right
        assert!(acc.pos() <= 0.75);
        assert!(evaluate(&t, &[]).is_err());
    }

    #[test]
    fn accuracy_from_pairs_cases() {
        assert_eq!(
            accuracy_from_pairs(&[(Some(0), 0), (Some(1), 1), (Some(2), 2), (Some(0), 1)]),
            0.75
        );
        assert_eq!(accuracy_from_pairs(&[(Some(1), 1), (Some(0), 0)]), 1.0);
    }

    #[test]
    fn invalid_train_config() {
        let mut c = TrainConfig::default();
        c.momentum = 1.0;
        assert!(c.validate().is_err());
        c.momentum = 0.9;
        c.learning_rate = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn log_tsv_has_header_and_rows() {
        let log = vec![EpochLog {
            epoch: 0,
            train_loss: None,
            dev_loss: 1.5,
            dev: Accuracy {
                attributes: vec![("POS".into(), 0.5)],
                tokens: 2,
            },
        }];
        assert_eq!(
            log_to_tsv(&log),
            "epoch\ttrain_loss\tdev_loss\tdev_POS\n0\tNA\t1.5\t0.5\n"
        );
    }
}
