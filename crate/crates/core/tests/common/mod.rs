//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use charprobe_core::corpus::{Sentence, Token};
use charprobe_core::model::{Attribute, Charset, ModelConfig, Tagger};
use charprobe_core::trainer::loss_and_gradients;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tiny tagger: 4-dim embeddings, 3/2 character units, one 4-wide word layer.
pub fn micro_config(word_layers: usize) -> ModelConfig {
    ModelConfig {
        char_emb_dim: 4,
        fwd_units: 3,
        bwd_units: 2,
        word_hidden_total: 4,
        word_layers,
        dropout_rate: 0.5,
        attributes: vec![
            Attribute::new("POS", vec!["NOUN".into(), "VERB".into()]),
            Attribute::new("Number", vec!["<NONE>".into(), "Sing".into(), "Plur".into()]),
        ],
        charset: Charset::new("abcde".chars()),
    }
}

pub fn micro_sentence() -> Sentence {
    Sentence::new(vec![
        Token::new("abca", "NOUN").with_feat("Number", "Sing"),
        Token::new("dez", "VERB"),
        Token::new("e", "NOUN").with_feat("Number", "Plur"),
    ])
}

/// Per-tensor result of a finite-difference check.
pub struct TensorCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_err: f64,
}

/// Relative error with a floor on the denominator, so coordinates whose true
/// gradient is ~0 are judged on absolute error instead.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central differences with step `h` on up to `per_tensor` sampled
/// coordinates of every parameter tensor. With `dropout_seed`, the model runs
/// in train mode with the same dropout masks for every evaluation.
pub fn gradient_check(
    tagger: &mut Tagger,
    sentence: &Sentence,
    dropout_seed: Option<u64>,
    h: f64,
    per_tensor: usize,
) -> Vec<TensorCheck> {
    let eval = |t: &Tagger| {
        let mut rng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
        let r = rng.as_mut().map(|r| r as &mut dyn rand::RngCore);
        loss_and_gradients(t, sentence, r).unwrap()
    };
    let (_, grads) = eval(tagger);
    let analytic: Vec<Vec<f64>> = (0..tagger.params().len())
        .map(|i| {
            grads
                .params()
                .find(|(p, _)| *p == i)
                .map(|(_, g)| g.data().to_vec())
                .unwrap_or_else(|| vec![0.0; tagger.params().get(i).len()])
        })
        .collect();
    let mut pick = ChaCha8Rng::seed_from_u64(11);
    let mut out = Vec::new();
    for p in 0..tagger.params().len() {
        let size = tagger.params().get(p).len();
        let coords: Vec<usize> = if size <= per_tensor {
            (0..size).collect()
        } else {
            sample(&mut pick, size, per_tensor).into_vec()
        };
        let mut worst: f64 = 0.0;
        for &c in &coords {
            let orig = tagger.params().get(p).data()[c];
            tagger.params_mut().get_mut(p).data_mut()[c] = orig + h;
            let up = eval(tagger).0;
            tagger.params_mut().get_mut(p).data_mut()[c] = orig - h;
            let down = eval(tagger).0;
            tagger.params_mut().get_mut(p).data_mut()[c] = orig;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(rel_err(analytic[p][c], numeric));
        }
        out.push(TensorCheck {
            name: tagger.params().name(p).to_string(),
            checked: coords.len(),
            max_rel_err: worst,
        });
    }
    out
}
