mod common;

use charprobe_core::model::{glorot_uniform, Checkpoint, Direction, Tagger};
use common::micro_config;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn trace(tagger: &Tagger, word: &str) -> Vec<Vec<f64>> {
    tagger.encode_word(word, true).unwrap().1.unwrap().values
}

#[test]
fn forward_units_see_only_the_past_and_backward_only_the_future() {
    let tagger = Tagger::init(micro_config(1), 5).unwrap();
    let dirs = tagger.unit_directions();
    let base = trace(&tagger, "abcde");
    let last_changed = trace(&tagger, "abcda");
    let first_changed = trace(&tagger, "ebcde");
    for (u, d) in dirs.iter().enumerate() {
        match d {
            Direction::Forward => {
                assert_eq!(base[u][..4], last_changed[u][..4]);
                assert_ne!(base[u][0], first_changed[u][0]);
            }
            Direction::Backward => {
                assert_eq!(base[u][1..], first_changed[u][1..]);
                assert_ne!(base[u][4], last_changed[u][4]);
            }
        }
    }
}

#[test]
fn word_vector_is_final_forward_and_first_backward_state() {
    let tagger = Tagger::init(micro_config(1), 6).unwrap();
    let (v, t) = tagger.encode_word("dcab", true).unwrap();
    let t = t.unwrap();
    let expect: Vec<f64> = t
        .values
        .iter()
        .zip(&t.directions)
        .map(|(vals, d)| if d.is_forward() { vals[3] } else { vals[0] })
        .collect();
    assert_eq!(v, expect);
}

#[test]
fn glorot_statistics_at_paper_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = glorot_uniform(256, 128, &mut rng);
    let bound = (6.0f64 / 384.0).sqrt();
    let n = w.len() as f64;
    let mean = w.data().iter().sum::<f64>() / n;
    let sd = (w.data().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let expect = bound / 3f64.sqrt();
    assert!((sd - expect).abs() / expect < 0.1, "sd {sd} vs {expect}");
    assert!(mean.abs() < 0.01);
    assert!(w.data().iter().all(|x| x.abs() <= bound));
}

#[test]
fn checkpoint_file_round_trip_keeps_predictions() {
    let tagger = Tagger::init(micro_config(2), 7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    let mut ckpt = Checkpoint::new(tagger.clone());
    ckpt.meta.insert("seed".into(), "7".into());
    ckpt.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.meta, ckpt.meta);
    let forms = ["abc", "zz", "e"];
    assert_eq!(back.tagger.predict(&forms).unwrap(), tagger.predict(&forms).unwrap());
    let mut r1 = ChaCha8Rng::seed_from_u64(0);
    let mut r2 = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(
        back.tagger.tag_sentence(&forms, false, &mut r1).unwrap(),
        tagger.tag_sentence(&forms, false, &mut r2).unwrap()
    );
    assert!(matches!(
        Checkpoint::load(dir.path().join("missing.ckpt")),
        Err(charprobe_core::Error::Io { .. })
    ));
}
