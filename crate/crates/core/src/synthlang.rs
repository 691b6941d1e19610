//! Seeded synthetic corpora with controllable affix position and
//! morphological synthesis.
//!
//! Every corpus uses four POS tags and one three-valued feature attribute.
//! Morpheme inventories are drawn before the affix position is consulted, so
//! a prefixing profile and a suffixing profile with the same seed produce
//! token-wise mirror images of each other.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Affixation, Sentence, Synthesis, Token, Treebank};
use crate::error::{Error, Result};
use crate::kv::KvFile;

pub const POS_TAGS: [&str; 4] = ["NOUN", "VERB", "ADJ", "ADV"];
pub const FEATURE_NAME: &str = "Number";
pub const FEATURE_VALUES: [&str; 3] = ["Sing", "Dual", "Plur"];
const AFFIX_LEN: usize = 2;
const LETTERS: &str = "abcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AffixPosition {
    Prefix,
    Suffix,
    None,
}

impl fmt::Display for AffixPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AffixPosition::Prefix => "prefix",
            AffixPosition::Suffix => "suffix",
            AffixPosition::None => "none",
        })
    }
}

impl FromStr for AffixPosition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prefix" => Ok(AffixPosition::Prefix),
            "suffix" => Ok(AffixPosition::Suffix),
            "none" => Ok(AffixPosition::None),
            other => Err(Error::Config(format!(
                "unknown affix position {other:?} (expected prefix, suffix, none)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypologyProfile {
    pub affix_position: AffixPosition,
    pub synthesis: Synthesis,
    pub alphabet_size: usize,
    pub n_stems: usize,
    pub stem_len: RangeInclusive<usize>,
    pub sent_len: RangeInclusive<usize>,
    pub label_noise: f64,
}

impl TypologyProfile {
    pub fn new(affix_position: AffixPosition, synthesis: Synthesis) -> Self {
        TypologyProfile {
            affix_position,
            synthesis,
            alphabet_size: 12,
            n_stems: 200,
            stem_len: 3..=6,
            sent_len: 4..=12,
            label_noise: 0.0,
        }
    }

    pub fn suffix_agglutinative() -> Self {
        Self::new(AffixPosition::Suffix, Synthesis::Agglutinative)
    }

    pub fn prefix_agglutinative() -> Self {
        Self::new(AffixPosition::Prefix, Synthesis::Agglutinative)
    }

    pub fn isolating() -> Self {
        Self::new(AffixPosition::None, Synthesis::Isolating)
    }

    fn distinct_affixes(&self) -> usize {
        match self.synthesis {
            Synthesis::Agglutinative => POS_TAGS.len() + FEATURE_VALUES.len(),
            // 12 cells, 2 realised by stem alternation, 2 sharing one affix
            Synthesis::Fusional => POS_TAGS.len() * FEATURE_VALUES.len() - 3,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=LETTERS.len()).contains(&self.alphabet_size) {
            return Err(Error::Config(format!(
                "alphabet_size must lie in 2..=26, got {}",
                self.alphabet_size
            )));
        }
        match (self.synthesis, self.affix_position) {
            (Synthesis::Introflexive, _) => {
                return Err(Error::Config(
                    "introflexive synthesis is not supported by the generator".into(),
                ))
            }
            (Synthesis::Agglutinative | Synthesis::Fusional, AffixPosition::None) => {
                return Err(Error::Config(format!(
                    "{} synthesis needs a prefix or suffix position",
                    self.synthesis
                )))
            }
            _ => {}
        }
        let needed = self.distinct_affixes();
        let available = self.alphabet_size.pow(AFFIX_LEN as u32);
        if needed > available {
            return Err(Error::Config(format!(
                "alphabet of {} letters yields {available} affixes of length {AFFIX_LEN}, \
                 {needed} needed",
                self.alphabet_size
            )));
        }
        if self.stem_len.is_empty() || *self.stem_len.start() == 0 {
            return Err(Error::Config("stem_len must be a non-empty range of positive lengths".into()));
        }
        if self.sent_len.is_empty() || *self.sent_len.start() == 0 {
            return Err(Error::Config("sent_len must be a non-empty range of positive lengths".into()));
        }
        if self.n_stems == 0 {
            return Err(Error::Config("n_stems must be positive".into()));
        }
        let capacity: f64 = self
            .stem_len
            .clone()
            .map(|l| (self.alphabet_size as f64).powi(l as i32))
            .sum();
        if (self.n_stems as f64) > capacity / 2.0 {
            return Err(Error::Config(format!(
                "alphabet of {} letters is too small for {} distinct stems",
                self.alphabet_size, self.n_stems
            )));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return Err(Error::Config(format!(
                "label_noise must lie in [0, 1), got {}",
                self.label_noise
            )));
        }
        Ok(())
    }

    /// Profile file keys: `affix_position`, `synthesis`, `alphabet_size`,
    /// `n_stems`, `stem_len` (`lo..hi`, inclusive), `sent_len`, `label_noise`.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let position = kv.parsed("affix_position")?.unwrap_or(AffixPosition::Suffix);
        let synthesis = kv.parsed("synthesis")?.unwrap_or(Synthesis::Agglutinative);
        let mut p = TypologyProfile::new(position, synthesis);
        if let Some(v) = kv.parsed("alphabet_size")? {
            p.alphabet_size = v;
        }
        if let Some(v) = kv.parsed("n_stems")? {
            p.n_stems = v;
        }
        if let Some(v) = kv.get("stem_len") {
            p.stem_len = parse_range(v)?;
        }
        if let Some(v) = kv.get("sent_len") {
            p.sent_len = parse_range(v)?;
        }
        if let Some(v) = kv.parsed("label_noise")? {
            p.label_noise = v;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::new();
        kv.push("affix_position", self.affix_position);
        kv.push("synthesis", self.synthesis);
        kv.push("alphabet_size", self.alphabet_size);
        kv.push("n_stems", self.n_stems);
        kv.push(
            "stem_len",
            format!("{}..{}", self.stem_len.start(), self.stem_len.end()),
        );
        kv.push(
            "sent_len",
            format!("{}..{}", self.sent_len.start(), self.sent_len.end()),
        );
        kv.push("label_noise", self.label_noise);
        kv
    }
}

/// Parses `lo..hi` (inclusive) or a single number.
pub fn parse_range(s: &str) -> Result<RangeInclusive<usize>> {
    let bad = || Error::Config(format!("bad range {s:?}, expected lo..hi"));
    match s.split_once("..") {
        Some((lo, hi)) => {
            let lo = lo.trim().parse().map_err(|_| bad())?;
            let hi = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            Ok(lo..=hi)
        }
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            Ok(v..=v)
        }
    }
}

/// How one (POS, feature) cell is realised in fusional mode.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Exponent {
    Affix(String),
    /// Shift the stem-final letter by this many alphabet positions.
    Alternation(usize),
}

/// The drawn morpheme inventory. Strings are in suffixing orientation;
/// prefixing corpora reverse whole forms.
#[derive(Debug, Clone)]
pub struct Morphology {
    alphabet: Vec<char>,
    pub stems: Vec<String>,
    pub pos_affixes: Vec<String>,
    pub feature_affixes: Vec<String>,
    fused: Vec<Exponent>,
    synthesis: Synthesis,
    position: AffixPosition,
}

fn random_string(alphabet: &[char], len: usize, rng: &mut ChaCha8Rng) -> String {
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

impl Morphology {
    fn draw(profile: &TypologyProfile, rng: &mut ChaCha8Rng) -> Self {
        let alphabet: Vec<char> = LETTERS.chars().take(profile.alphabet_size).collect();
        let mut seen = BTreeSet::new();
        let mut affixes = Vec::new();
        while affixes.len() < profile.distinct_affixes() {
            let a = random_string(&alphabet, AFFIX_LEN, rng);
            if seen.insert(a.clone()) {
                affixes.push(a);
            }
        }
        let mut stem_set = BTreeSet::new();
        let mut stems = Vec::with_capacity(profile.n_stems);
        while stems.len() < profile.n_stems {
            let len = rng.gen_range(profile.stem_len.clone());
            let s = random_string(&alphabet, len, rng);
            if stem_set.insert(s.clone()) {
                stems.push(s);
            }
        }
        let (mut pos_affixes, mut feature_affixes, mut fused) = (Vec::new(), Vec::new(), Vec::new());
        match profile.synthesis {
            Synthesis::Agglutinative => {
                feature_affixes = affixes.split_off(POS_TAGS.len());
                pos_affixes = affixes;
            }
            Synthesis::Fusional => {
                let n_cells = POS_TAGS.len() * FEATURE_VALUES.len();
                let mut cells: Vec<usize> = (0..n_cells).collect();
                cells.shuffle(rng);
                // cells[0], cells[1] share an affix; make sure they differ in POS
                if cells[0] / FEATURE_VALUES.len() == cells[1] / FEATURE_VALUES.len() {
                    let j = (2..n_cells)
                        .find(|&j| cells[j] / FEATURE_VALUES.len() != cells[0] / FEATURE_VALUES.len())
                        .unwrap();
                    cells.swap(1, j);
                }
                fused = vec![Exponent::Alternation(0); n_cells];
                let mut next = affixes.into_iter();
                let shared = next.next().unwrap();
                fused[cells[0]] = Exponent::Affix(shared.clone());
                fused[cells[1]] = Exponent::Affix(shared);
                fused[cells[2]] = Exponent::Alternation(1);
                fused[cells[3]] = Exponent::Alternation(2);
                for &c in &cells[4..] {
                    fused[c] = Exponent::Affix(next.next().unwrap());
                }
            }
            _ => {}
        }
        Morphology {
            alphabet,
            stems,
            pos_affixes,
            feature_affixes,
            fused,
            synthesis: profile.synthesis,
            position: profile.affix_position,
        }
    }

    fn alternate(&self, stem: &str, shift: usize) -> String {
        let mut chars: Vec<char> = stem.chars().collect();
        let last = chars.last_mut().unwrap();
        let i = self.alphabet.iter().position(|c| c == last).unwrap();
        *last = self.alphabet[(i + shift) % self.alphabet.len()];
        chars.into_iter().collect()
    }

    /// Surface form of `stem` carrying POS `pos` and feature value `feat`.
    pub fn compose(&self, stem: &str, pos: usize, feat: usize) -> String {
        let suffixed = match self.synthesis {
            Synthesis::Agglutinative => {
                format!("{stem}{}{}", self.pos_affixes[pos], self.feature_affixes[feat])
            }
            Synthesis::Fusional => match &self.fused[pos * FEATURE_VALUES.len() + feat] {
                Exponent::Affix(a) => format!("{stem}{a}"),
                Exponent::Alternation(shift) => self.alternate(stem, *shift),
            },
            _ => stem.to_string(),
        };
        match self.position {
            AffixPosition::Prefix => suffixed.chars().rev().collect(),
            _ => suffixed,
        }
    }

    /// POS and feature of a stem under the isolating lexicon.
    pub fn lexicon(&self, stem_index: usize) -> (usize, usize) {
        (
            stem_index % POS_TAGS.len(),
            (stem_index / POS_TAGS.len()) % FEATURE_VALUES.len(),
        )
    }

    /// Number of (POS, feature) cells that share their surface affix with a
    /// cell of a different POS.
    pub fn colliding_cells(&self) -> usize {
        let mut n = 0;
        for (i, a) in self.fused.iter().enumerate() {
            let clash = self.fused.iter().enumerate().any(|(j, b)| {
                j != i
                    && matches!(a, Exponent::Affix(_))
                    && a == b
                    && i / FEATURE_VALUES.len() != j / FEATURE_VALUES.len()
            });
            n += clash as usize;
        }
        n
    }
}

/// A generated corpus together with the morphology that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub treebank: Treebank,
    pub morphology: Morphology,
}

/// Generates `n_sentences` sentences, split 85/15 into train/dev.
pub fn generate(profile: &TypologyProfile, n_sentences: usize, seed: u64) -> Result<SyntheticCorpus> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let morph = Morphology::draw(profile, &mut rng);
    let mut sentences = Vec::with_capacity(n_sentences);
    for _ in 0..n_sentences {
        let len = rng.gen_range(profile.sent_len.clone());
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            let stem_index = rng.gen_range(0..morph.stems.len());
            let (pos, feat) = match profile.synthesis {
                Synthesis::Isolating => morph.lexicon(stem_index),
                _ => (
                    rng.gen_range(0..POS_TAGS.len()),
                    rng.gen_range(0..FEATURE_VALUES.len()),
                ),
            };
            let form = morph.compose(&morph.stems[stem_index], pos, feat);
            let mut upos = pos;
            if profile.label_noise > 0.0 && rng.gen::<f64>() < profile.label_noise {
                upos = (pos + rng.gen_range(1..POS_TAGS.len())) % POS_TAGS.len();
            }
            tokens.push(
                Token::new(form, POS_TAGS[upos]).with_feat(FEATURE_NAME, FEATURE_VALUES[feat]),
            );
        }
        sentences.push(Sentence::new(tokens));
    }
    let n_train = (n_sentences as f64 * 0.85).round() as usize;
    let dev = sentences.split_off(n_train);

    let mut tb = Treebank::new(format!(
        "synth-{}-{}",
        profile.affix_position, profile.synthesis
    ));
    tb.affixation = Some(match profile.affix_position {
        AffixPosition::Prefix => Affixation::StronglyPrefixing,
        AffixPosition::Suffix if profile.synthesis != Synthesis::Isolating => {
            Affixation::StronglySuffixing
        }
        _ => Affixation::LittleAffixation,
    });
    tb.synthesis = Some(profile.synthesis);
    tb.splits.insert("train".into(), sentences);
    tb.splits.insert("dev".into(), dev);
    Ok(SyntheticCorpus {
        treebank: tb,
        morphology: morph,
    })
}

/// Writes the corpus as CoNLL-U files plus `treebank.txt` metadata and the
/// generating `profile.txt`. Returns the metadata path.
pub fn emit_conllu(
    corpus: &Treebank,
    profile: &TypologyProfile,
    dir: impl AsRef<Path>,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let meta = corpus.save(dir)?;
    let path = dir.join("profile.txt");
    std::fs::write(&path, profile.to_kv().render()).map_err(|e| Error::io(&path, e))?;
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::to_conllu_string;

    fn all_tokens(tb: &Treebank) -> Vec<&Token> {
        tb.splits.values().flatten().flat_map(|s| &s.tokens).collect()
    }

    #[test]
    fn agglutinative_suffix_composition() {
        let c = generate(&TypologyProfile::suffix_agglutinative(), 10, 1).unwrap();
        let mut m = c.morphology.clone();
        m.pos_affixes[0] = "ka".into();
        m.feature_affixes[1] = "lu".into();
        assert_eq!(m.compose("bade", 0, 1), "badekalu");
        let mut m = m;
        m.position = AffixPosition::Prefix;
        assert_eq!(m.compose("bade", 0, 1), "ulakedab");
    }

    #[test]
    fn split_is_85_15_and_deterministic() {
        let p = TypologyProfile::suffix_agglutinative();
        let a = generate(&p, 200, 4).unwrap().treebank;
        assert_eq!(a.train().unwrap().len(), 170);
        assert_eq!(a.dev().unwrap().len(), 30);
        let b = generate(&p, 200, 4).unwrap().treebank;
        for split in ["train", "dev"] {
            assert_eq!(
                to_conllu_string(a.split(split).unwrap()),
                to_conllu_string(b.split(split).unwrap())
            );
        }
    }

    #[test]
    fn affix_oracle_is_perfect_on_agglutinative() {
        let p = TypologyProfile::suffix_agglutinative();
        let c = generate(&p, 300, 9).unwrap();
        for t in all_tokens(&c.treebank) {
            let chars: Vec<char> = t.form.chars().collect();
            let n = chars.len();
            let pos_affix: String = chars[n - 4..n - 2].iter().collect();
            let pos = c.morphology.pos_affixes.iter().position(|a| *a == pos_affix).unwrap();
            assert_eq!(POS_TAGS[pos], t.upos);
        }
    }

    #[test]
    fn prefix_and_suffix_corpora_mirror() {
        let s = generate(&TypologyProfile::suffix_agglutinative(), 100, 12).unwrap();
        let p = generate(&TypologyProfile::prefix_agglutinative(), 100, 12).unwrap();
        let (ts, tp) = (all_tokens(&s.treebank), all_tokens(&p.treebank));
        assert_eq!(ts.len(), tp.len());
        for (a, b) in ts.iter().zip(&tp) {
            assert_eq!(a.form.chars().rev().collect::<String>(), b.form);
            assert_eq!(a.upos, b.upos);
            assert_eq!(a.feats, b.feats);
        }
    }

    #[test]
    fn isolating_uses_lexicon_without_affixes() {
        let c = generate(&TypologyProfile::isolating(), 200, 3).unwrap();
        let stems: BTreeSet<&str> = c.morphology.stems.iter().map(String::as_str).collect();
        for t in all_tokens(&c.treebank) {
            assert!(stems.contains(t.form.as_str()));
            let idx = c.morphology.stems.iter().position(|s| *s == t.form).unwrap();
            assert_eq!(POS_TAGS[c.morphology.lexicon(idx).0], t.upos);
        }
    }

    #[test]
    fn fusional_has_collisions_and_alternations() {
        let p = TypologyProfile::new(AffixPosition::Suffix, Synthesis::Fusional);
        let c = generate(&p, 50, 2).unwrap();
        assert_eq!(c.morphology.colliding_cells(), 2);
        let alternations = c
            .morphology
            .fused
            .iter()
            .filter(|e| matches!(e, Exponent::Alternation(_)))
            .count();
        assert_eq!(alternations, 2);
    }

    #[test]
    fn label_noise_flips_some_labels() {
        let mut p = TypologyProfile::suffix_agglutinative();
        p.label_noise = 0.3;
        let c = generate(&p, 200, 1).unwrap();
        let mut wrong = 0;
        let mut total = 0;
        for t in all_tokens(&c.treebank) {
            let chars: Vec<char> = t.form.chars().collect();
            let n = chars.len();
            let affix: String = chars[n - 4..n - 2].iter().collect();
            let pos = c.morphology.pos_affixes.iter().position(|a| *a == affix).unwrap();
            wrong += (POS_TAGS[pos] != t.upos) as usize;
            total += 1;
        }
        let rate = wrong as f64 / total as f64;
        assert!((rate - 0.3).abs() < 0.05, "{rate}");
    }

    #[test]
    fn config_errors() {
        let mut p = TypologyProfile::suffix_agglutinative();
        p.alphabet_size = 2;
        assert!(matches!(generate(&p, 1, 0), Err(Error::Config(_))));
        let p = TypologyProfile::new(AffixPosition::None, Synthesis::Agglutinative);
        assert!(generate(&p, 1, 0).is_err());
        let p = TypologyProfile::new(AffixPosition::Suffix, Synthesis::Introflexive);
        assert!(generate(&p, 1, 0).is_err());
    }

    #[test]
    fn profile_kv_round_trip() {
        let mut p = TypologyProfile::new(AffixPosition::Prefix, Synthesis::Fusional);
        p.stem_len = 2..=5;
        p.label_noise = 0.1;
        let back = TypologyProfile::from_kv(&p.to_kv()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn emitted_corpus_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        let p = TypologyProfile::suffix_agglutinative();
        let c = generate(&p, 40, 8).unwrap();
        let meta = emit_conllu(&c.treebank, &p, dir.path()).unwrap();
        let back = Treebank::load(meta).unwrap();
        assert_eq!(back, c.treebank);
    }
}
