use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conllu::{parse_conllu, write_conllu, Sentence};
use super::normalize_sentences;
use crate::error::{Error, Result};
use crate::kv::KvFile;

/// Inflectional affixation class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Affixation {
    StronglySuffixing,
    WeaklySuffixing,
    EquallyPrefixingSuffixing,
    LittleAffixation,
    WeaklyPrefixing,
    StronglyPrefixing,
}

impl Affixation {
    /// Report order: suffixing, equal, little, prefixing.
    pub const ALL: [Affixation; 6] = [
        Affixation::StronglySuffixing,
        Affixation::WeaklySuffixing,
        Affixation::EquallyPrefixingSuffixing,
        Affixation::LittleAffixation,
        Affixation::WeaklyPrefixing,
        Affixation::StronglyPrefixing,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Affixation::StronglySuffixing => "S",
            Affixation::WeaklySuffixing => "s",
            Affixation::EquallyPrefixingSuffixing => "=",
            Affixation::LittleAffixation => "none",
            Affixation::WeaklyPrefixing => "p",
            Affixation::StronglyPrefixing => "P",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Affixation::StronglySuffixing => "S. suffix",
            Affixation::WeaklySuffixing => "W. suffix",
            Affixation::EquallyPrefixingSuffixing => "Equal p/s",
            Affixation::LittleAffixation => "Little aff.",
            Affixation::WeaklyPrefixing => "W. prefix",
            Affixation::StronglyPrefixing => "S. prefix",
        }
    }
}

impl fmt::Display for Affixation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Affixation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "S" => Affixation::StronglySuffixing,
            "s" => Affixation::WeaklySuffixing,
            "P" => Affixation::StronglyPrefixing,
            "p" => Affixation::WeaklyPrefixing,
            "=" => Affixation::EquallyPrefixingSuffixing,
            "none" | "0" | "∅" => Affixation::LittleAffixation,
            other => {
                return Err(Error::Config(format!(
                    "unknown affixation class {other:?} (expected S, s, P, p, =, none)"
                )))
            }
        })
    }
}

/// Morphological synthesis class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Synthesis {
    Introflexive,
    Fusional,
    Agglutinative,
    Isolating,
}

impl Synthesis {
    pub const ALL: [Synthesis; 4] = [
        Synthesis::Introflexive,
        Synthesis::Fusional,
        Synthesis::Agglutinative,
        Synthesis::Isolating,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Synthesis::Introflexive => "introflexive",
            Synthesis::Fusional => "fusional",
            Synthesis::Agglutinative => "agglutinative",
            Synthesis::Isolating => "isolating",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Synthesis::Introflexive => "Introflex.",
            Synthesis::Fusional => "Fusional",
            Synthesis::Agglutinative => "Agglutina.",
            Synthesis::Isolating => "Isolating",
        }
    }
}

impl fmt::Display for Synthesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Synthesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "agglutinative" | "agg" => Synthesis::Agglutinative,
            "fusional" | "fus" => Synthesis::Fusional,
            "introflexive" | "int" => Synthesis::Introflexive,
            "isolating" | "iso" => Synthesis::Isolating,
            other => {
                return Err(Error::Config(format!(
                    "unknown synthesis class {other:?} \
                     (expected agglutinative, fusional, introflexive, isolating)"
                )))
            }
        })
    }
}

/// How the train/dev splits of a treebank are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitPolicy {
    /// Use the shipped train and dev splits.
    Standard,
    /// Shuffle the treebank's single split and cut it into train/dev.
    Shuffle { train_fraction: f64 },
    /// No dev split ships; the test split doubles as dev.
    TestAsDev,
}

impl SplitPolicy {
    /// 850/150 out of 1000.
    pub const SHUFFLE_85_15: SplitPolicy = SplitPolicy::Shuffle {
        train_fraction: 0.85,
    };

    fn code(self) -> &'static str {
        match self {
            SplitPolicy::Standard => "standard",
            SplitPolicy::Shuffle { .. } => "shuffle",
            SplitPolicy::TestAsDev => "test-as-dev",
        }
    }
}

impl FromStr for SplitPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(SplitPolicy::Standard),
            "shuffle" => Ok(SplitPolicy::SHUFFLE_85_15),
            "test-as-dev" => Ok(SplitPolicy::TestAsDev),
            other => Err(Error::Config(format!(
                "unknown split policy {other:?} (expected standard, shuffle, test-as-dev)"
            ))),
        }
    }
}

/// A named corpus with train/dev/test splits and typology labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Treebank {
    pub name: String,
    pub splits: BTreeMap<String, Vec<Sentence>>,
    pub affixation: Option<Affixation>,
    pub synthesis: Option<Synthesis>,
}

const SPLIT_NAMES: [&str; 3] = ["train", "dev", "test"];

impl Treebank {
    pub fn new(name: impl Into<String>) -> Self {
        Treebank {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn split(&self, name: &str) -> Result<&[Sentence]> {
        self.splits
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Data(format!("treebank {} has no {name} split", self.name)))
    }

    pub fn train(&self) -> Result<&[Sentence]> {
        self.split("train")
    }

    pub fn dev(&self) -> Result<&[Sentence]> {
        self.split("dev")
    }

    /// Loads a treebank from its metadata file.
    ///
    /// Keys: `name`, `affixation`, `synthesis`, `train`, `dev`, `test`
    /// (paths relative to the metadata file), `split_policy`
    /// (`standard`, `shuffle`, `test-as-dev`) and `split_seed`. Token forms
    /// are normalized on load and the split policy is applied.
    pub fn load(meta_path: impl AsRef<Path>) -> Result<Self> {
        let meta_path = meta_path.as_ref();
        let kv = KvFile::load(meta_path)?;
        kv.check_known(&[
            "name",
            "affixation",
            "synthesis",
            "train",
            "dev",
            "test",
            "split_policy",
            "split_seed",
        ])?;
        let base = meta_path.parent().unwrap_or(Path::new("."));
        let name = kv
            .get("name")
            .map(String::from)
            .or_else(|| {
                meta_path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
            })
            .unwrap_or_default();
        let mut tb = Treebank::new(name);
        tb.affixation = kv.parsed("affixation")?;
        tb.synthesis = kv.parsed("synthesis")?;
        for split in SPLIT_NAMES {
            if let Some(rel) = kv.get(split) {
                let path = base.join(rel);
                let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
                let mut sentences = parse_conllu(BufReader::new(file)).map_err(|e| match e {
                    Error::Parse { line, message } => Error::Parse {
                        line,
                        message: format!("{}: {message}", path.display()),
                    },
                    other => other,
                })?;
                normalize_sentences(&mut sentences);
                tb.splits.insert(split.to_string(), sentences);
            }
        }
        let policy = kv.parsed::<SplitPolicy>("split_policy")?.unwrap_or(SplitPolicy::Standard);
        let seed = kv.parsed::<u64>("split_seed")?.unwrap_or(0);
        make_splits(tb, policy, seed)
    }

    /// Writes each split as `<dir>/<name>-<split>.conllu` plus a metadata
    /// file `<dir>/treebank.txt`, returning the metadata path.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut kv = KvFile::new();
        kv.push("name", &self.name);
        if let Some(a) = self.affixation {
            kv.push("affixation", a);
        }
        if let Some(s) = self.synthesis {
            kv.push("synthesis", s);
        }
        for (split, sentences) in &self.splits {
            let file_name = format!("{}-{split}.conllu", self.name);
            let path = dir.join(&file_name);
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut writer = std::io::BufWriter::new(file);
            write_conllu(sentences, &mut writer).map_err(|e| Error::io(&path, e))?;
            std::io::Write::flush(&mut writer).map_err(|e| Error::io(&path, e))?;
            kv.push(split.as_str(), file_name);
        }
        kv.push("split_policy", SplitPolicy::Standard.code());
        let meta = dir.join("treebank.txt");
        std::fs::write(&meta, kv.render()).map_err(|e| Error::io(&meta, e))?;
        Ok(meta)
    }
}

/// Applies a split policy.
pub fn make_splits(mut tb: Treebank, policy: SplitPolicy, seed: u64) -> Result<Treebank> {
    match policy {
        SplitPolicy::Standard => {
            tb.train()?;
            tb.dev()?;
        }
        SplitPolicy::TestAsDev => {
            tb.train()?;
            let test = tb.split("test")?.to_vec();
            tb.splits.insert("dev".into(), test);
        }
        SplitPolicy::Shuffle { train_fraction } => {
            if !(0.0..=1.0).contains(&train_fraction) {
                return Err(Error::Config(format!(
                    "train fraction must lie in [0, 1], got {train_fraction}"
                )));
            }
            if tb.splits.len() != 1 {
                return Err(Error::Data(format!(
                    "shuffle policy needs exactly one split in {}, found {}",
                    tb.name,
                    tb.splits.len()
                )));
            }
            let (_, mut pool) = tb.splits.pop_first().unwrap();
            pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let n_train = (pool.len() as f64 * train_fraction).round() as usize;
            let dev = pool.split_off(n_train);
            tb.splits.insert("train".into(), pool);
            tb.splits.insert("dev".into(), dev);
        }
    }
    Ok(tb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;

    fn numbered(n: usize) -> Vec<Sentence> {
        (0..n)
            .map(|i| Sentence::new(vec![Token::new(format!("w{i}"), "X")]))
            .collect()
    }

    #[test]
    fn shuffle_policy_850_150() {
        let mut tb = Treebank::new("th");
        tb.splits.insert("test".into(), numbered(1000));
        let a = make_splits(tb.clone(), SplitPolicy::SHUFFLE_85_15, 5).unwrap();
        assert_eq!(a.train().unwrap().len(), 850);
        assert_eq!(a.dev().unwrap().len(), 150);
        assert!(a.split("test").is_err());
        let b = make_splits(tb.clone(), SplitPolicy::SHUFFLE_85_15, 5).unwrap();
        assert_eq!(a, b);
        let c = make_splits(tb, SplitPolicy::SHUFFLE_85_15, 6).unwrap();
        assert_ne!(a.train().unwrap(), c.train().unwrap());
    }

    #[test]
    fn test_as_dev_policy() {
        let mut tb = Treebank::new("ga");
        tb.splits.insert("train".into(), numbered(5));
        tb.splits.insert("test".into(), numbered(2));
        let out = make_splits(tb, SplitPolicy::TestAsDev, 0).unwrap();
        assert_eq!(out.dev().unwrap(), out.split("test").unwrap());
    }

    #[test]
    fn missing_splits_are_data_errors() {
        let mut tb = Treebank::new("x");
        tb.splits.insert("train".into(), numbered(5));
        assert!(matches!(
            make_splits(tb.clone(), SplitPolicy::Standard, 0),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            make_splits(tb.clone(), SplitPolicy::TestAsDev, 0),
            Err(Error::Data(_))
        ));
        tb.splits.insert("dev".into(), numbered(1));
        assert!(matches!(
            make_splits(tb, SplitPolicy::SHUFFLE_85_15, 0),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn class_codes_round_trip() {
        for a in Affixation::ALL {
            assert_eq!(a.code().parse::<Affixation>().unwrap(), a);
        }
        for s in Synthesis::ALL {
            assert_eq!(s.code().parse::<Synthesis>().unwrap(), s);
        }
        assert!("suffix".parse::<Affixation>().is_err());
    }

    #[test]
    fn save_and_load_with_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let mut tb = Treebank::new("toy");
        tb.affixation = Some(Affixation::WeaklyPrefixing);
        tb.synthesis = Some(Synthesis::Agglutinative);
        tb.splits.insert("train".into(), numbered(4));
        tb.splits.insert("dev".into(), numbered(2));
        let meta = tb.save(dir.path()).unwrap();
        let back = Treebank::load(&meta).unwrap();
        assert_eq!(back, tb);
    }

    #[test]
    fn load_normalizes_and_applies_policy() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::new();
        for i in 0..20 {
            text.push_str(&format!(
                "1\thttp://x/{i}\t_\tX\t_\t_\t0\troot\t_\t_\n2\ta@b\t_\tX\t_\t_\t1\tdep\t_\t_\n\n"
            ));
        }
        std::fs::write(dir.path().join("all.conllu"), text).unwrap();
        std::fs::write(
            dir.path().join("meta.txt"),
            "name = th\naffixation = none\nsynthesis = fusional\ntest = all.conllu\n\
             split_policy = shuffle\nsplit_seed = 3\n",
        )
        .unwrap();
        let tb = Treebank::load(dir.path().join("meta.txt")).unwrap();
        assert_eq!(tb.train().unwrap().len(), 17);
        assert_eq!(tb.dev().unwrap().len(), 3);
        assert_eq!(tb.train().unwrap()[0].forms(), vec!["URL", "EMAIL"]);
        assert_eq!(tb.affixation, Some(Affixation::LittleAffixation));
    }

    #[test]
    fn load_reports_missing_split_file_path() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("m.txt"), "train = nope.conllu\n").unwrap();
        let err = Treebank::load(dir.path().join("m.txt")).unwrap_err();
        assert!(err.to_string().contains("nope.conllu"));
    }
}
