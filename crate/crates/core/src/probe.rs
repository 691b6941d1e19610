//! Per-unit probing of the character layer: word selection, base measures,
//! binned mutual information with POS (PDI), mass and head forwardness.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, Treebank};
use crate::error::{Error, Result};
use crate::kv::KvFile;
use crate::model::{ActivationTrace, Checkpoint, Direction};

pub const PROBE_FORMAT_VERSION: u32 = 1;

/// Per-word summary of a unit's activation trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMeasure {
    /// Mean absolute activation, range `[0, 1)`.
    AvgAbs,
    /// Largest absolute change between adjacent characters, range `[0, 2)`.
    Mad,
}

impl BaseMeasure {
    pub const ALL: [BaseMeasure; 2] = [BaseMeasure::AvgAbs, BaseMeasure::Mad];

    /// Upper edge of the nominal range; the lower edge is 0.
    pub fn range(self) -> f64 {
        match self {
            BaseMeasure::AvgAbs => 1.0,
            BaseMeasure::Mad => 2.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BaseMeasure::AvgAbs => "avgabs",
            BaseMeasure::Mad => "mad",
        }
    }

    /// Applies the measure to one unit's per-character values.
    pub fn apply(self, values: &[f64]) -> Result<f64> {
        if values.is_empty() {
            return Err(Error::Contract("base measure of an empty trace".into()));
        }
        Ok(match self {
            BaseMeasure::AvgAbs => values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64,
            BaseMeasure::Mad => values
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .fold(0.0, f64::max),
        })
    }
}

impl FromStr for BaseMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avgabs" | "avg_abs" => Ok(BaseMeasure::AvgAbs),
            "mad" => Ok(BaseMeasure::Mad),
            other => Err(Error::Config(format!(
                "unknown base measure {other:?}, expected avgabs or mad"
            ))),
        }
    }
}

/// `(1/|w|) Σ_c |h_i^c|`
pub fn base_avg_abs(trace: &ActivationTrace, unit: usize) -> Result<f64> {
    BaseMeasure::AvgAbs.apply(trace.unit(unit)?)
}

/// `max_c |h_i^{c+1} − h_i^c|`, 0 for one-character words.
pub fn base_mad(trace: &ActivationTrace, unit: usize) -> Result<f64> {
    BaseMeasure::Mad.apply(trace.unit(unit)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub freq_threshold: usize,
    pub unambiguity_threshold: f64,
    pub excluded_tags: BTreeSet<String>,
    pub bins: usize,
    pub measure: BaseMeasure,
    /// Weight each word type by its training frequency instead of counting
    /// it once.
    pub token_weighted: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            freq_threshold: 8,
            unambiguity_threshold: 0.6,
            excluded_tags: ["INTJ", "NUM", "PROPN", "PUNCT", "SYM", "X"]
                .into_iter()
                .map(String::from)
                .collect(),
            bins: 16,
            measure: BaseMeasure::AvgAbs,
            token_weighted: false,
        }
    }
}

impl ProbeConfig {
    pub const KEYS: [&'static str; 6] = [
        "freq_threshold",
        "unambiguity_threshold",
        "excluded_tags",
        "bins",
        "measure",
        "token_weighted",
    ];

    pub fn with_measure(mut self, measure: BaseMeasure) -> Self {
        self.measure = measure;
        self
    }

    pub fn bin_width(&self) -> f64 {
        self.measure.range() / self.bins as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::Config(format!("bins must be at least 2, got {}", self.bins)));
        }
        if self.freq_threshold == 0 {
            return Err(Error::Config("freq_threshold must be positive".into()));
        }
        if !(self.unambiguity_threshold > 0.0 && self.unambiguity_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "unambiguity_threshold must lie in (0, 1], got {}",
                self.unambiguity_threshold
            )));
        }
        Ok(())
    }

    /// Overrides fields from a key-value file; unknown keys are errors.
    pub fn apply_kv(&mut self, kv: &KvFile) -> Result<()> {
        if let Some(v) = kv.parsed("freq_threshold")? {
            self.freq_threshold = v;
        }
        if let Some(v) = kv.parsed("unambiguity_threshold")? {
            self.unambiguity_threshold = v;
        }
        if let Some(v) = kv.get("excluded_tags") {
            self.excluded_tags = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
        }
        if let Some(v) = kv.parsed("bins")? {
            self.bins = v;
        }
        if let Some(v) = kv.get("measure") {
            self.measure = v.parse()?;
        }
        if let Some(v) = kv.parsed("token_weighted")? {
            self.token_weighted = v;
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::new();
        kv.push("freq_threshold", self.freq_threshold);
        kv.push("unambiguity_threshold", self.unambiguity_threshold);
        kv.push(
            "excluded_tags",
            self.excluded_tags.iter().cloned().collect::<Vec<_>>().join(","),
        );
        kv.push("bins", self.bins);
        kv.push("measure", self.measure.as_str());
        kv.push("token_weighted", self.token_weighted);
        kv
    }
}

/// A probed word type with its majority POS.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedWord {
    pub form: String,
    pub pos: String,
    /// Training occurrences of the type.
    pub count: usize,
}

/// Frequent, POS-unambiguous word types of a training split, sorted by form.
/// Ties for the majority tag go to the alphabetically first tag.
pub fn select_words(train: &[Sentence], config: &ProbeConfig) -> Result<Vec<SelectedWord>> {
    config.validate()?;
    let mut counts: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for s in train {
        for t in &s.tokens {
            *counts.entry(&t.form).or_default().entry(&t.upos).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for (form, tags) in counts {
        let total: usize = tags.values().sum();
        if total < config.freq_threshold {
            continue;
        }
        let (pos, top) = tags
            .iter()
            .fold(("", 0), |best, (&t, &c)| if c > best.1 { (t, c) } else { best });
        if (top as f64) < config.unambiguity_threshold * total as f64 {
            continue;
        }
        if config.excluded_tags.contains(pos) {
            continue;
        }
        out.push(SelectedWord {
            form: form.to_string(),
            pos: pos.to_string(),
            count: total,
        });
    }
    if out.is_empty() {
        return Err(Error::Analysis(format!(
            "no word types pass selection (frequency >= {}, majority share >= {}); \
             lower the thresholds or use a larger training split",
            config.freq_threshold, config.unambiguity_threshold
        )));
    }
    Ok(out)
}

/// Binned joint counts of POS tag × base-measure value.
#[derive(Debug, Clone, PartialEq)]
pub struct JointHistogram {
    tags: usize,
    bins: usize,
    /// row-major `tags × bins`
    counts: Vec<f64>,
}

impl JointHistogram {
    pub fn new(tags: usize, bins: usize) -> Self {
        JointHistogram {
            tags,
            bins,
            counts: vec![0.0; tags * bins],
        }
    }

    /// Builds a histogram from explicit counts.
    pub fn from_counts(tags: usize, bins: usize, counts: Vec<f64>) -> Result<Self> {
        if counts.len() != tags * bins {
            return Err(Error::Dimension {
                op: "histogram",
                left: vec![tags, bins],
                right: vec![counts.len()],
            });
        }
        if counts.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::Contract("histogram counts must be nonnegative".into()));
        }
        Ok(JointHistogram { tags, bins, counts })
    }

    pub fn num_tags(&self) -> usize {
        self.tags
    }

    pub fn num_bins(&self) -> usize {
        self.bins
    }

    pub fn count(&self, tag: usize, bin: usize) -> f64 {
        self.counts[tag * self.bins + bin]
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Bin of `value` over `[0, range)` split into `bins` equal bins; values
    /// at or above the top edge land in the last bin.
    pub fn bin_index(value: f64, range: f64, bins: usize) -> Result<usize> {
        if !(value >= 0.0) {
            return Err(Error::Contract(format!(
                "base-measure value must be nonnegative, got {value}"
            )));
        }
        let b = (value * bins as f64 / range).floor();
        Ok(if b >= bins as f64 { bins - 1 } else { b as usize })
    }

    pub fn add(&mut self, tag: usize, value: f64, range: f64, weight: f64) -> Result<()> {
        if tag >= self.tags {
            return Err(Error::Index {
                what: "tag",
                index: tag,
                size: self.tags,
            });
        }
        let b = Self::bin_index(value, range, self.bins)?;
        self.counts[tag * self.bins + b] += weight;
        Ok(())
    }

    /// Normalised joint `P(t, b)`.
    pub fn joint(&self) -> Result<Vec<f64>> {
        let n = self.total();
        if !(n > 0.0) {
            return Err(Error::Analysis("empty histogram".into()));
        }
        Ok(self.counts.iter().map(|c| c / n).collect())
    }

    /// Marginals `(P(t), P(b))`.
    pub fn marginals(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = self.joint()?;
        let mut pt = vec![0.0; self.tags];
        let mut pb = vec![0.0; self.bins];
        for t in 0..self.tags {
            for b in 0..self.bins {
                pt[t] += p[t * self.bins + b];
                pb[b] += p[t * self.bins + b];
            }
        }
        Ok((pt, pb))
    }

    /// Mutual information between tag and bin in nats; empty cells add 0.
    pub fn pdi(&self) -> Result<f64> {
        let p = self.joint()?;
        let (pt, pb) = self.marginals()?;
        let mut mi = 0.0;
        for t in 0..self.tags {
            for b in 0..self.bins {
                let ptb = p[t * self.bins + b];
                if ptb > 0.0 {
                    mi += ptb * (ptb.ln() - pt[t].ln() - pb[b].ln());
                }
            }
        }
        // Rounding can leave a tiny negative value for independent variables.
        Ok(mi.max(0.0))
    }
}

/// Bins unit-weight `(tag, value)` samples of one unit.
pub fn bin_and_accumulate(
    samples: impl IntoIterator<Item = (usize, f64)>,
    num_tags: usize,
    config: &ProbeConfig,
) -> Result<JointHistogram> {
    let mut h = JointHistogram::new(num_tags, config.bins);
    for (tag, value) in samples {
        h.add(tag, value, config.measure.range(), 1.0)?;
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitScore {
    pub unit: usize,
    pub direction: Direction,
    pub pdi: f64,
}

/// Per-unit PDI scores sorted descending, with the summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdiReport {
    pub format_version: u32,
    pub config: ProbeConfig,
    /// Free-form provenance such as treebank name and training seed.
    pub meta: BTreeMap<String, String>,
    pub tags: Vec<String>,
    pub num_words: usize,
    pub scores: Vec<UnitScore>,
    pub mass: f64,
    pub median_index: usize,
    /// Unit ids in the head, in rank order.
    pub head: Vec<usize>,
    pub head_forwardness: f64,
}

/// Summary fields of a report, the JSON companion to the TSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdiSummary {
    pub format_version: u32,
    pub meta: BTreeMap<String, String>,
    pub config: ProbeConfig,
    pub num_units: usize,
    pub num_words: usize,
    pub tags: Vec<String>,
    pub mass: f64,
    pub median_index: usize,
    pub head: Vec<usize>,
    pub head_forwardness: f64,
}

impl PdiReport {
    /// Sorts the scores and derives mass, median index, head and head
    /// forwardness. When the top unit alone holds more than half the mass
    /// the head is that unit.
    pub fn from_scores(mut scores: Vec<UnitScore>, config: ProbeConfig) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Analysis("no units to score".into()));
        }
        if let Some(s) = scores.iter().find(|s| !(s.pdi >= 0.0)) {
            return Err(Error::Contract(format!("unit {} has PDI {}", s.unit, s.pdi)));
        }
        scores.sort_by(|a, b| b.pdi.total_cmp(&a.pdi).then(a.unit.cmp(&b.unit)));
        let mass: f64 = scores.iter().map(|s| s.pdi).sum();
        let half = mass / 2.0;
        let tol = 1e-12 * mass;
        let mut cum = 0.0;
        let mut median_index = 0;
        for (k, s) in scores.iter().enumerate() {
            cum += s.pdi;
            if cum <= half + tol {
                median_index = k + 1;
            } else {
                break;
            }
        }
        let head_len = median_index.max(1);
        let head: Vec<usize> = scores[..head_len].iter().map(|s| s.unit).collect();
        let forward = scores[..head_len]
            .iter()
            .filter(|s| s.direction.is_forward())
            .count();
        Ok(PdiReport {
            format_version: PROBE_FORMAT_VERSION,
            config,
            meta: BTreeMap::new(),
            tags: Vec::new(),
            num_words: 0,
            scores,
            mass,
            median_index,
            head,
            head_forwardness: forward as f64 / head_len as f64,
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# pdi-report v{}\nrank\tunit\tdirection\tpdi\n", self.format_version);
        for (r, s) in self.scores.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", r + 1, s.unit, s.direction.as_str(), s.pdi);
        }
        out
    }

    pub fn summary(&self) -> PdiSummary {
        PdiSummary {
            format_version: self.format_version,
            meta: self.meta.clone(),
            config: self.config.clone(),
            num_units: self.scores.len(),
            num_words: self.num_words,
            tags: self.tags.clone(),
            mass: self.mass,
            median_index: self.median_index,
            head: self.head.clone(),
            head_forwardness: self.head_forwardness,
        }
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("summary is serialisable")
    }
}

/// A word's activation trace with its tag index and histogram weight.
#[derive(Debug, Clone)]
pub struct ProbeSample {
    pub trace: ActivationTrace,
    pub tag: usize,
    pub weight: f64,
}

/// Scores every unit over precomputed traces. All traces must share the
/// same unit layout.
pub fn compute_report_from_traces(
    samples: &[ProbeSample],
    tags: Vec<String>,
    config: &ProbeConfig,
) -> Result<PdiReport> {
    config.validate()?;
    let first = samples
        .first()
        .ok_or_else(|| Error::Analysis("no words to probe".into()))?;
    let directions = first.trace.directions.clone();
    if let Some(bad) = samples.iter().find(|s| s.trace.directions != directions) {
        return Err(Error::Contract(format!(
            "trace of {:?} has a different unit layout",
            bad.trace.word.iter().collect::<String>()
        )));
    }
    let range = config.measure.range();
    let scores = (0..directions.len())
        .into_par_iter()
        .map(|unit| {
            let mut h = JointHistogram::new(tags.len(), config.bins);
            for s in samples {
                let v = config.measure.apply(s.trace.unit(unit)?)?;
                h.add(s.tag, v, range, s.weight)?;
            }
            Ok(UnitScore {
                unit,
                direction: directions[unit],
                pdi: h.pdi()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = PdiReport::from_scores(scores, config.clone())?;
    report.tags = tags;
    report.num_words = samples.len();
    Ok(report)
}

/// Traces every selected training word through the checkpoint's character
/// layer and scores each unit.
pub fn compute_report(checkpoint: &Checkpoint, treebank: &Treebank, config: &ProbeConfig) -> Result<PdiReport> {
    let words = select_words(treebank.train()?, config)?;
    let tagger = &checkpoint.tagger;
    let charset = &tagger.config().charset;
    let unknown: BTreeSet<char> = words
        .iter()
        .flat_map(|w| w.form.chars())
        .filter(|&c| !charset.contains(c))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::Analysis(format!(
            "treebank {} has characters unknown to the checkpoint: {:?}",
            treebank.name,
            unknown.into_iter().collect::<String>()
        )));
    }
    let tags: Vec<String> = words
        .iter()
        .map(|w| w.pos.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let samples = words
        .par_iter()
        .map(|w| {
            let (_, trace) = tagger.encode_word(&w.form, true)?;
            Ok(ProbeSample {
                trace: trace.expect("trace requested"),
                tag: tags.binary_search(&w.pos).expect("tag collected"),
                weight: if config.token_weighted { w.count as f64 } else { 1.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = compute_report_from_traces(&samples, tags, config)?;
    report.meta.insert("treebank".into(), treebank.name.clone());
    for key in ["seed", "epoch", "treebank"] {
        if let Some(v) = checkpoint.meta.get(key) {
            report.meta.insert(format!("checkpoint_{key}"), v.clone());
        }
    }
    report.meta.insert("measure".into(), config.measure.as_str().into());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use proptest::prelude::*;

    fn trace(values: &[f64]) -> ActivationTrace {
        let word: String = std::iter::repeat('a').take(values.len()).collect();
        ActivationTrace::new(&word, vec![values.to_vec()], vec![Direction::Forward]).unwrap()
    }

    fn score(unit: usize, f: bool, pdi: f64) -> UnitScore {
        UnitScore {
            unit,
            direction: if f { Direction::Forward } else { Direction::Backward },
            pdi,
        }
    }

    #[test]
    fn base_measures() {
        assert_eq!(base_avg_abs(&trace(&[0.5, -0.5, 0.5, -0.5]), 0).unwrap(), 0.5);
        assert_eq!(base_avg_abs(&trace(&[0.0, 0.0]), 0).unwrap(), 0.0);
        assert_eq!(base_mad(&trace(&[0.0, 1.0, 0.2]), 0).unwrap(), 1.0);
        assert_eq!(base_mad(&trace(&[0.3, 0.3, 0.3]), 0).unwrap(), 0.0);
        assert_eq!(base_mad(&trace(&[0.7]), 0).unwrap(), 0.0);
        assert!(matches!(base_mad(&trace(&[0.7]), 1), Err(Error::Index { .. })));
    }

    #[test]
    fn binning() {
        assert_eq!(JointHistogram::bin_index(0.42, 1.0, 16).unwrap(), 6);
        assert_eq!(JointHistogram::bin_index(1.999, 2.0, 16).unwrap(), 15);
        assert_eq!(JointHistogram::bin_index(2.0, 2.0, 16).unwrap(), 15);
        assert_eq!(JointHistogram::bin_index(0.0, 2.0, 16).unwrap(), 0);
        assert!(matches!(JointHistogram::bin_index(-0.1, 1.0, 16), Err(Error::Contract(_))));
        let config = ProbeConfig::default();
        let h = bin_and_accumulate([(1, 0.1), (1, 0.11)], 2, &config).unwrap();
        assert_eq!(h.count(1, 1), 2.0);
        assert_eq!(h.total(), 2.0);
        assert_eq!(ProbeConfig::default().with_measure(BaseMeasure::Mad).bin_width(), 0.125);
        assert_eq!(ProbeConfig::default().bin_width(), 0.0625);
    }

    #[test]
    fn pdi_examples() {
        let h = JointHistogram::from_counts(2, 2, vec![1.0; 4]).unwrap();
        assert_eq!(h.pdi().unwrap(), 0.0);
        let h = JointHistogram::from_counts(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((h.pdi().unwrap() - 2f64.ln()).abs() < 1e-15);
        let h = JointHistogram::new(3, 4);
        assert!(matches!(h.pdi(), Err(Error::Analysis(_))));
        assert!(JointHistogram::from_counts(1, 2, vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn report_equal_scores() {
        let p = 0.3;
        let r = PdiReport::from_scores(
            vec![score(0, true, p), score(1, false, p), score(2, true, p), score(3, false, p)],
            ProbeConfig::default(),
        )
        .unwrap();
        assert_eq!(r.mass, 4.0 * p);
        assert_eq!(r.median_index, 2);
        assert_eq!(r.head, vec![0, 1]);
        assert_eq!(r.head_forwardness, 0.5);
    }

    #[test]
    fn report_fallback_head() {
        let r = PdiReport::from_scores(
            vec![score(0, false, 0.05), score(1, true, 0.9), score(2, false, 0.05)],
            ProbeConfig::default(),
        )
        .unwrap();
        assert_eq!(r.median_index, 0);
        assert_eq!(r.head, vec![1]);
        assert_eq!(r.head_forwardness, 1.0);
        assert_eq!(r.scores.iter().map(|s| s.unit).collect::<Vec<_>>(), vec![1, 0, 2]);
    }

    #[test]
    fn report_zero_mass_head_is_everything() {
        let r = PdiReport::from_scores(vec![score(0, true, 0.0), score(1, false, 0.0)], ProbeConfig::default())
            .unwrap();
        assert_eq!(r.median_index, 2);
        assert_eq!(r.head_forwardness, 0.5);
        assert!(r.to_tsv().starts_with("# pdi-report v1\nrank\tunit\tdirection\tpdi\n1\t0\tforward\t0\n"));
    }

    fn sentence(pairs: &[(&str, &str)]) -> Sentence {
        Sentence {
            tokens: pairs.iter().map(|(f, p)| Token::new(*f, *p)).collect(),
        }
    }

    #[test]
    fn word_selection() {
        let mut train = Vec::new();
        for i in 0..10 {
            train.push(sentence(&[
                ("dog", if i == 0 { "VERB" } else { "NOUN" }),
                ("Paris", "PROPN"),
                ("Paris", "PROPN"),
            ]));
        }
        for _ in 0..7 {
            train.push(sentence(&[("rare", "ADJ")]));
        }
        for i in 0..10 {
            train.push(sentence(&[("run", if i < 5 { "VERB" } else { "NOUN" })]));
        }
        let words = select_words(&train, &ProbeConfig::default()).unwrap();
        assert_eq!(
            words,
            vec![SelectedWord {
                form: "dog".into(),
                pos: "NOUN".into(),
                count: 10
            }]
        );
        let strict = ProbeConfig {
            unambiguity_threshold: 0.95,
            ..ProbeConfig::default()
        };
        assert!(matches!(select_words(&train, &strict), Err(Error::Analysis(_))));
    }

    #[test]
    fn config_kv_round_trip() {
        let config = ProbeConfig {
            bins: 8,
            measure: BaseMeasure::Mad,
            token_weighted: true,
            ..ProbeConfig::default()
        };
        let kv = KvFile::parse(&config.to_kv().render()).unwrap();
        let mut back = ProbeConfig::default();
        back.apply_kv(&kv).unwrap();
        assert_eq!(back, config);
        assert!(ProbeConfig { bins: 1, ..ProbeConfig::default() }.validate().is_err());
    }

    #[test]
    fn planted_unit_ranks_first() {
        let tags = vec!["NOUN".to_string(), "VERB".to_string()];
        let mut samples = Vec::new();
        for i in 0..40usize {
            let tag = i % 2;
            let noise = ((i * 7919) % 13) as f64 / 13.0;
            let planted = if tag == 0 { 0.1 } else { 0.8 };
            let trace = ActivationTrace::new(
                "ab",
                vec![vec![noise * 0.9, noise * 0.5], vec![planted, planted]],
                vec![Direction::Forward, Direction::Backward],
            )
            .unwrap();
            samples.push(ProbeSample { trace, tag, weight: 1.0 });
        }
        let r = compute_report_from_traces(&samples, tags, &ProbeConfig::default()).unwrap();
        assert_eq!(r.scores[0].unit, 1);
        assert!((r.scores[0].pdi - 2f64.ln()).abs() < 1e-12);
    }

    fn histogram() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
        (1usize..6, 2usize..10).prop_flat_map(|(t, b)| {
            (
                Just(t),
                Just(b),
                prop::collection::vec(0u32..20, t * b)
                    .prop_filter("nonempty", |v| v.iter().any(|&c| c > 0))
                    .prop_map(|v| v.into_iter().map(f64::from).collect()),
            )
        })
    }

    proptest! {
        #[test]
        fn pdi_bounds((t, b, counts) in histogram()) {
            let h = JointHistogram::from_counts(t, b, counts).unwrap();
            let mi = h.pdi().unwrap();
            prop_assert!(mi >= 0.0);
            prop_assert!(mi <= (t as f64).ln().min((b as f64).ln()) + 1e-12);
        }

        #[test]
        fn pdi_permutation_invariant((t, b, counts) in histogram(), rot in 0usize..10) {
            let h = JointHistogram::from_counts(t, b, counts.clone()).unwrap();
            let mut tag_perm = counts.clone();
            tag_perm.rotate_left((rot % t) * b);
            let mut bin_perm = vec![0.0; t * b];
            for i in 0..t {
                for j in 0..b {
                    bin_perm[i * b + (j + rot) % b] = counts[i * b + j];
                }
            }
            let a = h.pdi().unwrap();
            let tp = JointHistogram::from_counts(t, b, tag_perm).unwrap().pdi().unwrap();
            let bp = JointHistogram::from_counts(t, b, bin_perm).unwrap().pdi().unwrap();
            prop_assert!((a - tp).abs() < 1e-12);
            prop_assert!((a - bp).abs() < 1e-12);
        }

        #[test]
        fn collapsing_bins_never_increases_pdi((t, b, counts) in histogram(), j in 0usize..9) {
            let j = j % (b - 1);
            let mut merged = Vec::with_capacity(t * (b - 1));
            for i in 0..t {
                for k in 0..b {
                    if k == j + 1 {
                        continue;
                    }
                    let mut c = counts[i * b + k];
                    if k == j {
                        c += counts[i * b + j + 1];
                    }
                    merged.push(c);
                }
            }
            let full = JointHistogram::from_counts(t, b, counts).unwrap().pdi().unwrap();
            let coarse = JointHistogram::from_counts(t, b - 1, merged).unwrap().pdi().unwrap();
            prop_assert!(coarse <= full + 1e-12);
        }

        #[test]
        fn report_invariants(pdis in prop::collection::vec((0.0f64..2.0, any::<bool>()), 1..40)) {
            let scores: Vec<UnitScore> =
                pdis.iter().enumerate().map(|(i, &(p, f))| score(i, f, p)).collect();
            let sum: f64 = pdis.iter().map(|p| p.0).sum();
            let r = PdiReport::from_scores(scores, ProbeConfig::default()).unwrap();
            prop_assert!((r.mass - sum).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&r.head_forwardness));
            prop_assert!(r.median_index <= pdis.len());
            prop_assert!(r.scores.windows(2).all(|w| w[0].pdi >= w[1].pdi));
        }
    }
}
