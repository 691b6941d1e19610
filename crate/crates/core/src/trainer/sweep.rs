//! Directionality sweep: train every (treebank × unit split × seed) job and
//! aggregate dev POS accuracy by typology category.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean, paired_t_test};
use super::{train, TrainConfig};
use crate::corpus::{Affixation, Synthesis, Treebank};
use crate::error::{Error, Result};
use crate::kv::KvFile;
use crate::model::ArchConfig;

pub const SWEEP_FORMAT_VERSION: u32 = 1;

/// Which jobs to run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// `(fwd_units, bwd_units)` per column.
    pub splits: Vec<(usize, usize)>,
    pub seeds: Vec<u64>,
    /// Treebank metadata files; resolved by the caller.
    pub treebanks: Vec<PathBuf>,
    /// Base architecture; the unit split is overridden per job.
    pub arch: ArchConfig,
    /// Base optimiser settings; the seed is overridden per job.
    pub train: TrainConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            splits: vec![(128, 0), (96, 32), (64, 64), (32, 96), (0, 128)],
            seeds: vec![1, 2, 3],
            treebanks: Vec::new(),
            arch: ArchConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

fn parse_split(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("bad unit split {s:?}, expected fwd/bwd"));
    let (f, b) = s.trim().split_once('/').ok_or_else(bad)?;
    Ok((
        f.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn split_label((f, b): (usize, usize)) -> String {
    format!("{f}/{b}")
}

impl SweepSpec {
    /// Sweep-specific keys; architecture and optimiser keys are accepted
    /// too, except the per-job `fwd_units`, `bwd_units` and `seed`.
    pub const KEYS: [&'static str; 3] = ["treebank", "splits", "seeds"];

    /// Reads a spec file. `treebank` may repeat; its paths are taken relative
    /// to `base_dir`. `splits` is a comma-separated list of `fwd/bwd` pairs
    /// and `seeds` a comma-separated list of integers.
    pub fn from_kv(kv: &KvFile, base_dir: &Path) -> Result<Self> {
        let known: Vec<&str> = Self::KEYS
            .iter()
            .chain(&ArchConfig::KEYS)
            .chain(&TrainConfig::KEYS)
            .copied()
            .filter(|k| !matches!(*k, "fwd_units" | "bwd_units" | "seed"))
            .collect();
        kv.check_known(&known)?;
        let mut spec = SweepSpec::default();
        spec.treebanks = kv.get_all("treebank").into_iter().map(|p| base_dir.join(p)).collect();
        if let Some(s) = kv.get("splits") {
            spec.splits = s.split(',').map(parse_split).collect::<Result<_>>()?;
        }
        if let Some(s) = kv.get("seeds") {
            spec.seeds = s
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad seed {v:?}")))
                })
                .collect::<Result<_>>()?;
        }
        spec.arch.apply_kv(kv)?;
        spec.train.apply_kv(kv)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::new();
        for t in &self.treebanks {
            kv.push("treebank", t.display());
        }
        kv.push(
            "splits",
            self.splits.iter().map(|&s| split_label(s)).collect::<Vec<_>>().join(", "),
        );
        kv.push(
            "seeds",
            self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(", "),
        );
        let mut rest = KvFile::new();
        self.arch.write_kv(&mut rest);
        self.train.write_kv(&mut rest);
        for (k, v) in rest.entries() {
            if !matches!(k.as_str(), "fwd_units" | "bwd_units" | "seed") {
                kv.push(k.clone(), v);
            }
        }
        kv
    }

    pub fn validate(&self) -> Result<()> {
        if self.splits.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("sweep needs at least one split and one seed".into()));
        }
        if !self.splits.iter().any(|(f, b)| f == b) {
            return Err(Error::Config(
                "sweep needs a balanced split (fwd == bwd) as the reference column".into(),
            ));
        }
        self.train.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum JobStatus {
    Ok { dev_pos_accuracy: f64, best_epoch: usize },
    Failed { error: String },
}

/// Outcome of one training job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResult {
    pub treebank: String,
    pub affixation: Option<Affixation>,
    pub synthesis: Option<Synthesis>,
    pub fwd_units: usize,
    pub bwd_units: usize,
    pub seed: u64,
    pub status: JobStatus,
}

impl JobResult {
    fn split(&self) -> (usize, usize) {
        (self.fwd_units, self.bwd_units)
    }

    fn accuracy(&self) -> Option<f64> {
        match self.status {
            JobStatus::Ok { dev_pos_accuracy, .. } => Some(dev_pos_accuracy),
            JobStatus::Failed { .. } => None,
        }
    }
}

/// Runs every job. Jobs are independent and run concurrently; results come
/// back in treebank → split → seed order regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec, treebanks: &[Treebank]) -> Result<Vec<JobResult>> {
    spec.validate()?;
    let jobs: Vec<(&Treebank, (usize, usize), u64)> = treebanks
        .iter()
        .flat_map(|tb| {
            spec.splits
                .iter()
                .flat_map(move |&s| spec.seeds.iter().map(move |&seed| (tb, s, seed)))
        })
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(tb, (f, b), seed)| {
            let arch = spec.arch.clone().with_split(f, b);
            let train_config = TrainConfig {
                seed,
                ..spec.train.clone()
            };
            let status = match train(tb, &arch, &train_config) {
                Ok(out) => JobStatus::Ok {
                    dev_pos_accuracy: out.best_dev_pos,
                    best_epoch: out.best_epoch,
                },
                Err(e) => JobStatus::Failed {
                    error: e.to_string(),
                },
            };
            JobResult {
                treebank: tb.name.clone(),
                affixation: tb.affixation,
                synthesis: tb.synthesis,
                fwd_units: f,
                bwd_units: b,
                seed,
                status,
            }
        })
        .collect())
}

const RAW_HEADER: &str =
    "treebank\taffixation\tsynthesis\tfwd_units\tbwd_units\tseed\tstatus\tdev_pos_accuracy\tbest_epoch\terror";

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Per-job results as TSV, one row per job.
pub fn write_raw_tsv(jobs: &[JobResult]) -> String {
    let mut out = format!("# sweep-raw v{SWEEP_FORMAT_VERSION}\n{RAW_HEADER}\n");
    for j in jobs {
        let aff = j.affixation.map_or("-".to_string(), |a| a.to_string());
        let syn = j.synthesis.map_or("-".to_string(), |s| s.to_string());
        let (status, acc, epoch, err) = match &j.status {
            JobStatus::Ok {
                dev_pos_accuracy,
                best_epoch,
            } => ("ok", dev_pos_accuracy.to_string(), best_epoch.to_string(), String::new()),
            JobStatus::Failed { error } => ("failed", String::new(), String::new(), clean(error)),
        };
        let _ = writeln!(
            out,
            "{}\t{aff}\t{syn}\t{}\t{}\t{}\t{status}\t{acc}\t{epoch}\t{err}",
            clean(&j.treebank),
            j.fwd_units,
            j.bwd_units,
            j.seed
        );
    }
    out
}

pub fn read_raw_tsv(text: &str) -> Result<Vec<JobResult>> {
    let mut jobs = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line != RAW_HEADER {
                return Err(Error::Parse {
                    line: lineno,
                    message: "unexpected raw sweep header".into(),
                });
            }
            seen_header = true;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let perr = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        if cols.len() != 10 {
            return Err(perr(format!("expected 10 columns, found {}", cols.len())));
        }
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse().map_err(|_| perr(format!("bad {what} {s:?}")))
        };
        let status = match cols[6] {
            "ok" => JobStatus::Ok {
                dev_pos_accuracy: cols[7]
                    .parse()
                    .map_err(|_| perr(format!("bad accuracy {:?}", cols[7])))?,
                best_epoch: num(cols[8], "epoch")? as usize,
            },
            "failed" => JobStatus::Failed {
                error: cols[9].to_string(),
            },
            other => return Err(perr(format!("bad status {other:?}"))),
        };
        jobs.push(JobResult {
            treebank: cols[0].to_string(),
            affixation: match cols[1] {
                "-" => None,
                s => Some(s.parse()?),
            },
            synthesis: match cols[2] {
                "-" => None,
                s => Some(s.parse()?),
            },
            fwd_units: num(cols[3], "fwd_units")? as usize,
            bwd_units: num(cols[4], "bwd_units")? as usize,
            seed: num(cols[5], "seed")?,
            status,
        });
    }
    Ok(jobs)
}

/// One aggregated cell: mean dev POS accuracy (fraction), its difference to
/// the balanced column, and the paired t-test p-value of that difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub mean: f64,
    pub delta: f64,
    pub p_value: Option<f64>,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `language`, `affixation`, `synthesis` or `overall`.
    pub group: String,
    pub label: String,
    pub cells: Vec<Option<SweepCell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub format_version: u32,
    pub columns: Vec<String>,
    pub balanced_column: usize,
    /// Per-language rows first, then category rows and the overall row.
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
}

struct Language {
    name: String,
    affixation: Option<Affixation>,
    synthesis: Option<Synthesis>,
    /// per column: seed → accuracy
    runs: Vec<BTreeMap<u64, f64>>,
}

impl Language {
    fn mean(&self, col: usize) -> Option<f64> {
        let v: Vec<f64> = self.runs[col].values().copied().collect();
        (!v.is_empty()).then(|| mean(&v))
    }

    fn pairs(&self, col: usize, base: usize) -> Vec<(f64, f64)> {
        self.runs[col]
            .iter()
            .filter_map(|(seed, &a)| self.runs[base].get(seed).map(|&b| (a, b)))
            .collect()
    }
}

fn group_row(group: &str, label: &str, members: &[&Language], ncols: usize, base: usize) -> SweepRow {
    let col_mean = |c: usize| {
        let v: Vec<f64> = members.iter().filter_map(|l| l.mean(c)).collect();
        (!v.is_empty()).then(|| mean(&v))
    };
    let base_mean = col_mean(base);
    let cells = (0..ncols)
        .map(|c| {
            let m = col_mean(c)?;
            let b = base_mean?;
            let pairs: Vec<(f64, f64)> = members.iter().flat_map(|l| l.pairs(c, base)).collect();
            Some(SweepCell {
                mean: m,
                delta: if c == base { 0.0 } else { m - b },
                p_value: if c == base { None } else { paired_t_test(&pairs) },
                pairs: pairs.len(),
            })
        })
        .collect();
    SweepRow {
        group: group.to_string(),
        label: label.to_string(),
        cells,
    }
}

/// Aggregates raw job results. Pure: the same jobs always give the same
/// table. Column order is the order in which splits first appear.
pub fn aggregate(jobs: &[JobResult]) -> Result<SweepTable> {
    let mut columns: Vec<(usize, usize)> = Vec::new();
    for j in jobs {
        if !columns.contains(&j.split()) {
            columns.push(j.split());
        }
    }
    let base = columns
        .iter()
        .position(|(f, b)| f == b)
        .ok_or_else(|| Error::Data("no balanced split among sweep results".into()))?;

    let mut warnings = Vec::new();
    let mut langs: Vec<Language> = Vec::new();
    for j in jobs {
        let col = columns.iter().position(|&c| c == j.split()).unwrap();
        let idx = match langs.iter().position(|l| l.name == j.treebank) {
            Some(i) => i,
            None => {
                langs.push(Language {
                    name: j.treebank.clone(),
                    affixation: j.affixation,
                    synthesis: j.synthesis,
                    runs: vec![BTreeMap::new(); columns.len()],
                });
                langs.len() - 1
            }
        };
        match j.accuracy() {
            Some(a) => {
                langs[idx].runs[col].insert(j.seed, a);
            }
            None => warnings.push(format!(
                "{} {} seed {} failed and is skipped",
                j.treebank,
                split_label(j.split()),
                j.seed
            )),
        }
    }

    let ncols = columns.len();
    let mut rows: Vec<SweepRow> = langs
        .iter()
        .map(|l| group_row("language", &l.name, &[l], ncols, base))
        .collect();
    for a in Affixation::ALL {
        let members: Vec<&Language> = langs.iter().filter(|l| l.affixation == Some(a)).collect();
        if !members.is_empty() {
            rows.push(group_row("affixation", a.label(), &members, ncols, base));
        }
    }
    for s in Synthesis::ALL {
        let members: Vec<&Language> = langs.iter().filter(|l| l.synthesis == Some(s)).collect();
        if !members.is_empty() {
            rows.push(group_row("synthesis", s.label(), &members, ncols, base));
        }
    }
    let all: Vec<&Language> = langs.iter().collect();
    rows.push(group_row("overall", "Overall", &all, ncols, base));
    for r in &rows {
        for (c, cell) in r.cells.iter().enumerate() {
            if cell.is_none() {
                warnings.push(format!(
                    "{} {}: no successful runs for {}",
                    r.group,
                    r.label,
                    split_label(columns[c])
                ));
            }
        }
    }

    Ok(SweepTable {
        format_version: SWEEP_FORMAT_VERSION,
        columns: columns.into_iter().map(split_label).collect(),
        balanced_column: base,
        rows,
        warnings,
    })
}

impl SweepTable {
    /// Significance threshold for marking deltas.
    pub const ALPHA: f64 = 0.05;

    fn cell_text(&self, c: usize, cell: &Option<SweepCell>) -> String {
        match cell {
            None => "NA".to_string(),
            Some(cell) if c == self.balanced_column => format!("{:.2}", cell.mean * 100.0),
            Some(cell) => {
                let mark = match cell.p_value {
                    Some(p) if p < Self::ALPHA => "*",
                    _ => "",
                };
                format!("{:+.2}{mark}", cell.delta * 100.0)
            }
        }
    }

    fn render(&self, groups: &[&str]) -> String {
        let mut out = format!("# sweep-table v{}\ngroup\tlabel", self.format_version);
        for c in &self.columns {
            let _ = write!(out, "\t{c}");
        }
        out.push('\n');
        for r in self.rows.iter().filter(|r| groups.contains(&r.group.as_str())) {
            let _ = write!(out, "{}\t{}", r.group, r.label);
            for (c, cell) in r.cells.iter().enumerate() {
                let _ = write!(out, "\t{}", self.cell_text(c, cell));
            }
            out.push('\n');
        }
        out
    }

    /// Category table: balanced column as accuracy %, other columns as
    /// percentage-point deltas, `*` marking p < 0.05.
    pub fn category_tsv(&self) -> String {
        self.render(&["affixation", "synthesis", "overall"])
    }

    /// Per-language table in the same layout.
    pub fn language_tsv(&self) -> String {
        self.render(&["language"])
    }

    /// Per-language mean accuracies (%) for every column.
    pub fn language_means_tsv(&self) -> String {
        let mut out = format!("# sweep-means v{}\nlanguage", self.format_version);
        for c in &self.columns {
            let _ = write!(out, "\t{c}");
        }
        out.push('\n');
        for r in self.rows.iter().filter(|r| r.group == "language") {
            out.push_str(&r.label);
            for cell in &r.cells {
                match cell {
                    Some(c) => {
                        let _ = write!(out, "\t{:.2}", c.mean * 100.0);
                    }
                    None => out.push_str("\tNA"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table is serialisable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(tb: &str, aff: Affixation, syn: Synthesis, split: (usize, usize), seed: u64, acc: f64) -> JobResult {
        JobResult {
            treebank: tb.into(),
            affixation: Some(aff),
            synthesis: Some(syn),
            fwd_units: split.0,
            bwd_units: split.1,
            seed,
            status: JobStatus::Ok {
                dev_pos_accuracy: acc,
                best_epoch: 3,
            },
        }
    }

    fn sample_jobs() -> Vec<JobResult> {
        use Affixation::*;
        use Synthesis::*;
        let mut jobs = Vec::new();
        let langs = [
            ("a", StronglySuffixing, Agglutinative, 0.90),
            ("b", StronglySuffixing, Fusional, 0.80),
            ("c", WeaklyPrefixing, Agglutinative, 0.70),
        ];
        for (name, aff, syn, base) in langs {
            for (k, split) in [(16, 0), (8, 8), (0, 16)].into_iter().enumerate() {
                for seed in [1, 2] {
                    let acc = base + 0.01 * k as f64 + 0.001 * seed as f64;
                    jobs.push(job(name, aff, syn, split, seed, acc));
                }
            }
        }
        jobs
    }

    #[test]
    fn single_balanced_cell_has_zero_delta() {
        let jobs = vec![
            job("x", Affixation::StronglySuffixing, Synthesis::Agglutinative, (8, 8), 1, 0.9),
            job("x", Affixation::StronglySuffixing, Synthesis::Agglutinative, (8, 8), 2, 0.8),
        ];
        let t = aggregate(&jobs).unwrap();
        assert_eq!(t.columns, vec!["8/8"]);
        let lang = &t.rows[0];
        let cell = lang.cells[0].as_ref().unwrap();
        assert_eq!(cell.delta, 0.0);
        assert!((cell.mean - 0.85).abs() < 1e-15);
    }

    #[test]
    fn category_mean_is_mean_of_language_means() {
        let t = aggregate(&sample_jobs()).unwrap();
        let row = t
            .rows
            .iter()
            .find(|r| r.group == "affixation" && r.label == "S. suffix")
            .unwrap();
        let lang_mean = |name: &str, c: usize| {
            t.rows
                .iter()
                .find(|r| r.group == "language" && r.label == name)
                .unwrap()
                .cells[c]
                .as_ref()
                .unwrap()
                .mean
        };
        for c in 0..3 {
            let expect = (lang_mean("a", c) + lang_mean("b", c)) / 2.0;
            assert_eq!(row.cells[c].as_ref().unwrap().mean, expect);
        }
        let overall = t.rows.last().unwrap();
        assert_eq!(overall.label, "Overall");
        let d = overall.cells[0].as_ref().unwrap();
        assert!((d.delta - -0.01).abs() < 1e-12);
        assert_eq!(d.pairs, 6);
        assert_eq!(d.p_value, Some(0.0));
        assert_eq!(t.balanced_column, 1);
    }

    #[test]
    fn raw_tsv_round_trip_reaggregates_identically() {
        let mut jobs = sample_jobs();
        jobs.push(JobResult {
            treebank: "c".into(),
            affixation: Some(Affixation::WeaklyPrefixing),
            synthesis: Some(Synthesis::Agglutinative),
            fwd_units: 16,
            bwd_units: 0,
            seed: 3,
            status: JobStatus::Failed {
                error: "boom\tbad".into(),
            },
        });
        let text = write_raw_tsv(&jobs);
        let back = read_raw_tsv(&text).unwrap();
        assert_eq!(back.len(), jobs.len());
        let (a, b) = (aggregate(&jobs).unwrap(), aggregate(&back).unwrap());
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.warnings.iter().any(|w| w.contains("failed")));
    }

    #[test]
    fn rendering_shapes() {
        let t = aggregate(&sample_jobs()).unwrap();
        let tsv = t.category_tsv();
        let header = tsv.lines().nth(1).unwrap();
        assert_eq!(header, "group\tlabel\t16/0\t8/8\t0/16");
        assert!(tsv.contains("overall\tOverall\t-1.00*\t81.15\t+1.00*"), "{tsv}");
    }

    #[test]
    fn spec_parsing() {
        let kv = KvFile::parse(
            "treebank = a/treebank.txt\ntreebank = b/treebank.txt\n\
             splits = 16/0, 8/8, 0/16\nseeds = 4, 5\nchar_emb_dim = 16\nmax_epochs = 3\n",
        )
        .unwrap();
        let spec = SweepSpec::from_kv(&kv, Path::new("/base")).unwrap();
        assert_eq!(spec.splits, vec![(16, 0), (8, 8), (0, 16)]);
        assert_eq!(spec.seeds, vec![4, 5]);
        assert_eq!(spec.treebanks[1], Path::new("/base/b/treebank.txt"));
        assert_eq!(spec.arch.char_emb_dim, 16);
        assert_eq!(spec.train.max_epochs, 3);

        let d = SweepSpec::default();
        assert_eq!(d.splits.len(), 5);
        assert!(d.splits.iter().all(|(f, b)| f + b == 128));

        let kv = KvFile::parse("splits = 16/0, 0/16\n").unwrap();
        assert!(SweepSpec::from_kv(&kv, Path::new(".")).is_err());
        let kv = KvFile::parse("seed = 3\n").unwrap();
        assert!(SweepSpec::from_kv(&kv, Path::new(".")).is_err());

        let back = SweepSpec::from_kv(&KvFile::parse(&spec.to_kv().render()).unwrap(), Path::new("/")).unwrap();
        assert_eq!(back, spec);
    }
}
