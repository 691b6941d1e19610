//! `charprobe`: generate corpora, train taggers, probe character units and
//! run directionality sweeps.
//!
//! Every command accepts `--config FILE` with `key = value` lines; flags
//! override file values and the resolved configuration is written next to
//! the outputs. Exit codes: 0 success, 1 runtime or data error, 2 usage error.

mod plot;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use charprobe_core::corpus::Treebank;
use charprobe_core::kv::KvFile;
use charprobe_core::model::{ArchConfig, Checkpoint};
use charprobe_core::probe::{compute_report, ProbeConfig, PROBE_FORMAT_VERSION};
use charprobe_core::synthlang::{emit_conllu, generate, TypologyProfile};
use charprobe_core::trainer::{
    aggregate, evaluate, log_to_tsv, read_raw_tsv, run_sweep, train, write_raw_tsv, SweepSpec,
    SweepTable, TrainConfig,
};

/// Resolved-config header line; bumped when key meanings change.
const CONFIG_HEADER: &str = "# charprobe config v1";

#[derive(Parser)]
#[command(name = "charprobe", version, about = "Character-level BiLSTM taggers with per-unit probing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic CoNLL-U treebank.
    Synth(SynthArgs),
    /// Train a tagger and keep the best dev-POS checkpoint.
    Train(TrainArgs),
    /// Per-attribute token accuracy of a checkpoint on one split.
    Evaluate(EvalArgs),
    /// Score every character unit by PDI.
    Probe(ProbeArgs),
    /// Train every treebank × unit split × seed job and aggregate.
    Sweep(SweepArgs),
    /// Re-aggregate persisted raw sweep results.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// prefix, suffix or none
    #[arg(long)]
    affix_position: Option<String>,
    /// agglutinative, fusional or isolating
    #[arg(long)]
    synthesis: Option<String>,
    #[arg(long)]
    alphabet_size: Option<usize>,
    #[arg(long)]
    n_stems: Option<usize>,
    /// Inclusive range `lo..hi`.
    #[arg(long)]
    stem_len: Option<String>,
    /// Inclusive range `lo..hi`.
    #[arg(long)]
    sent_len: Option<String>,
    #[arg(long)]
    label_noise: Option<f64>,
    /// Number of sentences [default: 2000]
    #[arg(long)]
    sentences: Option<usize>,
    /// Generator seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Treebank metadata file, or a directory holding `treebank.txt`.
    #[arg(long)]
    treebank: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    fwd_units: Option<usize>,
    #[arg(long)]
    bwd_units: Option<usize>,
    #[arg(long)]
    char_emb_dim: Option<usize>,
    #[arg(long)]
    word_hidden_total: Option<usize>,
    #[arg(long)]
    word_layers: Option<usize>,
    #[arg(long)]
    dropout_rate: Option<f64>,
    #[arg(long, alias = "epochs")]
    max_epochs: Option<usize>,
    #[arg(long, alias = "lr")]
    learning_rate: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    treebank: PathBuf,
    #[arg(long, default_value = "dev")]
    split: String,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    treebank: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// avgabs or mad [default: avgabs]
    #[arg(long)]
    measure: Option<String>,
    /// [default: 16]
    #[arg(long)]
    bins: Option<usize>,
    /// Minimum training frequency of a probed word type [default: 8]
    #[arg(long)]
    freq: Option<usize>,
    /// Minimum majority-POS share of a probed word type [default: 0.6]
    #[arg(long)]
    unambiguity: Option<f64>,
    /// Comma-separated POS tags to leave out.
    #[arg(long)]
    excluded_tags: Option<String>,
    /// Weight word types by training frequency.
    #[arg(long)]
    token_weighted: bool,
    /// Write an SVG bar chart of the ranked scores.
    #[arg(long)]
    plot: bool,
    /// Write an activation heat-strip SVG for this word (repeatable).
    #[arg(long)]
    trace_word: Vec<String>,
    /// Units shown in heat-strips [default: the head units]
    #[arg(long, value_delimiter = ',')]
    trace_units: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding `raw.tsv` from a sweep.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory [default: the input directory]
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Caller mistakes: missing inputs and invalid settings.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let is_usage = err.chain().any(|e| {
        e.is::<UsageError>()
            || matches!(
                e.downcast_ref::<charprobe_core::Error>(),
                Some(charprobe_core::Error::Config(_))
            )
    });
    if is_usage {
        2
    } else {
        1
    }
}

fn require_exists(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        return Err(usage(format!("{what} not found: {}", path.display())));
    }
    Ok(())
}

fn treebank_meta(path: &Path) -> Result<PathBuf> {
    require_exists(path, "treebank")?;
    Ok(if path.is_dir() {
        path.join("treebank.txt")
    } else {
        path.to_path_buf()
    })
}

fn load_treebank(path: &Path) -> Result<Treebank> {
    let meta = treebank_meta(path)?;
    require_exists(&meta, "treebank metadata")?;
    Treebank::load(&meta).with_context(|| format!("loading treebank {}", meta.display()))
}

fn load_config(path: Option<&Path>, known: &[&str]) -> Result<KvFile> {
    let Some(path) = path else {
        return Ok(KvFile::new());
    };
    require_exists(path, "config file")?;
    let kv = KvFile::load(path)?;
    kv.check_known(known)
        .with_context(|| format!("in config file {}", path.display()))?;
    Ok(kv)
}

fn set_opt(kv: &mut KvFile, key: &str, value: Option<impl fmt::Display>) {
    if let Some(v) = value {
        kv.set(key, v);
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn resolved(kv: &KvFile) -> String {
    format!("{CONFIG_HEADER}\n{}", kv.render())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    const PROFILE_KEYS: [&str; 7] = [
        "affix_position",
        "synthesis",
        "alphabet_size",
        "n_stems",
        "stem_len",
        "sent_len",
        "label_noise",
    ];
    let known: Vec<&str> = PROFILE_KEYS.iter().copied().chain(["sentences", "seed"]).collect();
    let mut kv = load_config(a.config.as_deref(), &known)?;
    set_opt(&mut kv, "affix_position", a.affix_position);
    set_opt(&mut kv, "synthesis", a.synthesis);
    set_opt(&mut kv, "alphabet_size", a.alphabet_size);
    set_opt(&mut kv, "n_stems", a.n_stems);
    set_opt(&mut kv, "stem_len", a.stem_len);
    set_opt(&mut kv, "sent_len", a.sent_len);
    set_opt(&mut kv, "label_noise", a.label_noise);
    set_opt(&mut kv, "sentences", a.sentences);
    set_opt(&mut kv, "seed", a.seed);
    let profile = TypologyProfile::from_kv(&kv)?;
    let sentences: usize = kv.parsed("sentences")?.unwrap_or(2000);
    let seed: u64 = kv.parsed("seed")?.unwrap_or(1);

    let corpus = generate(&profile, sentences, seed)?;
    let meta = emit_conllu(&corpus.treebank, &profile, &a.out)?;
    let mut out_kv = profile.to_kv();
    out_kv.push("sentences", sentences);
    out_kv.push("seed", seed);
    write(&a.out.join("synth-config.txt"), &resolved(&out_kv))?;
    println!("wrote {} ({})", meta.display(), corpus.treebank.name);
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let known: Vec<&str> = ArchConfig::KEYS.iter().chain(&TrainConfig::KEYS).copied().collect();
    let mut kv = load_config(a.config.as_deref(), &known)?;
    set_opt(&mut kv, "fwd_units", a.fwd_units);
    set_opt(&mut kv, "bwd_units", a.bwd_units);
    set_opt(&mut kv, "char_emb_dim", a.char_emb_dim);
    set_opt(&mut kv, "word_hidden_total", a.word_hidden_total);
    set_opt(&mut kv, "word_layers", a.word_layers);
    set_opt(&mut kv, "dropout_rate", a.dropout_rate);
    set_opt(&mut kv, "max_epochs", a.max_epochs);
    set_opt(&mut kv, "learning_rate", a.learning_rate);
    set_opt(&mut kv, "momentum", a.momentum);
    set_opt(&mut kv, "seed", a.seed);
    set_opt(&mut kv, "clip_norm", a.clip_norm);
    set_opt(&mut kv, "patience", a.patience);
    let mut arch = ArchConfig::default();
    arch.apply_kv(&kv)?;
    let mut config = TrainConfig::default();
    config.apply_kv(&kv)?;
    config.validate()?;

    let treebank = load_treebank(&a.treebank)?;
    create_dir(&a.out)?;
    let mut out_kv = KvFile::new();
    out_kv.push("treebank", treebank_meta(&a.treebank)?.display());
    arch.write_kv(&mut out_kv);
    config.write_kv(&mut out_kv);
    write(&a.out.join("train-config.txt"), &resolved(&out_kv))?;

    let outcome = train(&treebank, &arch, &config)?;
    let ckpt = a.out.join("model.ckpt");
    outcome.checkpoint.save(&ckpt)?;
    write(&a.out.join("train-log.tsv"), &log_to_tsv(&outcome.log))?;
    println!(
        "best epoch {} dev POS accuracy {:.4}; wrote {}",
        outcome.best_epoch,
        outcome.best_dev_pos,
        ckpt.display()
    );
    Ok(())
}

fn cmd_evaluate(a: EvalArgs) -> Result<()> {
    require_exists(&a.checkpoint, "checkpoint")?;
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let treebank = load_treebank(&a.treebank)?;
    let sentences = treebank
        .split(&a.split)
        .map_err(|e| usage(format!("{e}")))?;
    let acc = evaluate(&ckpt.tagger, sentences)?;
    let mut out = String::from("# evaluation v1\nattribute\taccuracy\n");
    for (name, v) in &acc.attributes {
        out.push_str(&format!("{name}\t{v}\n"));
    }
    print!("{out}");
    if let Some(path) = a.out {
        write(&path, &out)?;
    }
    Ok(())
}

fn file_stem_for(word: &str) -> String {
    word.chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

fn cmd_probe(a: ProbeArgs) -> Result<()> {
    let mut kv = load_config(a.config.as_deref(), &ProbeConfig::KEYS)?;
    set_opt(&mut kv, "measure", a.measure);
    set_opt(&mut kv, "bins", a.bins);
    set_opt(&mut kv, "freq_threshold", a.freq);
    set_opt(&mut kv, "unambiguity_threshold", a.unambiguity);
    set_opt(&mut kv, "excluded_tags", a.excluded_tags);
    if a.token_weighted {
        kv.set("token_weighted", true);
    }
    let mut config = ProbeConfig::default();
    config.apply_kv(&kv)?;
    config.validate()?;

    require_exists(&a.checkpoint, "checkpoint")?;
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let treebank = load_treebank(&a.treebank)?;
    create_dir(&a.out)?;
    let mut out_kv = KvFile::new();
    out_kv.push("checkpoint", a.checkpoint.display());
    out_kv.push("treebank", treebank_meta(&a.treebank)?.display());
    for (k, v) in config.to_kv().entries() {
        out_kv.push(k.clone(), v);
    }
    out_kv.push("bin_width", config.bin_width());
    write(&a.out.join("probe-config.txt"), &resolved(&out_kv))?;

    let report = compute_report(&ckpt, &treebank, &config)?;
    let stem = format!("pdi-{}", config.measure.as_str());
    write(&a.out.join(format!("{stem}.tsv")), &report.to_tsv())?;
    write(&a.out.join(format!("{stem}.json")), &report.summary_json())?;
    if a.plot {
        let title = format!("{} {}", treebank.name, config.measure.as_str());
        write(&a.out.join(format!("{stem}.svg")), &plot::pdi_bars(&report, &title))?;
    }
    let units = if a.trace_units.is_empty() {
        report.head.clone()
    } else {
        a.trace_units.clone()
    };
    let n_units = ckpt.tagger.config().char_units();
    if let Some(&bad) = units.iter().find(|&&u| u >= n_units) {
        return Err(usage(format!("unit {bad} out of range (model has {n_units} units)")));
    }
    for word in &a.trace_word {
        let (_, trace) = ckpt.tagger.encode_word(word, true)?;
        let trace = trace.expect("trace requested");
        let path = a.out.join(format!("trace-{}.svg", file_stem_for(word)));
        write(&path, &plot::activation_strip(&trace, &units))?;
    }
    println!(
        "probe v{PROBE_FORMAT_VERSION}: {} words, {} units, mass {:.4}, median index {}, head forwardness {:.3}",
        report.num_words,
        report.scores.len(),
        report.mass,
        report.median_index,
        report.head_forwardness
    );
    Ok(())
}

fn write_tables(dir: &Path, table: &SweepTable) -> Result<()> {
    write(&dir.join("table.json"), &table.to_json())?;
    write(&dir.join("categories.tsv"), &table.category_tsv())?;
    write(&dir.join("languages.tsv"), &table.language_tsv())?;
    write(&dir.join("language-means.tsv"), &table.language_means_tsv())?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", table.category_tsv());
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    require_exists(&a.spec, "sweep spec")?;
    let kv = KvFile::load(&a.spec)?;
    let base = a.spec.parent().unwrap_or(Path::new("."));
    let spec = SweepSpec::from_kv(&kv, base)?;
    if spec.treebanks.is_empty() {
        return Err(usage("sweep spec lists no treebank"));
    }
    let treebanks = spec
        .treebanks
        .iter()
        .map(|p| load_treebank(p))
        .collect::<Result<Vec<_>>>()?;
    if let Some(n) = a.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    create_dir(&a.out)?;
    write(&a.out.join("sweep-config.txt"), &resolved(&spec.to_kv()))?;
    let jobs = run_sweep(&spec, &treebanks)?;
    write(&a.out.join("raw.tsv"), &write_raw_tsv(&jobs))?;
    write_tables(&a.out, &aggregate(&jobs)?)
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let raw = a.input.join("raw.tsv");
    require_exists(&raw, "raw sweep results")?;
    let text = fs::read_to_string(&raw).with_context(|| format!("reading {}", raw.display()))?;
    let jobs = read_raw_tsv(&text).with_context(|| format!("parsing {}", raw.display()))?;
    let out = a.out.unwrap_or(a.input);
    create_dir(&out)?;
    write_tables(&out, &aggregate(&jobs)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Probe(a) => cmd_probe(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
