//! Command-line front end. Every subcommand writes its result as CSV (or
//! JSON with `--json`) plus a run manifest recording input and output
//! digests and the parameters used.

mod commands;
pub mod manifest;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::word_accuracy::SystemPair;
use crate::zeroshot::PredictorRule;
use manifest::{manifest_path, RunManifest};
use output::write_atomic;

pub const FORMAT_VERSION: u32 = 1;

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (corpus format 1, attribution format 1, manifest format 1)"
);

#[derive(Debug, Parser)]
#[command(name = "charmt", version = LONG_VERSION, about = "Character- and byte-level MT analysis toolkit")]
pub struct Cli {
    /// Worker threads for per-record work. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: u16,
    /// Write JSON with full precision instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Where to write the run manifest (default: `<out>.manifest.json`).
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus-level chrF++, chrF or BLEU for one system.
    Score(ScoreArgs),
    /// Paired t-test on sentence-level scores of two systems.
    Compare(CompareArgs),
    /// Word accuracy by source–reference orthographic similarity.
    Osw(OswArgs),
    /// Word accuracy by reference-word training frequency.
    Freq(FreqArgs),
    /// Source attribution share by target position.
    AttrCurves(AttrCurvesArgs),
    /// Position-normalized source share by byte position inside words.
    AttrWords(AttrWordsArgs),
    /// Source importance of OSW versus non-OSW words.
    AttrOsw(AttrOswArgs),
    /// Accuracy of the resourcedness winner predictor.
    ZeroshotPredict(ZeroshotArgs),
    /// Score change from a small to a large fine-tuning set, by script.
    Degrade(DegradeArgs),
    /// Build a control set with random-letter proper nouns.
    ControlGen(ControlGenArgs),
    /// Copying accuracy of hypotheses on a control set.
    ControlScore(ControlScoreArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Score(_) => "score",
            Command::Compare(_) => "compare",
            Command::Osw(_) => "osw",
            Command::Freq(_) => "freq",
            Command::AttrCurves(_) => "attr-curves",
            Command::AttrWords(_) => "attr-words",
            Command::AttrOsw(_) => "attr-osw",
            Command::ZeroshotPredict(_) => "zeroshot-predict",
            Command::Degrade(_) => "degrade",
            Command::ControlGen(_) => "control-gen",
            Command::ControlScore(_) => "control-score",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Chrfpp,
    Chrf,
    Bleu,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::Chrfpp => "chrfpp",
            Metric::Chrf => "chrf",
            Metric::Bleu => "bleu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SentenceMetric {
    Chrfpp,
    Chrf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rule {
    Full,
    Presence,
}

impl From<Rule> for PredictorRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Full => PredictorRule::Full,
            Rule::Presence => PredictorRule::Presence,
        }
    }
}

fn parse_systems(s: &str) -> std::result::Result<SystemPair, String> {
    SystemPair::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub system: String,
    #[arg(long, value_enum, default_value_t = Metric::Chrfpp)]
    pub metric: Metric,
    /// Also write per-sentence scores (chrF/chrF++ only).
    #[arg(long, value_name = "OUT.csv")]
    pub per_sentence: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Two systems, `A,B`.
    #[arg(long, value_parser = parse_systems)]
    pub systems: SystemPair,
    #[arg(long, value_enum, default_value_t = SentenceMetric::Chrfpp)]
    pub metric: SentenceMetric,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PairInputs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub align_src_ref: PathBuf,
    /// Source–hypothesis alignments of the first system.
    #[arg(long = "align-src-hyp-A", alias = "align-src-hyp-a")]
    pub align_src_hyp_a: PathBuf,
    /// Source–hypothesis alignments of the second system.
    #[arg(long = "align-src-hyp-B", alias = "align-src-hyp-b")]
    pub align_src_hyp_b: PathBuf,
    /// Two systems, `A,B`.
    #[arg(long, value_parser = parse_systems)]
    pub systems: SystemPair,
}

#[derive(Debug, Args)]
pub struct OswArgs {
    #[command(flatten)]
    pub pairs: PairInputs,
    /// Ascending similarity thresholds in [0, 1] (default 0,0.1,...,1).
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FreqArgs {
    #[command(flatten)]
    pub pairs: PairInputs,
    /// Target side of the training data, one sentence per line.
    #[arg(long)]
    pub train_target: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0,1,10,100,1000")]
    pub bins: Vec<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub attributions: PathBuf,
    /// Trailing rolling-mean window over positions; 1 disables smoothing.
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Leave out the end-of-sentence step of each record.
    #[arg(long)]
    pub drop_eos: bool,
    /// Remove prompt bytes (`prompt_len`) before computing shares.
    #[arg(long)]
    pub exclude_prompt: bool,
}

#[derive(Debug, Args)]
pub struct AttrCurvesArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttrWordsArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Last in-word byte position to report.
    #[arg(long, default_value_t = 9)]
    pub max_pos: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttrOswArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub align_src_ref: PathBuf,
    /// OSW pairs have similarity strictly above this.
    #[arg(long, default_value_t = 0.7)]
    pub osw_min: f64,
    /// Non-OSW pairs have similarity strictly below this.
    #[arg(long, default_value_t = 0.3)]
    pub nonosw_max: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ZeroshotArgs {
    /// CSV with columns system,code,script,condition,chrfpp.
    #[arg(long)]
    pub scores: PathBuf,
    /// TSV with columns code,script,subgrouping,in_pretraining.
    #[arg(long)]
    pub metadata: PathBuf,
    #[arg(long, value_enum, default_value_t = Rule::Full)]
    pub rule: Rule,
    /// Two systems, `A,B`; the rule predicts A wins on favoured languages.
    #[arg(long, value_parser = parse_systems)]
    pub systems: SystemPair,
    /// Required when the table holds several conditions.
    #[arg(long)]
    pub condition: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long)]
    pub scores_low: PathBuf,
    #[arg(long)]
    pub scores_high: PathBuf,
    /// Languages at or below this low-condition score are excluded.
    #[arg(long, default_value_t = 25.0)]
    pub floor: f64,
    /// Script groups, colon separated; `nonlatin` catches the rest.
    #[arg(long, default_value = "latin:nonlatin")]
    pub groups: String,
    /// Systems to report (default: every system in the low table).
    #[arg(long, value_delimiter = ',')]
    pub system: Option<Vec<String>>,
    /// Also list excluded and unmatched languages here.
    #[arg(long)]
    pub excluded_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ControlGenArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Source–reference alignments.
    #[arg(long)]
    pub align: PathBuf,
    #[arg(long)]
    pub src_tags: PathBuf,
    #[arg(long)]
    pub ref_tags: PathBuf,
    /// Overridden by the CHARMT_SEED environment variable.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "NNP,NNPS,PROPN")]
    pub proper_noun_tags: Vec<String>,
    #[arg(long)]
    pub out_corpus: PathBuf,
    #[arg(long)]
    pub out_log: PathBuf,
}

#[derive(Debug, Args)]
pub struct ControlScoreArgs {
    /// Replacement log written by control-gen.
    #[arg(long)]
    pub log: PathBuf,
    /// Corpus file whose `hyp` map holds translations of the control set.
    #[arg(long)]
    pub hyps: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// One file produced by a run. `path: None` means standard output.
pub(crate) struct Artifact {
    pub role: &'static str,
    pub path: Option<PathBuf>,
    pub bytes: Vec<u8>,
}

pub(crate) struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Human-readable summary for stderr.
    pub summary: Option<String>,
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code: 0 on success, 1 for usage or data errors, 2 for I/O
/// errors, 3 for internal errors.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("charmt: error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(usize::from(cli.threads))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let name = cli.command.name();
    let mut manifest = RunManifest::new(name);
    let outcome = pool.install(|| commands::execute(&cli.command, &mut manifest, cli.json))?;

    let mut primary: Option<&Path> = None;
    for a in &outcome.artifacts {
        match &a.path {
            Some(p) => {
                write_atomic(p, &a.bytes)?;
                primary.get_or_insert(p);
                manifest.output(a.role, &p.display().to_string(), &a.bytes);
            }
            None => {
                use std::io::Write;
                let mut out = std::io::stdout().lock();
                out.write_all(&a.bytes)
                    .and_then(|()| out.flush())
                    .map_err(|e| Error::io("<stdout>", e))?;
                manifest.output(a.role, "-", &a.bytes);
            }
        }
    }
    manifest.write(&manifest_path(cli.manifest.as_deref(), primary, name))?;
    if let Some(s) = outcome.summary {
        eprintln!("{s}");
    }
    Ok(())
}
