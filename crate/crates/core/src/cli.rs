//! Command-line front end.
//!
//! Exit codes: 0 success, 1 bad input or failed validation, 2 internal error.
//! Settings precedence: built-in defaults, then `--config` file, then flags.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bundle::LoadedBundle;
use crate::config::AnalysisConfig;
use crate::corpus::{CorpusStore, BUILTIN_METRICS};
use crate::pipeline::{analyze_with, PipelineRun};
use crate::report::{assemble_report, load_feedback, load_rubric, fmt_percentile, fmt_score};
use crate::selftest;
use crate::tables::DataTables;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vizqm", version, about = "Visualization quality metrics, corpus ranking and feedback reports")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyse one PNG, rank it against the corpus and write bundle.json plus panels.
    Analyze(AnalyzeArgs),
    /// Assemble the HTML feedback report from a bundle directory.
    Report(ReportArgs),
    /// Inspect a corpus file.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Run every metric on a generated test image and check expected behaviour.
    Selftest(SelftestArgs),
}

/// Overrides for individual analysis settings.
#[derive(Debug, Args, Default, Clone)]
pub struct ConfigArgs {
    /// JSON file with analysis settings (overrides defaults; flags override it)
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Pixel distance within which two separate edges count as congested
    #[arg(long, value_name = "PX")]
    pub congestion_distance: Option<usize>,
    /// Saliency level (0-255) at or above which a pixel is salient
    #[arg(long, value_name = "LEVEL")]
    pub saliency_threshold: Option<u8>,
    /// Longest image side used for analysis
    #[arg(long, value_name = "PX")]
    pub max_dimension: Option<usize>,
    /// Colour vision deficiency severity in [0, 1]
    #[arg(long, value_name = "FRACTION")]
    pub cvd_severity: Option<f64>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<AnalysisConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("--config {}: {e}", p.display()))?;
                serde_json::from_str(&text).map_err(|e| format!("--config {}: {e}", p.display()))?
            }
            None => AnalysisConfig::default(),
        };
        if let Some(v) = self.congestion_distance {
            cfg.congestion_distance = v;
        }
        if let Some(v) = self.saliency_threshold {
            cfg.saliency_threshold = v;
        }
        if let Some(v) = self.max_dimension {
            cfg.max_dimension = v;
        }
        if let Some(v) = self.cvd_severity {
            cfg.cvd_severity = v;
        }
        cfg.validate().map_err(|e| format!("--{}: {}", e.field.replace('_', "-"), e.reason))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Submission screenshot (PNG)
    #[arg(value_name = "IMAGE")]
    pub image: PathBuf,
    /// Corpus file (JSON lines); created if absent
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Output directory for bundle.json and PNG panels
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Rank against the corpus without recording this submission
    #[arg(long)]
    pub dry_run: bool,
    /// Submission id (default: image file stem, suffixed if already used)
    #[arg(long, value_name = "STRING")]
    pub id: Option<String>,
    /// Cohort tag stored with the corpus record
    #[arg(long, value_name = "TAG", default_value = "")]
    pub cohort: String,
    /// Submission time in UTC seconds (default: SOURCE_DATE_EPOCH, else the image mtime)
    #[arg(long, value_name = "SECS")]
    pub timestamp: Option<i64>,
    #[command(flatten)]
    pub settings: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by `analyze`
    #[arg(long, value_name = "DIR")]
    pub bundle: PathBuf,
    /// Rubric JSON (`objectives: [...]`)
    #[arg(long, value_name = "FILE")]
    pub rubric: PathBuf,
    /// Marker feedback JSON; omit for a machine-only report
    #[arg(long, value_name = "FILE")]
    pub feedback: Option<PathBuf>,
    /// Output HTML file
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum CorpusAction {
    /// One row per record
    List(CorpusArgs),
    /// Per-metric count, min, median and max
    Stats(CorpusArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus file (JSON lines)
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Directory for the generated panels
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub settings: ConfigArgs,
}

/// Failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self { code: EXIT_INTERNAL, message: message.into() }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_INPUT,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a, stdout),
        Command::Report(a) => cmd_report(&a, stdout),
        Command::Corpus { action } => cmd_corpus(&action, stdout),
        Command::Selftest(a) => cmd_selftest(&a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn tables() -> Result<DataTables, Failure> {
    DataTables::from_env().map_err(|e| Failure::input(e.to_string()))
}

fn source_date_epoch() -> Option<i64> {
    std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok())
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = a.settings.resolve().map_err(Failure::input)?;
    let tables = tables()?;
    let run = PipelineRun {
        input: a.image.clone(),
        config,
        corpus: a.corpus.clone(),
        out_dir: a.out.clone(),
        dry_run: a.dry_run,
        id: a.id.clone(),
        cohort: a.cohort.clone(),
        timestamp: a.timestamp.or_else(source_date_epoch),
    };
    let bundle = analyze_with(&run, &tables).map_err(|e| {
        let msg = e.to_string();
        if e.is_input_error() { Failure::input(msg) } else { Failure::internal(msg) }
    })?;
    let _ = writeln!(out, "{} (corpus size {})", bundle.id, bundle.corpus_size);
    for (metric, score) in &bundle.scores {
        let pct = bundle.percentiles.get(metric).copied().flatten();
        let _ = writeln!(out, "{metric:<16} {:>12}  percentile {}", fmt_score(*score), fmt_percentile(pct));
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let rubric = load_rubric(&a.rubric).map_err(|e| Failure::input(format!("--rubric {}: {e}", a.rubric.display())))?;
    let feedback = match &a.feedback {
        Some(p) => Some(load_feedback(p, &rubric).map_err(|e| Failure::input(format!("--feedback {}: {e}", p.display())))?),
        None => None,
    };
    let loaded = LoadedBundle::load(&a.bundle).map_err(|e| Failure::input(format!("--bundle: {e}")))?;
    let doc = assemble_report(&loaded, feedback.as_ref(), &rubric).map_err(|e| Failure::input(e.to_string()))?;
    write_file(&a.out, doc.html.as_bytes())?;
    let mode = if feedback.is_some() { "full" } else { "machine-only" };
    let _ = writeln!(out, "wrote {} ({mode} report)", a.out.display());
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Failure::internal(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))
}

fn cmd_corpus(action: &CorpusAction, out: &mut dyn Write) -> Result<(), Failure> {
    let (CorpusAction::List(args) | CorpusAction::Stats(args)) = action;
    let store = CorpusStore::open(&args.corpus).map_err(|e| Failure::input(format!("{}: {e}", args.corpus.display())))?;
    match action {
        CorpusAction::List(_) => {
            let metrics = store.metric_names();
            let _ = writeln!(out, "id\tts\tcohort\tconfig_fp\t{}", metrics.join("\t"));
            for r in store.records() {
                let cells: Vec<String> = metrics.iter().map(|m| r.scores.get(m).map_or_else(|| "-".into(), |v| fmt_score(*v))).collect();
                let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", r.id, r.ts, r.cohort, r.config_fp, cells.join("\t"));
            }
        }
        CorpusAction::Stats(_) => {
            let _ = writeln!(out, "metric\tcount\tmin\tmedian\tmax");
            for m in store.metric_names() {
                match store.stats(&m) {
                    Some(s) => {
                        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", m, s.count, fmt_score(s.min), fmt_score(s.median), fmt_score(s.max));
                    }
                    None if BUILTIN_METRICS.contains(&m.as_str()) => {
                        let _ = writeln!(out, "{m}\t0\t-\t-\t-");
                    }
                    None => {}
                }
            }
        }
    }
    Ok(())
}

fn cmd_selftest(a: &SelftestArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = a.settings.resolve().map_err(Failure::input)?;
    let tables = tables()?;
    let outcome = selftest::run(Some(&a.out), &cfg, &tables).map_err(|e| Failure::internal(e.to_string()))?;
    for c in &outcome.checks {
        let status = match (c.passed, c.required) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "NOTE",
        };
        let _ = writeln!(out, "{status}  {}: {}", c.name, c.detail);
    }
    let _ = writeln!(out, "wrote {} panels to {}", outcome.written.len(), a.out.display());
    if outcome.passed() {
        Ok(())
    } else {
        Err(Failure::internal("selftest characterization failed"))
    }
}
