//! End-to-end analysis of one submission: load, resize, run every metric,
//! rank against the corpus, record, and write the bundle.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bundle::{keys, AnalysisBundle, ImageInfo, BUNDLE_FILE, SCHEMA_VERSION};
use crate::color::{colorfulness, monochrome_view, simulate_cvd, wave_score, CvdKind};
use crate::config::{AnalysisConfig, ConfigError};
use crate::corpus::{CorpusError, CorpusRecord, CorpusStore, RankingResult, FLAG_FP_MISMATCH};
use crate::edges::{detect_edges, edge_congestion};
use crate::plot::render_ranking;
use crate::raster::{load_image, resize_to_analysis, ImageError, ImageGray, ImageRgb};
use crate::saliency::{compute_saliency, saliency_score};
use crate::tables::{DataTables, TableError};

pub const TOOL_VERSION: &str = concat!("vizqm ", env!("CARGO_PKG_VERSION"));

pub const METRIC_EDGE_CONGESTION: &str = "edge_congestion";
pub const METRIC_SALIENCY: &str = "saliency";
pub const METRIC_WAVE: &str = "wave";
pub const METRIC_COLORFULNESS: &str = "colorfulness";

pub const FLAG_DRY_RUN: &str = "dry_run";
pub const FLAG_NO_EDGES: &str = "no_edges";
pub const FLAG_DEGENERATE_SALIENCY: &str = "degenerate_saliency";
pub const FLAG_ACHROMATIC: &str = "achromatic";
pub const FLAG_RESIZED: &str = "resized";
/// Some corpus records were produced under a different config fingerprint.
pub const FLAG_CORPUS_MIXED_CONFIG: &str = "corpus_mixed_config";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Tables,
    Load,
    Corpus,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Tables => "tables",
            Stage::Load => "load",
            Stage::Corpus => "corpus",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Tables(#[from] TableError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Error)]
#[error("{stage} stage: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: StageError,
}

impl PipelineError {
    fn at(stage: Stage) -> impl FnOnce(StageError) -> Self {
        move |source| Self { stage, source }
    }

    /// True when the failure stems from user-supplied input rather than the
    /// environment.
    pub fn is_input_error(&self) -> bool {
        !matches!(self.source, StageError::Io { .. } | StageError::Image(ImageError::EncodeError { .. }))
    }
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub input: PathBuf,
    pub config: AnalysisConfig,
    pub corpus: PathBuf,
    pub out_dir: PathBuf,
    /// Rank without recording the submission.
    pub dry_run: bool,
    /// Submission id; defaults to the input file stem, suffixed if taken.
    pub id: Option<String>,
    pub cohort: String,
    /// UTC seconds; defaults to the input file's modification time.
    pub timestamp: Option<i64>,
}

impl PipelineRun {
    pub fn new(input: impl Into<PathBuf>, corpus: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            config: AnalysisConfig::default(),
            corpus: corpus.into(),
            out_dir: out_dir.into(),
            dry_run: false,
            id: None,
            cohort: String::new(),
            timestamp: None,
        }
    }
}

/// Hash of the analysis parameters and data-table contents.
pub fn config_fingerprint(cfg: &AnalysisConfig, tables: &DataTables) -> String {
    let mut h = Sha256::new();
    h.update(cfg.canonical_json().as_bytes());
    h.update(b"|");
    h.update(tables.version_tag().as_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Every metric output for one analysis raster; no I/O.
pub struct MetricOutputs {
    pub edges: ImageGray,
    pub congestion: ImageGray,
    pub saliency: ImageGray,
    pub salient_mask: ImageGray,
    pub cvd: [ImageRgb; 3],
    pub mono: ImageGray,
    pub scores: BTreeMap<String, f64>,
    pub flags: Vec<String>,
}

pub fn run_metrics(img: &ImageRgb, cfg: &AnalysisConfig, tables: &DataTables) -> MetricOutputs {
    let ((edges, congestion), (sal, (cvd, (mono, (wave, hs))))) = rayon::join(
        || {
            let e = detect_edges(img, cfg);
            let c = edge_congestion(&e, cfg);
            (e, c)
        },
        || {
            rayon::join(
                || compute_saliency(img),
                || {
                    rayon::join(
                        || CvdKind::ALL.map(|k| simulate_cvd(img, k, &tables.cvd, cfg)),
                        || (monochrome_view(img), (wave_score(img, &tables.wave), colorfulness(img))),
                    )
                },
            )
        },
    );
    let sal_score = saliency_score(&sal, cfg);

    let mut flags = Vec::new();
    if edges.edge_count() == 0 {
        flags.push(FLAG_NO_EDGES.to_string());
    }
    if sal.degenerate {
        flags.push(FLAG_DEGENERATE_SALIENCY.to_string());
    }
    if hs == 0.0 {
        flags.push(FLAG_ACHROMATIC.to_string());
    }

    let scores = BTreeMap::from([
        (METRIC_EDGE_CONGESTION.to_string(), congestion.score),
        (METRIC_SALIENCY.to_string(), sal_score.score),
        (METRIC_WAVE.to_string(), wave),
        (METRIC_COLORFULNESS.to_string(), hs),
    ]);
    MetricOutputs {
        edges: edges.overlay(),
        congestion: congestion.overlay,
        saliency: sal.to_image(),
        salient_mask: ImageGray::from_mask(img.width(), img.height(), &sal_score.mask),
        cvd,
        mono,
        scores,
        flags,
    }
}

fn file_mtime_secs(path: &Path) -> i64 {
    std::fs::metadata(path)
        .and_then(|m| m.modified())
        .ok()
        .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
        .map_or(0, |d| d.as_secs() as i64)
}

fn choose_id(run: &PipelineRun, stem: &str, store: &CorpusStore) -> Result<String, CorpusError> {
    if let Some(id) = &run.id {
        if !run.dry_run && store.contains(id) {
            return Err(CorpusError::DuplicateId(id.clone()));
        }
        return Ok(id.clone());
    }
    if !store.contains(stem) {
        return Ok(stem.to_string());
    }
    Ok((2..).map(|n| format!("{stem}-{n}")).find(|c| !store.contains(c)).expect("unbounded"))
}

/// Runs the whole pipeline with tables from `VIZQM_DATA_DIR` or the built-ins.
pub fn analyze(run: &PipelineRun) -> Result<AnalysisBundle, PipelineError> {
    let tables = DataTables::from_env().map_err(|e| PipelineError::at(Stage::Tables)(e.into()))?;
    analyze_with(run, &tables)
}

/// Runs the whole pipeline with the given data tables.
pub fn analyze_with(run: &PipelineRun, tables: &DataTables) -> Result<AnalysisBundle, PipelineError> {
    run.config.validate().map_err(|e| PipelineError::at(Stage::Config)(e.into()))?;
    let cfg = &run.config;

    let original = load_image(&run.input).map_err(|e| PipelineError::at(Stage::Load)(e.into()))?;
    let mut store = CorpusStore::open(&run.corpus).map_err(|e| PipelineError::at(Stage::Corpus)(e.into()))?;

    let stem = run.input.file_stem().map_or_else(|| "submission".to_string(), |s| s.to_string_lossy().into_owned());
    let id = choose_id(run, &stem, &store).map_err(|e| PipelineError::at(Stage::Corpus)(e.into()))?;
    let ts = run.timestamp.unwrap_or_else(|| file_mtime_secs(&run.input));
    let fp = config_fingerprint(cfg, tables);

    let img = resize_to_analysis(&original, cfg);
    let outputs = run_metrics(&img, cfg, tables);

    let rankings: Vec<RankingResult> = outputs
        .scores
        .iter()
        .map(|(metric, &score)| store.rank(metric, score))
        .collect::<Result<_, _>>()
        .map_err(|e| PipelineError::at(Stage::Corpus)(e.into()))?;

    let mut flags = outputs.flags.clone();
    if (img.width(), img.height()) != (original.width(), original.height()) {
        flags.push(FLAG_RESIZED.to_string());
    }
    if store.baseline_fp().is_some_and(|b| b != fp) {
        flags.push(FLAG_FP_MISMATCH.to_string());
    }
    if store.records().iter().any(|r| r.config_fp != fp) {
        flags.push(FLAG_CORPUS_MIXED_CONFIG.to_string());
    }
    if run.dry_run {
        flags.push(FLAG_DRY_RUN.to_string());
    }

    // Artifacts first; the corpus record is the last side effect before the bundle.
    std::fs::create_dir_all(&run.out_dir)
        .map_err(|source| PipelineError::at(Stage::Write)(StageError::Io { path: run.out_dir.clone(), source }))?;
    let mut artifacts = BTreeMap::new();
    {
        let mut put = |key: &str, suffix: &str, png: Vec<u8>| -> Result<(), PipelineError> {
            let name = format!("{stem}_{suffix}.png");
            let path = run.out_dir.join(&name);
            std::fs::write(&path, png).map_err(|source| PipelineError::at(Stage::Write)(StageError::Io { path, source }))?;
            artifacts.insert(key.to_string(), name);
            Ok(())
        };
        put(keys::INPUT, "input", img.encode_png())?;
        put(keys::EDGES, "edges", outputs.edges.encode_png())?;
        put(keys::CONGESTION, "congestion", outputs.congestion.encode_png())?;
        put(keys::SALIENCY, "saliency", outputs.saliency.encode_png())?;
        put(keys::SALIENT_MASK, "salientmask", outputs.salient_mask.encode_png())?;
        for (kind, panel) in CvdKind::ALL.iter().zip(&outputs.cvd) {
            put(&format!("cvd.{}", kind.letter()), &format!("cvd_{}", kind.letter()), panel.encode_png())?;
        }
        put(keys::MONO, "mono", outputs.mono.encode_png())?;
        for r in &rankings {
            put(&keys::rank(&r.metric), &format!("rank_{}", r.metric), render_ranking(r).encode_png())?;
        }
    }

    let bundle = AnalysisBundle {
        schema: SCHEMA_VERSION,
        id: id.clone(),
        ts,
        cohort: run.cohort.clone(),
        tool_version: TOOL_VERSION.to_string(),
        image: ImageInfo {
            source: run.input.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
            original_width: original.width(),
            original_height: original.height(),
            width: img.width(),
            height: img.height(),
        },
        scores: outputs.scores.clone(),
        percentiles: rankings.iter().map(|r| (r.metric.clone(), r.percentile)).collect(),
        corpus_size: store.len(),
        artifacts,
        flags,
        config_fp: fp.clone(),
        config: cfg.clone(),
        data_tables: tables.version_tag(),
    };

    if !run.dry_run {
        let record = CorpusRecord {
            id,
            ts,
            cohort: run.cohort.clone(),
            scores: outputs.scores,
            config_fp: fp,
            flags: vec![],
        };
        store.add(record).map_err(|e| PipelineError::at(Stage::Corpus)(e.into()))?;
    }

    let path = run.out_dir.join(BUNDLE_FILE);
    std::fs::write(&path, bundle.to_json()).map_err(|source| PipelineError::at(Stage::Write)(StageError::Io { path, source }))?;
    Ok(bundle)
}
