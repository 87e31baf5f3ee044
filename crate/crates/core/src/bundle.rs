//! `bundle.json`: the machine-readable result of one analysis run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;

pub const BUNDLE_FILE: &str = "bundle.json";
pub const SCHEMA_VERSION: u32 = 1;

/// Artifact keys, in the order they are produced.
pub mod keys {
    pub const INPUT: &str = "input";
    pub const EDGES: &str = "edges.overlay";
    pub const CONGESTION: &str = "congestion.overlay";
    pub const SALIENCY: &str = "saliency.overlay";
    pub const SALIENT_MASK: &str = "saliency.mask";
    pub const CVD_D: &str = "cvd.d";
    pub const CVD_P: &str = "cvd.p";
    pub const CVD_T: &str = "cvd.t";
    pub const MONO: &str = "mono";

    pub fn rank(metric: &str) -> String {
        format!("rank.{metric}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    /// Input file name, without directories.
    pub source: String,
    pub original_width: usize,
    pub original_height: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub schema: u32,
    pub id: String,
    pub ts: i64,
    pub cohort: String,
    pub tool_version: String,
    pub image: ImageInfo,
    pub scores: BTreeMap<String, f64>,
    /// `null` when the corpus held no earlier value for the metric.
    pub percentiles: BTreeMap<String, Option<f64>>,
    pub corpus_size: usize,
    /// Artifact key to PNG path relative to the bundle directory.
    pub artifacts: BTreeMap<String, String>,
    pub flags: Vec<String>,
    pub config_fp: String,
    pub config: AnalysisConfig,
    pub data_tables: String,
}

impl AnalysisBundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

/// A bundle read back from disk together with its artifact bytes.
#[derive(Clone, Debug)]
pub struct LoadedBundle {
    pub dir: PathBuf,
    pub bundle: AnalysisBundle,
    /// Only artifacts whose files exist.
    pub images: BTreeMap<String, Vec<u8>>,
}

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("cannot read {}: {reason}", .path.display())]
    Read { path: PathBuf, reason: String },
    #[error("invalid bundle {}: {reason}", .path.display())]
    Parse { path: PathBuf, reason: String },
}

impl LoadedBundle {
    pub fn load(dir: &Path) -> Result<Self, BundleError> {
        let path = dir.join(BUNDLE_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| BundleError::Read { path: path.clone(), reason: e.to_string() })?;
        let bundle: AnalysisBundle =
            serde_json::from_str(&text).map_err(|e| BundleError::Parse { path: path.clone(), reason: e.to_string() })?;
        if bundle.schema != SCHEMA_VERSION {
            return Err(BundleError::Parse { path, reason: format!("unsupported schema {}", bundle.schema) });
        }
        let images = bundle
            .artifacts
            .iter()
            .filter_map(|(k, rel)| std::fs::read(dir.join(rel)).ok().map(|b| (k.clone(), b)))
            .collect();
        Ok(Self { dir: dir.to_path_buf(), bundle, images })
    }
}
