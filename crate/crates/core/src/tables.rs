//! Versioned numeric data tables: CVD matrices and the WAVE palette.
//!
//! Built-in copies are compiled in from `data/`. Setting `VIZQM_DATA_DIR`
//! replaces both with files of the same names from that directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::color::CvdKind;

pub const CVD_FILE: &str = "cvd_matrices.toml";
pub const WAVE_FILE: &str = "wave_bcp32.toml";
pub const DATA_DIR_ENV: &str = "VIZQM_DATA_DIR";

const BUILTIN_CVD: &str = include_str!("../data/cvd_matrices.toml");
const BUILTIN_WAVE: &str = include_str!("../data/wave_bcp32.toml");

pub const SEVERITY_STEPS: usize = 11;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("missing or corrupt CVD matrix data ({source_name}): {reason}")]
    MissingMatrixData { source_name: String, reason: String },
    #[error("missing or corrupt WAVE data ({source_name}): {reason}")]
    MissingWaveData { source_name: String, reason: String },
}

pub type Matrix3 = [[f64; 3]; 3];

#[derive(Clone, Debug, PartialEq)]
pub struct CvdMatrixTable {
    pub version: String,
    /// Indexed by [`CvdKind::index`], then by severity step (0..=10).
    matrices: [Vec<Matrix3>; 3],
    pub digest: String,
}

impl CvdMatrixTable {
    pub fn parse(text: &str, source_name: &str) -> Result<Self, TableError> {
        #[derive(Deserialize)]
        struct Raw {
            version: String,
            protanomaly: BTreeMap<String, Matrix3>,
            deuteranomaly: BTreeMap<String, Matrix3>,
            tritanomaly: BTreeMap<String, Matrix3>,
        }
        let fail = |reason: String| TableError::MissingMatrixData { source_name: source_name.to_string(), reason };
        let raw: Raw = toml::from_str(text).map_err(|e| fail(e.to_string()))?;
        let steps = |name: &str, m: &BTreeMap<String, Matrix3>| -> Result<Vec<Matrix3>, TableError> {
            (0..SEVERITY_STEPS)
                .map(|i| {
                    let key = format!("{:.1}", i as f64 / 10.0);
                    let mat = *m.get(&key).ok_or_else(|| fail(format!("{name}: severity {key} absent")))?;
                    for (r, row) in mat.iter().enumerate() {
                        let sum: f64 = row.iter().sum();
                        if !row.iter().all(|v| v.is_finite()) || (sum - 1.0).abs() > 1e-3 {
                            return Err(fail(format!("{name} {key} row {r} sums to {sum}")));
                        }
                    }
                    if i == 0 && mat != IDENTITY {
                        return Err(fail(format!("{name} 0.0 is not the identity")));
                    }
                    Ok(mat)
                })
                .collect()
        };
        let matrices = [
            steps("deuteranomaly", &raw.deuteranomaly)?,
            steps("protanomaly", &raw.protanomaly)?,
            steps("tritanomaly", &raw.tritanomaly)?,
        ];
        Ok(Self { version: raw.version, matrices, digest: digest(text) })
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_CVD, "builtin").expect("built-in CVD table is valid")
    }

    /// Matrix for the tabulated step nearest to `severity`.
    pub fn matrix(&self, kind: CvdKind, severity: f64) -> &Matrix3 {
        let step = (severity.clamp(0.0, 1.0) * 10.0).round() as usize;
        &self.matrices[kind.index()][step]
    }
}

pub const IDENTITY: Matrix3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct WaveEntry {
    pub name: String,
    pub rgb: [u8; 3],
    pub rating: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveTable {
    pub version: String,
    pub entries: Vec<WaveEntry>,
    pub digest: String,
}

impl WaveTable {
    pub const LEN: usize = 32;

    pub fn parse(text: &str, source_name: &str) -> Result<Self, TableError> {
        #[derive(Deserialize)]
        struct Raw {
            version: String,
            colors: Vec<WaveEntry>,
        }
        let fail = |reason: String| TableError::MissingWaveData { source_name: source_name.to_string(), reason };
        let raw: Raw = toml::from_str(text).map_err(|e| fail(e.to_string()))?;
        if raw.colors.len() != Self::LEN {
            return Err(fail(format!("expected {} colours, found {}", Self::LEN, raw.colors.len())));
        }
        if raw.colors.iter().any(|c| !c.rating.is_finite()) {
            return Err(fail("non-finite rating".into()));
        }
        let table = Self { version: raw.version, entries: raw.colors, digest: digest(text) };
        let (lo, hi) = table.rating_range();
        if hi.is_nan() || lo.is_nan() || hi <= lo {
            return Err(fail("ratings span no range".into()));
        }
        Ok(table)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_WAVE, "builtin").expect("built-in WAVE table is valid")
    }

    pub fn rating_range(&self) -> (f64, f64) {
        self.entries.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.rating), hi.max(e.rating)))
    }

    /// First entry holding the highest rating.
    pub fn best(&self) -> &WaveEntry {
        self.entries.iter().reduce(|a, b| if b.rating > a.rating { b } else { a }).expect("non-empty")
    }

    /// First entry holding the lowest rating.
    pub fn worst(&self) -> &WaveEntry {
        self.entries.iter().reduce(|a, b| if b.rating < a.rating { b } else { a }).expect("non-empty")
    }
}

/// Both tables plus where they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct DataTables {
    pub cvd: CvdMatrixTable,
    pub wave: WaveTable,
}

impl DataTables {
    pub fn builtin() -> Self {
        Self { cvd: CvdMatrixTable::builtin(), wave: WaveTable::builtin() }
    }

    pub fn load_dir(dir: &Path) -> Result<Self, TableError> {
        let read = |name: &str| -> Result<String, (PathBuf, String)> {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| (p, e.to_string()))
        };
        let cvd_text = read(CVD_FILE).map_err(|(p, reason)| TableError::MissingMatrixData {
            source_name: p.display().to_string(),
            reason,
        })?;
        let cvd = CvdMatrixTable::parse(&cvd_text, &dir.join(CVD_FILE).display().to_string())?;
        let wave_text = read(WAVE_FILE).map_err(|(p, reason)| TableError::MissingWaveData {
            source_name: p.display().to_string(),
            reason,
        })?;
        let wave = WaveTable::parse(&wave_text, &dir.join(WAVE_FILE).display().to_string())?;
        Ok(Self { cvd, wave })
    }

    /// Tables from `VIZQM_DATA_DIR` when set, otherwise the built-in copies.
    pub fn from_env() -> Result<Self, TableError> {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::load_dir(Path::new(&dir)),
            _ => Ok(Self::builtin()),
        }
    }

    /// Identifies the exact table contents, for config fingerprints.
    pub fn version_tag(&self) -> String {
        format!("{}:{};{}:{}", self.cvd.version, self.cvd.digest, self.wave.version, self.wave.digest)
    }
}

fn digest(text: &str) -> String {
    let d = Sha256::digest(text.as_bytes());
    d.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
