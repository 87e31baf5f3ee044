//! Analysis parameters shared by every metric.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("invalid config: {field}: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Chebyshev distance in pixels below which two distinct edges are congested.
    pub congestion_distance: usize,
    /// 8-bit level at or above which a saliency pixel counts as salient.
    pub saliency_threshold: u8,
    /// Longest side of the analysis raster.
    pub max_dimension: usize,
    /// CVD severity in `[0, 1]`; snapped to the nearest tabulated step.
    pub cvd_severity: f64,
    pub canny_sigma: f64,
    pub canny_low: f64,
    pub canny_high: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            congestion_distance: 4,
            saliency_threshold: 64,
            max_dimension: 1280,
            cvd_severity: 1.0,
            canny_sigma: 1.0,
            canny_low: 50.0,
            canny_high: 150.0,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |field, reason: &str| Err(ConfigError { field, reason: reason.to_string() });
        if self.congestion_distance < 1 {
            return err("congestion_distance", "must be at least 1");
        }
        if self.max_dimension < 64 {
            return err("max_dimension", "must be at least 64");
        }
        if !(0.0..=1.0).contains(&self.cvd_severity) {
            return err("cvd_severity", "must lie in [0, 1]");
        }
        if !(self.canny_sigma.is_finite() && self.canny_sigma > 0.0) {
            return err("canny_sigma", "must be positive");
        }
        if !(self.canny_low >= 0.0 && self.canny_low <= self.canny_high && self.canny_high.is_finite()) {
            return err("canny_low", "thresholds must satisfy 0 <= low <= high");
        }
        Ok(())
    }

    /// Canonical JSON used for fingerprinting; field order is fixed by the struct.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
