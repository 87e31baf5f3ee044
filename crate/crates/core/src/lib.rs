//! Visualization quality metrics.
//!
//! Computes edge congestion, Itti-Koch saliency, colour-vision-deficiency
//! simulations, WAVE colour preference and Hasler-Süsstrunk colourfulness on
//! a visualization screenshot, ranks the scores against a persistent corpus
//! of earlier submissions and assembles a feedback report.
//!
//! The numeric kernels are generic over [`Scalar`] (`f32`/`f64`); the
//! aliases below fix the precisions the pipeline uses.

pub mod bundle;
pub mod cli;
pub mod color;
pub mod config;
pub mod corpus;
pub mod draw;
pub mod edges;
pub mod filter;
pub mod pipeline;
pub mod plot;
pub mod raster;
pub mod report;
pub mod saliency;
pub mod scalar;
pub mod scene;
pub mod selftest;
pub mod tables;

pub use color::{colorfulness, monochrome_view, simulate_cvd, wave_score, ColorScores, CvdKind};
pub use config::AnalysisConfig;
pub use edges::{detect_edges, edge_congestion, CongestionResult, EdgeMap};
pub use raster::{load_image, resize_to_analysis, srgb_decode, srgb_encode, to_grayscale, ImageGray, ImageRgb, Plane};
pub use saliency::{compute_saliency, saliency_score, SaliencyScore};
pub use scalar::Scalar;
pub use tables::{CvdMatrixTable, DataTables, WaveTable};

/// Precision of reported scores and statistics.
pub type Real = f64;
/// Precision of the saliency pyramid and edge filtering.
pub type Feature = f32;
pub type FeaturePlane = Plane<Feature>;
pub type SaliencyMap = saliency::SaliencyMap<Feature>;
pub type LinearRgb = raster::LinearRgb<Real>;
