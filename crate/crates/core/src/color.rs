//! Colour metrics: CVD simulation, monochrome view, WAVE colour preference
//! and Hasler-Süsstrunk colourfulness.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;
use crate::raster::{linear_to_srgb, srgb_to_linear, to_grayscale, ImageGray, ImageRgb};
use crate::scalar::Scalar;
use crate::tables::{CvdMatrixTable, WaveTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CvdKind {
    Deuteranomaly,
    Protanomaly,
    Tritanomaly,
}

impl CvdKind {
    pub const ALL: [CvdKind; 3] = [CvdKind::Deuteranomaly, CvdKind::Protanomaly, CvdKind::Tritanomaly];

    pub fn index(self) -> usize {
        match self {
            CvdKind::Deuteranomaly => 0,
            CvdKind::Protanomaly => 1,
            CvdKind::Tritanomaly => 2,
        }
    }

    /// Panel letter used in artifact names (`d`, `p`, `t`).
    pub fn letter(self) -> char {
        match self {
            CvdKind::Deuteranomaly => 'd',
            CvdKind::Protanomaly => 'p',
            CvdKind::Tritanomaly => 't',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CvdKind::Deuteranomaly => "Deuteranomaly",
            CvdKind::Protanomaly => "Protanomaly",
            CvdKind::Tritanomaly => "Tritanomaly",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorScores {
    /// WAVE preference, normalized to `[0, 1]`.
    pub wave: f64,
    /// Hasler-Süsstrunk colourfulness.
    pub colorfulness: f64,
}

/// Simulates a colour vision deficiency in linear light.
pub fn simulate_cvd(img: &ImageRgb, kind: CvdKind, table: &CvdMatrixTable, cfg: &AnalysisConfig) -> ImageRgb {
    let m = *table.matrix(kind, cfg.cvd_severity);
    let lut: Vec<f64> = (0..=255u8).map(srgb_to_linear::<f64>).collect();
    let data: Vec<u8> = img
        .data()
        .par_chunks(3 * img.width())
        .flat_map_iter(|row| {
            row.chunks_exact(3).flat_map(|p| {
                let lin = [lut[p[0] as usize], lut[p[1] as usize], lut[p[2] as usize]];
                let mut out = [0u8; 3];
                for (o, r) in out.iter_mut().zip(&m) {
                    *o = linear_to_srgb(r[0] * lin[0] + r[1] * lin[1] + r[2] * lin[2]);
                }
                out
            })
        })
        .collect();
    ImageRgb::new(img.width(), img.height(), data).expect("same dimensions")
}

/// Grey-scale print/fax view.
pub fn monochrome_view(img: &ImageRgb) -> ImageGray {
    to_grayscale(img)
}

/// Index of the nearest palette colour by squared RGB distance; ties go to
/// the lowest index.
pub fn nearest_wave_entry(rgb: [u8; 3], table: &WaveTable) -> usize {
    let dist = |c: [u8; 3]| -> u32 {
        (0..3).map(|i| (i32::from(rgb[i]) - i32::from(c[i])).pow(2) as u32).sum()
    };
    let mut best = 0;
    let mut best_d = u32::MAX;
    for (i, e) in table.entries.iter().enumerate() {
        let d = dist(e.rgb);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Mean palette rating over all pixels, min-max normalized by the table's
/// rating range.
///
/// Ratings are normalized per entry before averaging so uniform images of the
/// best and worst colours land exactly on 1 and 0.
pub fn wave_score(img: &ImageRgb, table: &WaveTable) -> f64 {
    let mut cache: HashMap<[u8; 3], usize> = HashMap::new();
    let mut counts = [0usize; WaveTable::LEN];
    for p in img.pixels() {
        counts[*cache.entry(p).or_insert_with(|| nearest_wave_entry(p, table))] += 1;
    }
    let (lo, hi) = table.rating_range();
    let sum: f64 = counts
        .iter()
        .zip(&table.entries)
        .filter(|(&n, _)| n > 0)
        .map(|(&n, e)| n as f64 * ((e.rating - lo) / (hi - lo)))
        .sum();
    (sum / img.pixel_count() as f64).clamp(0.0, 1.0)
}

pub fn colorfulness(img: &ImageRgb) -> f64 {
    colorfulness_with::<f64>(img)
}

/// Hasler-Süsstrunk colourfulness on gamma-encoded 8-bit values:
/// `sqrt(var_rg + var_yb) + 0.3 * sqrt(mean_rg^2 + mean_yb^2)`.
pub fn colorfulness_with<T: Scalar>(img: &ImageRgb) -> T {
    let half = T::lit(0.5);
    let opp = |p: [u8; 3]| -> (T, T) {
        let (r, g, b) = (T::from_byte(p[0]), T::from_byte(p[1]), T::from_byte(p[2]));
        (r - g, (r + g) * half - b)
    };
    let n = T::from_len(img.pixel_count());
    let (sum_rg, sum_yb) = img.pixels().map(opp).fold((T::zero(), T::zero()), |(a, b), (x, y)| (a + x, b + y));
    let (mu_rg, mu_yb) = (sum_rg / n, sum_yb / n);
    let (ss_rg, ss_yb) = img.pixels().map(opp).fold((T::zero(), T::zero()), |(a, b), (x, y)| {
        (a + (x - mu_rg) * (x - mu_rg), b + (y - mu_yb) * (y - mu_yb))
    });
    let (var_rg, var_yb) = (ss_rg / n, ss_yb / n);
    (var_rg + var_yb).sqrt() + T::lit(0.3) * (mu_rg * mu_rg + mu_yb * mu_yb).sqrt()
}

pub fn color_scores(img: &ImageRgb, table: &WaveTable) -> ColorScores {
    ColorScores { wave: wave_score(img, table), colorfulness: colorfulness(img) }
}
