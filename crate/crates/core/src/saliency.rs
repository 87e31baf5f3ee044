//! Itti-Koch bottom-up saliency and the thresholded salient-area score.
//!
//! Intensity, colour-opponency (RG, BY) and Gabor orientation features are
//! extracted on a 9-level dyadic Gaussian pyramid, contrasted with
//! center-surround differences (c in {2,3,4}, s = c + {3,4}), normalized,
//! summed at level 4 and combined into one map.

use crate::config::AnalysisConfig;
use crate::filter::{convolve2d, gaussian_pyramid, resize_plane};
use crate::raster::{resize_bilinear, ImageRgb, Plane};
use crate::scalar::{quantize_u8, Scalar};

pub const PYRAMID_LEVELS: usize = 9;
pub const CENTER_LEVELS: [usize; 3] = [2, 3, 4];
pub const SURROUND_DELTAS: [usize; 2] = [3, 4];
const SUM_LEVEL: usize = 4;
const ORIENTATIONS_DEG: [f64; 4] = [0.0, 45.0, 90.0, 135.0];
/// Shorter side below which the input is upscaled before analysis.
pub const MIN_ANALYSIS_SIDE: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaborParams {
    pub wavelength: f64,
    pub sigma: f64,
    pub aspect: f64,
    pub size: usize,
}

impl Default for GaborParams {
    fn default() -> Self {
        Self { wavelength: 7.0, sigma: 2.8, aspect: 1.0, size: 9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap<T> {
    pub width: usize,
    pub height: usize,
    /// Per-pixel salience, min-max normalized to `0..=255`.
    pub values: Vec<u8>,
    /// Normalized conspicuity maps at the summation level.
    pub intensity: Plane<T>,
    pub color: Plane<T>,
    pub orientation: Plane<T>,
    /// Set when the input carried no contrast; `values` is then all zero.
    pub degenerate: bool,
}

impl<T: Scalar> SaliencyMap<T> {
    pub fn to_image(&self) -> crate::raster::ImageGray {
        crate::raster::ImageGray::new(self.width, self.height, self.values.clone())
            .expect("map dimensions consistent")
    }

    /// Mean salience over the pixels selected by `region`.
    pub fn region_mean(&self, region: impl Fn(usize, usize) -> bool) -> f64 {
        let mut sum = 0u64;
        let mut n = 0u64;
        for y in 0..self.height {
            for x in 0..self.width {
                if region(x, y) {
                    sum += u64::from(self.values[y * self.width + x]);
                    n += 1;
                }
            }
        }
        if n == 0 {
            0.0
        } else {
            sum as f64 / n as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyScore {
    /// Fraction of pixels at or above `threshold`.
    pub score: f64,
    pub threshold: u8,
    pub mask: Vec<bool>,
}

pub fn saliency_score<T: Scalar>(map: &SaliencyMap<T>, cfg: &AnalysisConfig) -> SaliencyScore {
    let threshold = cfg.saliency_threshold;
    let mask: Vec<bool> = map.values.iter().map(|&v| v >= threshold).collect();
    let count = mask.iter().filter(|&&m| m).count();
    SaliencyScore { score: count as f64 / map.values.len() as f64, threshold, mask }
}

pub fn compute_saliency(img: &ImageRgb) -> SaliencyMap<f32> {
    compute_saliency_with::<f32>(img, &GaborParams::default())
}

/// Real part of a Gabor filter, made zero-mean so flat regions give no response.
pub fn gabor_kernel<T: Scalar>(params: &GaborParams, theta_deg: f64) -> Plane<T> {
    let n = params.size;
    let r = (n / 2) as f64;
    let theta = theta_deg.to_radians();
    let (s, c) = theta.sin_cos();
    let mut raw = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let (dx, dy) = (x as f64 - r, y as f64 - r);
            let xr = dx * c + dy * s;
            let yr = -dx * s + dy * c;
            let env = (-(xr * xr + params.aspect * params.aspect * yr * yr) / (2.0 * params.sigma * params.sigma)).exp();
            raw.push(env * (2.0 * std::f64::consts::PI * xr / params.wavelength).cos());
        }
    }
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    Plane::from_vec(n, n, raw.into_iter().map(|v| T::lit(v - mean)).collect())
}

/// Map normalization: scale to `[0, 1]` by the maximum, then weight by
/// `(1 - m)^2` where `m` is the mean of the 8x8 block maxima other than the
/// global maximum.
pub fn normalize_map<T: Scalar>(p: &Plane<T>) -> Plane<T> {
    let max = p.max_value();
    if max.is_nan() || max <= T::lit(1e-6) {
        return Plane::zeros(p.width, p.height);
    }
    let scaled = p.map(|v| (v / max).max(T::zero()));
    let block = 8;
    let mut maxima = Vec::new();
    for by in (0..p.height).step_by(block) {
        for bx in (0..p.width).step_by(block) {
            let mut m = T::zero();
            for y in by..(by + block).min(p.height) {
                for x in bx..(bx + block).min(p.width) {
                    m = m.max(scaled.get(x, y));
                }
            }
            maxima.push(m);
        }
    }
    // Drop one instance of the global maximum.
    let gi = maxima
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > maxima[best] { i } else { best });
    maxima.swap_remove(gi);
    let mean = if maxima.is_empty() {
        T::zero()
    } else {
        maxima.iter().copied().sum::<T>() / T::from_len(maxima.len())
    };
    let weight = (T::one() - mean) * (T::one() - mean);
    scaled.map(|v| v * weight)
}

fn center_surround<T: Scalar>(pyr: &[Plane<T>]) -> Vec<Plane<T>> {
    let mut out = Vec::with_capacity(6);
    for &c in &CENTER_LEVELS {
        for &d in &SURROUND_DELTAS {
            let center = &pyr[c];
            let surround = resize_plane(&pyr[c + d], center.width, center.height);
            out.push(center.zip_map(&surround, |a, b| (a - b).abs()));
        }
    }
    out
}

/// Normalizes each map and sums them at the summation level's resolution.
fn across_scale_sum<T: Scalar>(maps: &[Plane<T>], width: usize, height: usize) -> Plane<T> {
    let mut acc = Plane::zeros(width, height);
    for m in maps {
        let n = resize_plane(&normalize_map(m), width, height);
        acc = acc.zip_map(&n, |a, b| a + b);
    }
    acc
}

struct ColorPyramids<T> {
    rg: Vec<Plane<T>>,
    by: Vec<Plane<T>>,
}

fn color_pyramids<T: Scalar>(r: &[Plane<T>], g: &[Plane<T>], b: &[Plane<T>], intensity: &[Plane<T>]) -> ColorPyramids<T> {
    // Hue is undefined in dark regions: only normalize where I > max(I)/10.
    let cutoff = intensity[0].max_value() / T::lit(10.0);
    let half = T::lit(0.5);
    let zero = T::zero();
    let mut rg = Vec::with_capacity(PYRAMID_LEVELS);
    let mut by = Vec::with_capacity(PYRAMID_LEVELS);
    for lvl in 0..PYRAMID_LEVELS {
        let n = intensity[lvl].data.len();
        let mut rg_l = Vec::with_capacity(n);
        let mut by_l = Vec::with_capacity(n);
        for i in 0..n {
            let li = intensity[lvl].data[i];
            if li <= cutoff || li <= zero {
                rg_l.push(zero);
                by_l.push(zero);
                continue;
            }
            let (rn, gn, bn) = (r[lvl].data[i] / li, g[lvl].data[i] / li, b[lvl].data[i] / li);
            let big_r = (rn - (gn + bn) * half).max(zero);
            let big_g = (gn - (rn + bn) * half).max(zero);
            let big_b = (bn - (rn + gn) * half).max(zero);
            let big_y = ((rn + gn) * half - (rn - gn).abs() * half - bn).max(zero);
            rg_l.push(big_r - big_g);
            by_l.push(big_b - big_y);
        }
        let (w, h) = (intensity[lvl].width, intensity[lvl].height);
        rg.push(Plane::from_vec(w, h, rg_l));
        by.push(Plane::from_vec(w, h, by_l));
    }
    ColorPyramids { rg, by }
}

fn is_constant(img: &ImageRgb) -> bool {
    let first = img.pixel(0, 0);
    img.pixels().all(|p| p == first)
}

/// Saliency with an explicit working precision and Gabor bank.
pub fn compute_saliency_with<T: Scalar>(img: &ImageRgb, gabor: &GaborParams) -> SaliencyMap<T> {
    let (out_w, out_h) = (img.width(), img.height());
    let mut work = img.clone();
    while work.width().min(work.height()) < MIN_ANALYSIS_SIDE {
        work = resize_bilinear(&work, work.width() * 2, work.height() * 2);
    }

    let scale = T::lit(1.0 / 255.0);
    let r = work.channel::<T>(0).map(|v| v * scale);
    let g = work.channel::<T>(1).map(|v| v * scale);
    let b = work.channel::<T>(2).map(|v| v * scale);
    let third = T::lit(1.0 / 3.0);
    let intensity = r.zip_map(&g, |a, b| a + b).zip_map(&b, |s, c| (s + c) * third);

    let i_pyr = gaussian_pyramid(&intensity, PYRAMID_LEVELS);
    let (sw, sh) = (i_pyr[SUM_LEVEL].width, i_pyr[SUM_LEVEL].height);

    let (int_bar, (col_bar, ori_bar)) = rayon::join(
        || across_scale_sum(&center_surround(&i_pyr), sw, sh),
        || {
            rayon::join(
                || {
                    let (r_pyr, (g_pyr, b_pyr)) = rayon::join(
                        || gaussian_pyramid(&r, PYRAMID_LEVELS),
                        || rayon::join(|| gaussian_pyramid(&g, PYRAMID_LEVELS), || gaussian_pyramid(&b, PYRAMID_LEVELS)),
                    );
                    let cp = color_pyramids(&r_pyr, &g_pyr, &b_pyr, &i_pyr);
                    let rg = across_scale_sum(&center_surround(&cp.rg), sw, sh);
                    let by = across_scale_sum(&center_surround(&cp.by), sw, sh);
                    rg.zip_map(&by, |a, b| a + b)
                },
                || {
                    let mut acc = Plane::zeros(sw, sh);
                    for &theta in &ORIENTATIONS_DEG {
                        let kernel = gabor_kernel::<T>(gabor, theta);
                        let o_pyr: Vec<Plane<T>> = i_pyr
                            .iter()
                            .enumerate()
                            .map(|(lvl, p)| if lvl >= CENTER_LEVELS[0] { convolve2d(p, &kernel).map(|v| v.abs()) } else { Plane::zeros(1, 1) })
                            .collect();
                        let summed = across_scale_sum(&center_surround(&o_pyr), sw, sh);
                        acc = acc.zip_map(&normalize_map(&summed), |a, b| a + b);
                    }
                    acc
                },
            )
        },
    );

    let intensity_c = normalize_map(&int_bar);
    let color_c = normalize_map(&col_bar);
    let orientation_c = normalize_map(&ori_bar);
    let combined = intensity_c
        .zip_map(&color_c, |a, b| a + b)
        .zip_map(&orientation_c, |s, c| s * third + c * third);

    let full = resize_plane(&combined, out_w, out_h);
    let (lo, hi) = (full.min_value(), full.max_value());
    let degenerate = is_constant(img) || (hi - lo).is_nan() || hi - lo <= T::lit(1e-6);
    let values = if degenerate {
        vec![0u8; out_w * out_h]
    } else {
        let span = hi - lo;
        full.data.iter().map(|&v| quantize_u8((v - lo) / span * T::lit(255.0))).collect()
    };

    SaliencyMap {
        width: out_w,
        height: out_h,
        values,
        intensity: intensity_c,
        color: color_c,
        orientation: orientation_c,
        degenerate,
    }
}
