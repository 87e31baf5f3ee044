//! Colour-aware edge detection and the edge-congestion metric.
//!
//! Edges come from a Canny detector run on each RGB channel separately and
//! unioned. Congestion flags every edge pixel that has a pixel of a
//! *different* 8-connected edge component within a square window of
//! radius `congestion_distance`.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::config::AnalysisConfig;
use crate::filter::{gaussian_blur, sobel};
use crate::raster::{ImageGray, ImageRgb, Plane};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
    pub channel_masks: [Vec<bool>; 3],
}

impl EdgeMap {
    /// Builds a map from a single mask (all three channel masks set to it).
    pub fn from_mask(width: usize, height: usize, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), width * height);
        Self { width, height, channel_masks: [mask.clone(), mask.clone(), mask.clone()], mask }
    }

    pub fn edge_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn overlay(&self) -> ImageGray {
        ImageGray::from_mask(self.width, self.height, &self.mask)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CongestionResult {
    pub congested: Vec<bool>,
    /// Congested edge pixels over all edge pixels; 0 for an edge-free map.
    pub score: f64,
    pub edge_count: usize,
    pub congested_count: usize,
    pub overlay: ImageGray,
}

/// Canny detector on one plane: blur, Sobel, non-maximum suppression,
/// double-threshold hysteresis with 8-connectivity.
pub fn canny<T: Scalar>(p: &Plane<T>, sigma: f64, low: f64, high: f64) -> Vec<bool> {
    let (w, h) = (p.width, p.height);
    let blurred = gaussian_blur(p, sigma);
    let (gx, gy) = sobel(&blurred);
    let mag = gx.zip_map(&gy, |a, b| (a * a + b * b).sqrt());

    let at = |x: isize, y: isize| -> T {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            T::zero()
        } else {
            mag.get(x as usize, y as usize)
        }
    };

    let mut thin = vec![T::zero(); w * h];
    for y in 0..h {
        for x in 0..w {
            let m = mag.get(x, y);
            if m <= T::zero() {
                continue;
            }
            let mut angle = gy.get(x, y).as_f64().atan2(gx.get(x, y).as_f64()).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (dx, dy) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let before = at(xi - dx, yi - dy);
            let after = at(xi + dx, yi + dy);
            // Ties along a plateau keep the pixel on the positive side only.
            if m >= before && m > after {
                thin[y * w + x] = m;
            }
        }
    }

    let low = T::lit(low);
    let high = T::lit(high);
    let mut out = vec![false; w * h];
    let mut queue = VecDeque::new();
    for (i, &v) in thin.iter().enumerate() {
        if v >= high && v > T::zero() {
            out[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for (nx, ny) in neighbours8(x, y, w, h) {
            let j = ny * w + nx;
            if !out[j] && thin[j] >= low && thin[j] > T::zero() {
                out[j] = true;
                queue.push_back(j);
            }
        }
    }
    out
}

fn neighbours8(x: isize, y: isize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    (-1..=1isize)
        .flat_map(move |dy| (-1..=1isize).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| dx != 0 || dy != 0)
        .map(move |(dx, dy)| (x + dx, y + dy))
        .filter(move |&(nx, ny)| nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize)
        .map(|(nx, ny)| (nx as usize, ny as usize))
}

pub fn detect_edges(img: &ImageRgb, cfg: &AnalysisConfig) -> EdgeMap {
    detect_edges_with::<f32>(img, cfg)
}

/// [`detect_edges`] with an explicit working precision.
pub fn detect_edges_with<T: Scalar>(img: &ImageRgb, cfg: &AnalysisConfig) -> EdgeMap {
    let masks: Vec<Vec<bool>> = (0..3)
        .into_par_iter()
        .map(|c| canny(&img.channel::<T>(c), cfg.canny_sigma, cfg.canny_low, cfg.canny_high))
        .collect();
    let mask = (0..img.pixel_count()).map(|i| masks[0][i] || masks[1][i] || masks[2][i]).collect();
    let [r, g, b]: [Vec<bool>; 3] = masks.try_into().expect("three channels");
    EdgeMap { width: img.width(), height: img.height(), mask, channel_masks: [r, g, b] }
}

/// 8-connected component labels; 0 marks non-edge pixels, components count from 1.
pub fn label_components(mask: &[bool], width: usize, height: usize) -> (Vec<u32>, u32) {
    let mut labels = vec![0u32; mask.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % width) as isize, (i / width) as isize);
            for (nx, ny) in neighbours8(x, y, width, height) {
                let j = ny * width + nx;
                if mask[j] && labels[j] == 0 {
                    labels[j] = next;
                    stack.push(j);
                }
            }
        }
    }
    (labels, next)
}

/// Square-window extremum filter, separable and exact.
fn window_extreme(values: &[u32], width: usize, height: usize, radius: usize, pick: fn(u32, u32) -> u32) -> Vec<u32> {
    let mut horiz = vec![0u32; values.len()];
    for y in 0..height {
        let row = &values[y * width..(y + 1) * width];
        for x in 0..width {
            let lo = x.saturating_sub(radius);
            let hi = (x + radius).min(width - 1);
            horiz[y * width + x] = row[lo..=hi].iter().copied().reduce(pick).expect("non-empty window");
        }
    }
    let mut out = vec![0u32; values.len()];
    for x in 0..width {
        for y in 0..height {
            let lo = y.saturating_sub(radius);
            let hi = (y + radius).min(height - 1);
            out[y * width + x] = (lo..=hi).map(|yy| horiz[yy * width + x]).reduce(pick).expect("non-empty window");
        }
    }
    out
}

pub fn edge_congestion(edges: &EdgeMap, cfg: &AnalysisConfig) -> CongestionResult {
    let (w, h) = (edges.width, edges.height);
    let (labels, _) = label_components(&edges.mask, w, h);
    let d = cfg.congestion_distance;
    let for_min: Vec<u32> = labels.iter().map(|&l| if l == 0 { u32::MAX } else { l }).collect();
    let win_min = window_extreme(&for_min, w, h, d, u32::min);
    let win_max = window_extreme(&labels, w, h, d, u32::max);

    let congested: Vec<bool> = (0..labels.len())
        .map(|i| labels[i] != 0 && (win_min[i] != labels[i] || win_max[i] != labels[i]))
        .collect();
    let edge_count = edges.edge_count();
    let congested_count = congested.iter().filter(|&&c| c).count();
    let score = if edge_count == 0 { 0.0 } else { congested_count as f64 / edge_count as f64 };
    let overlay = ImageGray::from_mask(w, h, &congested);
    CongestionResult { congested, score, edge_count, congested_count, overlay }
}
