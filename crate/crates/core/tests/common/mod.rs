//! Independent reference implementations used by the integration tests.
//!
//! These are deliberately naive: dense loops, no shared helpers with the
//! library beyond the public data types.

#![allow(dead_code)]

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vizqm::{EdgeMap, ImageRgb};

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flood-fill component ids, computed without the library's labeller.
fn components(mask: &[bool], w: usize, h: usize) -> Vec<usize> {
    let mut comp = vec![usize::MAX; mask.len()];
    let mut next = 0;
    for s in 0..mask.len() {
        if !mask[s] || comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut q = VecDeque::from([s]);
        while let Some(i) = q.pop_front() {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask[j] && comp[j] == usize::MAX {
                        comp[j] = next;
                        q.push_back(j);
                    }
                }
            }
        }
        next += 1;
    }
    comp
}

/// All-pairs congestion: an edge pixel is congested when some edge pixel of
/// another component lies within Chebyshev distance `d`.
pub fn congestion_oracle(mask: &[bool], w: usize, h: usize, d: usize) -> Vec<bool> {
    let comp = components(mask, w, h);
    let edges: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let mut out = vec![false; mask.len()];
    for &a in &edges {
        let (ax, ay) = (a % w, a / w);
        out[a] = edges.iter().any(|&b| {
            let (bx, by) = (b % w, b / w);
            comp[a] != comp[b] && ax.abs_diff(bx).max(ay.abs_diff(by)) <= d
        });
    }
    out
}

/// Random sparse edge map mixing speckle and short strokes.
pub fn random_edge_map(rng: &mut ChaCha8Rng) -> EdgeMap {
    let w = rng.gen_range(1..=64);
    let h = rng.gen_range(1..=64);
    let density: f64 = rng.gen_range(0.0..0.25);
    let mut mask: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(density)).collect();
    for _ in 0..rng.gen_range(0..6) {
        let (mut x, mut y) = (rng.gen_range(0..w) as i64, rng.gen_range(0..h) as i64);
        let (dx, dy) = (rng.gen_range(-1..=1), rng.gen_range(-1..=1));
        for _ in 0..rng.gen_range(1..40) {
            if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                break;
            }
            mask[y as usize * w + x as usize] = true;
            x += dx;
            y += dy;
        }
    }
    EdgeMap::from_mask(w, h, mask)
}

/// Sort-and-count percentile.
pub fn percentile_oracle(corpus: &[f64], score: f64) -> Option<f64> {
    if corpus.is_empty() {
        return None;
    }
    let mut v = corpus.to_vec();
    v.sort_by(f64::total_cmp);
    let below = v.partition_point(|&x| x < score);
    Some(below as f64 / v.len() as f64)
}

/// Textbook Canny on one channel in f64 with dense 2-D filtering.
pub fn canny_oracle(img: &ImageRgb, c: usize, sigma: f64, low: f64, high: f64) -> Vec<bool> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let px = |x: i64, y: i64| img.pixel(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize)[c] as f64;
    let r = (3.0 * sigma).ceil() as i64;
    let mut kern = Vec::new();
    for j in -r..=r {
        for i in -r..=r {
            kern.push((i, j, (-((i * i + j * j) as f64) / (2.0 * sigma * sigma)).exp()));
        }
    }
    let ksum: f64 = kern.iter().map(|k| k.2).sum();
    let mut blur = vec![0.0; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            blur[(y * w + x) as usize] = kern.iter().map(|&(i, j, k)| k * px(x + i, y + j)).sum::<f64>() / ksum;
        }
    }
    let b = |x: i64, y: i64| blur[(y.clamp(0, h - 1) * w + x.clamp(0, w - 1)) as usize];
    let mut gx = vec![0.0; blur.len()];
    let mut gy = vec![0.0; blur.len()];
    let mut mag = vec![0.0; blur.len()];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            gx[i] = b(x + 1, y - 1) + 2.0 * b(x + 1, y) + b(x + 1, y + 1) - b(x - 1, y - 1) - 2.0 * b(x - 1, y) - b(x - 1, y + 1);
            gy[i] = b(x - 1, y + 1) + 2.0 * b(x, y + 1) + b(x + 1, y + 1) - b(x - 1, y - 1) - 2.0 * b(x, y - 1) - b(x + 1, y - 1);
            mag[i] = gx[i].hypot(gy[i]);
        }
    }
    let m = |x: i64, y: i64| if x < 0 || y < 0 || x >= w || y >= h { 0.0 } else { mag[(y * w + x) as usize] };
    let mut thin = vec![0.0; mag.len()];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            if mag[i] <= 0.0 {
                continue;
            }
            // Sector by slope instead of by angle.
            let (ax, ay) = (gx[i].abs(), gy[i].abs());
            let t = std::f64::consts::FRAC_PI_8.tan();
            let (dx, dy) = if ay <= t * ax {
                (1, 0)
            } else if ax <= t * ay {
                (0, 1)
            } else if gx[i] * gy[i] > 0.0 {
                (1, 1)
            } else {
                (-1, 1)
            };
            if mag[i] >= m(x - dx, y - dy) && mag[i] > m(x + dx, y + dy) {
                thin[i] = mag[i];
            }
        }
    }
    let mut out: Vec<bool> = thin.iter().map(|&v| v >= high).collect();
    loop {
        let mut grew = false;
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) as usize;
                if out[i] || thin[i] < low || thin[i] <= 0.0 {
                    continue;
                }
                let touch = (-1..=1).any(|dy| {
                    (-1..=1).any(|dx| {
                        let (nx, ny) = (x + dx, y + dy);
                        nx >= 0 && ny >= 0 && nx < w && ny < h && out[(ny * w + nx) as usize]
                    })
                });
                if touch {
                    out[i] = true;
                    grew = true;
                }
            }
        }
        if !grew {
            return out;
        }
    }
}

/// Writes `img` as a PNG and returns the path.
pub fn write_png(dir: &Path, name: &str, img: &ImageRgb) -> PathBuf {
    let p = dir.join(name);
    img.save_png(&p).unwrap();
    p
}

pub const RUBRIC_JSON: &str = r#"{"objectives": [
  {"id": "O1", "title": "Layout and clutter", "description": "Uncluttered encodings", "max_points": 10, "metrics": ["edge_congestion", "saliency"]},
  {"id": "O2", "title": "Colour", "max_points": 5, "metrics": ["wave", "colorfulness"]}
]}"#;

pub const FEEDBACK_JSON: &str = r#"{"items": [
  {"objective": "O1", "mark": 7, "comment": "Gridlines compete with the data."},
  {"objective": "O2", "mark": 4, "comment": "Palette reads well under simulation."}
], "overall": "Solid work.", "marker": "M1"}"#;

/// Every file under `dir`, relative name and bytes, sorted by name.
pub fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}
