//! Ranking histogram with the submission marked by a green vertical line.

use crate::corpus::RankingResult;
use crate::draw;
use crate::raster::ImageRgb;

pub const PLOT_WIDTH: usize = 640;
pub const PLOT_HEIGHT: usize = 240;
pub const MARKER_GREEN: [u8; 3] = [0, 255, 0];
const BAR_GREY: [u8; 3] = [160, 160, 160];
const INK: [u8; 3] = [0, 0, 0];
const WHITE: [u8; 3] = [255, 255, 255];

/// Plot area in image coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlotFrame {
    pub left: usize,
    pub top: usize,
    pub width: usize,
    pub height: usize,
}

pub const FRAME: PlotFrame = PlotFrame { left: 48, top: 24, width: 576, height: 176 };

impl PlotFrame {
    pub fn baseline(&self) -> usize {
        self.top + self.height
    }

    /// Column for value `v` on an axis spanning `[lo, hi]`.
    pub fn x_of(&self, v: f64, lo: f64, hi: f64) -> usize {
        let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
        self.left + (t * (self.width - 1) as f64).round() as usize
    }
}

pub fn render_ranking(result: &RankingResult) -> ImageRgb {
    let f = FRAME;
    let mut img = ImageRgb::filled(PLOT_WIDTH, PLOT_HEIGHT, WHITE);
    let h = &result.histogram;
    let (lo, hi) = (h.edges[0], *h.edges.last().expect("at least two edges"));

    if result.corpus_size == 0 {
        let msg = "no corpus data";
        let x = f.left + (f.width - draw::text_width(msg, 2)) / 2;
        draw::text(&mut img, x, f.top + f.height / 2 - 8, msg, 2, INK);
    } else {
        let peak = h.counts.iter().copied().max().unwrap_or(0).max(1);
        for (i, &count) in h.counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let x0 = f.x_of(h.edges[i], lo, hi);
            let x1 = f.x_of(h.edges[i + 1], lo, hi);
            let bar_h = ((count as f64 / peak as f64) * f.height as f64).round() as usize;
            let width = x1.saturating_sub(x0).max(2) - 1;
            draw::fill_rect(&mut img, x0, f.baseline() - bar_h, width.max(1), bar_h, BAR_GREY);
        }
    }

    // Axes.
    draw::fill_rect(&mut img, f.left, f.baseline(), f.width, 1, INK);
    draw::fill_rect(&mut img, f.left - 1, f.top, 1, f.height + 1, INK);

    let marker = f.x_of(result.score, lo, hi);
    draw::vline(&mut img, marker, f.top, f.baseline() - 1, MARKER_GREEN);

    let lo_label = format!("{lo:.4}");
    let hi_label = format!("{hi:.4}");
    draw::text(&mut img, f.left, f.baseline() + 4, &lo_label, 1, INK);
    draw::text(&mut img, f.left + f.width - draw::text_width(&hi_label, 1), f.baseline() + 4, &hi_label, 1, INK);

    let caption = format!("{}  (corpus n = {})", result.metric, result.corpus_size);
    let cx = f.left + f.width.saturating_sub(draw::text_width(&caption, 1)) / 2;
    draw::text(&mut img, cx, PLOT_HEIGHT - 14, &caption, 1, INK);

    let title = match result.percentile {
        Some(p) => format!("score {:.4}  percentile {:.1}%", result.score, p * 100.0),
        None => format!("score {:.4}  percentile n/a", result.score),
    };
    draw::text(&mut img, f.left, 6, &title, 1, INK);
    img
}
