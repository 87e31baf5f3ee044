//! Minimal raster drawing: rectangles, discs, lines and 8x8 bitmap text.

use font8x8::legacy::BASIC_LEGACY;

use crate::raster::ImageRgb;

pub const GLYPH: usize = 8;

pub fn fill_rect(img: &mut ImageRgb, x0: usize, y0: usize, w: usize, h: usize, rgb: [u8; 3]) {
    for y in y0..(y0 + h).min(img.height()) {
        for x in x0..(x0 + w).min(img.width()) {
            img.set_pixel(x, y, rgb);
        }
    }
}

pub fn fill_disc(img: &mut ImageRgb, cx: f64, cy: f64, r: f64, rgb: [u8; 3]) {
    let y0 = (cy - r).floor().max(0.0) as usize;
    let x0 = (cx - r).floor().max(0.0) as usize;
    for y in y0..=((cy + r).ceil() as usize).min(img.height() - 1) {
        for x in x0..=((cx + r).ceil() as usize).min(img.width() - 1) {
            if in_disc(x, y, cx, cy, r) {
                img.set_pixel(x, y, rgb);
            }
        }
    }
}

#[inline]
pub fn in_disc(x: usize, y: usize, cx: f64, cy: f64, r: f64) -> bool {
    let (dx, dy) = (x as f64 - cx, y as f64 - cy);
    dx * dx + dy * dy <= r * r
}

/// One-pixel line, Bresenham.
pub fn line(img: &mut ImageRgb, from: (i64, i64), to: (i64, i64), rgb: [u8; 3]) {
    let (mut x, mut y) = from;
    let dx = (to.0 - x).abs();
    let dy = -(to.1 - y).abs();
    let sx = if x < to.0 { 1 } else { -1 };
    let sy = if y < to.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x >= 0 && y >= 0 && (x as usize) < img.width() && (y as usize) < img.height() {
            img.set_pixel(x as usize, y as usize, rgb);
        }
        if (x, y) == to {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

pub fn vline(img: &mut ImageRgb, x: usize, y0: usize, y1: usize, rgb: [u8; 3]) {
    if x < img.width() {
        for y in y0..=y1.min(img.height() - 1) {
            img.set_pixel(x, y, rgb);
        }
    }
}

/// Pixel width of `text` at integer `scale`.
pub fn text_width(text: &str, scale: usize) -> usize {
    text.chars().count() * GLYPH * scale
}

/// Draws ASCII text with its top-left corner at `(x, y)`; other characters render as `?`.
pub fn text(img: &mut ImageRgb, x: usize, y: usize, s: &str, scale: usize, rgb: [u8; 3]) {
    for (i, ch) in s.chars().enumerate() {
        let code = if ch.is_ascii() { ch as usize } else { '?' as usize };
        let glyph = BASIC_LEGACY[code];
        let gx = x + i * GLYPH * scale;
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..GLYPH {
                if bits & (1 << col) != 0 {
                    fill_rect(img, gx + col * scale, y + row * scale, scale, scale, rgb);
                }
            }
        }
    }
}
