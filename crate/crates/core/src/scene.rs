//! Procedural test image: coloured discs, black text and a patch of thin
//! clutter lines on white, with the region geometry needed to score it.

use crate::draw;
use crate::raster::ImageRgb;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.w && y < self.y + self.h
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Disc {
    pub name: &'static str,
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub rgb: [u8; 3],
}

impl Disc {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        draw::in_disc(x, y, self.cx, self.cy, self.r)
    }
}

#[derive(Clone, Debug)]
pub struct TestScene {
    pub image: ImageRgb,
    pub discs: Vec<Disc>,
    pub text: Vec<Rect>,
    pub clutter: Rect,
}

impl TestScene {
    pub fn in_any_disc(&self, x: usize, y: usize) -> bool {
        self.discs.iter().any(|d| d.contains(x, y))
    }

    pub fn in_text(&self, x: usize, y: usize) -> bool {
        self.text.iter().any(|r| r.contains(x, y))
    }

    pub fn in_clutter(&self, x: usize, y: usize) -> bool {
        self.clutter.contains(x, y)
    }
}

pub const SCENE_WIDTH: usize = 800;
pub const SCENE_HEIGHT: usize = 600;

pub fn generate() -> TestScene {
    let mut img = ImageRgb::filled(SCENE_WIDTH, SCENE_HEIGHT, [255, 255, 255]);

    let discs = vec![
        Disc { name: "red", cx: 120.0, cy: 110.0, r: 50.0, rgb: [220, 30, 30] },
        Disc { name: "green", cx: 300.0, cy: 110.0, r: 50.0, rgb: [30, 160, 50] },
        Disc { name: "blue", cx: 480.0, cy: 110.0, r: 50.0, rgb: [40, 60, 210] },
        Disc { name: "yellow", cx: 660.0, cy: 110.0, r: 50.0, rgb: [250, 225, 30] },
    ];
    for d in &discs {
        draw::fill_disc(&mut img, d.cx, d.cy, d.r, d.rgb);
    }

    let lines = ["Visual quality", "of charts", "and graphs"];
    let scale = 3;
    let mut text = Vec::new();
    for (i, s) in lines.iter().enumerate() {
        let (x, y) = (40, 250 + i * 40);
        draw::text(&mut img, x, y, s, scale, [0, 0, 0]);
        text.push(Rect { x, y, w: draw::text_width(s, scale), h: draw::GLYPH * scale });
    }

    let clutter = Rect { x: 440, y: 250, w: 320, h: 300 };
    // Non-touching hatching in three blocks, so every stroke is its own edge.
    let grey = [110, 110, 110];
    let (cx0, cy0) = (clutter.x as i64, clutter.y as i64);
    for k in (0..150i64).step_by(6) {
        draw::line(&mut img, (cx0, cy0 + k), (cx0 + 150, cy0 + k + 20), grey);
    }
    for k in (0..150i64).step_by(6) {
        draw::line(&mut img, (cx0 + 170 + k, cy0), (cx0 + 170 + k + 20, cy0 + 140), grey);
    }
    for k in (0..300i64).step_by(7) {
        draw::line(&mut img, (cx0 + k, cy0 + 190), (cx0 + k + 30, cy0 + 290), grey);
    }

    TestScene { image: img, discs, text, clutter }
}
