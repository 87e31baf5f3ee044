//! Runs every metric on the generated test scene, writes the panels and
//! checks the expected qualitative behaviour.

use std::path::Path;

use crate::color::{simulate_cvd, CvdKind};
use crate::config::AnalysisConfig;
use crate::edges::{detect_edges, edge_congestion};
use crate::raster::{to_grayscale, ImageError, ImageRgb};
use crate::saliency::{compute_saliency, saliency_score};
use crate::scene::{self, TestScene};
use crate::tables::DataTables;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Characterization-only checks are reported but never fail the run.
    pub required: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct SelftestOutcome {
    pub checks: Vec<Check>,
    pub written: Vec<String>,
}

impl SelftestOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.required)
    }
}

fn mean_color(img: &ImageRgb, region: impl Fn(usize, usize) -> bool) -> [f64; 3] {
    let mut acc = [0.0; 3];
    let mut n = 0.0f64;
    for y in 0..img.height() {
        for x in 0..img.width() {
            if region(x, y) {
                let p = img.pixel(x, y);
                for c in 0..3 {
                    acc[c] += f64::from(p[c]);
                }
                n += 1.0;
            }
        }
    }
    acc.map(|v| v / n.max(1.0))
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

/// Evaluates the scene; `out_dir`, when given, receives the panels.
pub fn run(out_dir: Option<&Path>, cfg: &AnalysisConfig, tables: &DataTables) -> Result<SelftestOutcome, ImageError> {
    let scene: TestScene = scene::generate();
    let img = &scene.image;
    let mut checks = Vec::new();

    let sal = compute_saliency(img);
    let disc = sal.region_mean(|x, y| scene.in_any_disc(x, y));
    let text = sal.region_mean(|x, y| scene.in_text(x, y));
    let clutter = sal.region_mean(|x, y| scene.in_clutter(x, y));
    checks.push(Check {
        name: "saliency discs above text",
        passed: disc > text,
        required: true,
        detail: format!("disc mean {disc:.2}, text mean {text:.2}"),
    });
    checks.push(Check {
        name: "saliency text above clutter",
        passed: text > clutter,
        required: true,
        detail: format!("text mean {text:.2}, clutter mean {clutter:.2}"),
    });
    let disc_means: Vec<(&str, f64)> = scene.discs.iter().map(|d| (d.name, sal.region_mean(|x, y| d.contains(x, y)))).collect();
    let lowest = disc_means.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|d| d.0).unwrap_or("");
    checks.push(Check {
        name: "yellow disc least salient",
        passed: lowest == "yellow",
        required: false,
        detail: disc_means.iter().map(|(n, v)| format!("{n} {v:.2}")).collect::<Vec<_>>().join(", "),
    });

    let edges = detect_edges(img, cfg);
    let cong = edge_congestion(&edges, cfg);
    let (mut in_clutter, mut total) = (0usize, 0usize);
    for y in 0..img.height() {
        for x in 0..img.width() {
            if cong.congested[y * img.width() + x] {
                total += 1;
                in_clutter += usize::from(scene.in_clutter(x, y));
            }
        }
    }
    let share = if total == 0 { 0.0 } else { in_clutter as f64 / total as f64 };
    checks.push(Check {
        name: "clutter dominates congestion",
        passed: share > 0.5,
        required: true,
        detail: format!("{in_clutter} of {total} congested pixels in clutter region ({:.1}%)", share * 100.0),
    });

    let disc_region = |name: &str| {
        let d = scene.discs.iter().find(|d| d.name == name).expect("scene disc").clone();
        move |x: usize, y: usize| d.contains(x, y)
    };
    let red0 = mean_color(img, disc_region("red"));
    let green0 = mean_color(img, disc_region("green"));
    let blue0 = mean_color(img, disc_region("blue"));
    let panels: Vec<(CvdKind, ImageRgb)> = CvdKind::ALL.iter().map(|&k| (k, simulate_cvd(img, k, &tables.cvd, cfg))).collect();
    for (kind, panel) in &panels {
        match kind {
            CvdKind::Deuteranomaly | CvdKind::Protanomaly => {
                let before = dist(red0, green0);
                let after = dist(mean_color(panel, disc_region("red")), mean_color(panel, disc_region("green")));
                checks.push(Check {
                    name: if *kind == CvdKind::Deuteranomaly { "deuteranomaly merges red and green" } else { "protanomaly merges red and green" },
                    passed: cfg.cvd_severity < 0.5 || after < 0.8 * before,
                    required: true,
                    detail: format!("red-green distance {before:.1} -> {after:.1}"),
                });
            }
            CvdKind::Tritanomaly => {
                let after = mean_color(panel, disc_region("blue"));
                let shift = dist(blue0, after);
                checks.push(Check {
                    name: "tritanomaly shifts blue",
                    passed: cfg.cvd_severity < 0.5 || shift > 10.0,
                    required: true,
                    detail: format!("blue disc moved by {shift:.1}"),
                });
            }
        }
    }

    let mut written = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| ImageError::EncodeError { path: dir.to_path_buf(), reason: e.to_string() })?;
        let mut save_rgb = |name: &str, im: &ImageRgb| -> Result<(), ImageError> {
            im.save_png(&dir.join(name))?;
            written.push(name.to_string());
            Ok(())
        };
        save_rgb("selftest_input.png", img)?;
        for (kind, panel) in &panels {
            save_rgb(&format!("selftest_cvd_{}.png", kind.letter()), panel)?;
        }
        let grays = [
            ("selftest_edges.png", edges.overlay()),
            ("selftest_congestion.png", cong.overlay.clone()),
            ("selftest_saliency.png", sal.to_image()),
            ("selftest_salientmask.png", crate::raster::ImageGray::from_mask(img.width(), img.height(), &saliency_score(&sal, cfg).mask)),
            ("selftest_mono.png", to_grayscale(img)),
        ];
        for (name, g) in grays {
            g.save_png(&dir.join(name))?;
            written.push(name.to_string());
        }
    }
    Ok(SelftestOutcome { checks, written })
}
