//! Feedback report: rubric and marker feedback merged with the machine
//! analysis into one self-contained, print-paginated HTML document.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{keys, LoadedBundle};
use crate::pipeline::{METRIC_COLORFULNESS, METRIC_EDGE_CONGESTION, METRIC_SALIENCY, METRIC_WAVE};

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("schema error at {path}: {reason}")]
    SchemaError { path: String, reason: String },
    #[error("feedback is missing objective {0}")]
    MissingObjective(String),
    #[error("mark for objective {objective} out of range: {mark} (max {max})")]
    MarkOutOfRange { objective: String, mark: f64, max: f64 },
    #[error("bundle is missing {0}")]
    IncompleteBundle(String),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

fn schema(path: impl Into<String>, reason: impl Into<String>) -> ReportError {
    ReportError::SchemaError { path: path.into(), reason: reason.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Objective {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub max_points: f64,
    /// Names of machine metrics relevant to this objective.
    #[serde(default)]
    pub metrics: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rubric {
    pub objectives: Vec<Objective>,
}

impl Rubric {
    pub fn parse(text: &str) -> Result<Self, ReportError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let rubric: Rubric = serde_path_to_error::deserialize(de).map_err(|e| schema(path_or_root(e.path()), e.inner().to_string()))?;
        rubric.validate()?;
        Ok(rubric)
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        if self.objectives.is_empty() {
            return Err(schema("objectives", "at least one objective required"));
        }
        let mut seen = HashSet::new();
        for (i, o) in self.objectives.iter().enumerate() {
            if o.id.is_empty() || !seen.insert(o.id.as_str()) {
                return Err(schema(format!("objectives[{i}].id"), format!("duplicate or empty id {:?}", o.id)));
            }
            if !(o.max_points > 0.0 && o.max_points.is_finite()) {
                return Err(schema(format!("objectives[{i}].max_points"), "must be positive"));
            }
        }
        Ok(())
    }

    pub fn objective(&self, id: &str) -> Option<&Objective> {
        self.objectives.iter().find(|o| o.id == id)
    }

    pub fn total_points(&self) -> f64 {
        self.objectives.iter().map(|o| o.max_points).sum()
    }
}

fn path_or_root(p: &serde_path_to_error::Path) -> String {
    let s = p.to_string();
    if s == "." { "$".to_string() } else { s }
}

pub fn load_rubric(path: &Path) -> Result<Rubric, ReportError> {
    Rubric::parse(&read(path)?)
}

fn read(path: &Path) -> Result<String, ReportError> {
    std::fs::read_to_string(path).map_err(|e| ReportError::Io { path: path.display().to_string(), reason: e.to_string() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackItem {
    pub objective: String,
    pub mark: f64,
    /// Optional echo of the rubric maximum; must agree with it when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_points: Option<f64>,
    #[serde(default)]
    pub comment: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackBundle {
    pub items: Vec<FeedbackItem>,
    #[serde(default)]
    pub overall: String,
    #[serde(default)]
    pub marker: String,
}

impl FeedbackBundle {
    /// Parses and checks coverage and mark bounds against `rubric`.
    pub fn parse(text: &str, rubric: &Rubric) -> Result<Self, ReportError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let fb: FeedbackBundle = serde_path_to_error::deserialize(de).map_err(|e| schema(path_or_root(e.path()), e.inner().to_string()))?;
        fb.validate(rubric)?;
        Ok(fb)
    }

    pub fn validate(&self, rubric: &Rubric) -> Result<(), ReportError> {
        let mut seen = HashSet::new();
        for (i, item) in self.items.iter().enumerate() {
            let Some(obj) = rubric.objective(&item.objective) else {
                return Err(schema(format!("items[{i}].objective"), format!("unknown objective {:?}", item.objective)));
            };
            if !seen.insert(item.objective.as_str()) {
                return Err(schema(format!("items[{i}].objective"), format!("objective {:?} marked twice", item.objective)));
            }
            if let Some(m) = item.max_points {
                if m != obj.max_points {
                    return Err(schema(format!("items[{i}].max_points"), format!("rubric says {}", obj.max_points)));
                }
            }
            if !(item.mark >= 0.0 && item.mark <= obj.max_points) {
                return Err(ReportError::MarkOutOfRange { objective: obj.id.clone(), mark: item.mark, max: obj.max_points });
            }
        }
        if let Some(missing) = rubric.objectives.iter().find(|o| !seen.contains(o.id.as_str())) {
            return Err(ReportError::MissingObjective(missing.id.clone()));
        }
        Ok(())
    }

    pub fn item(&self, objective: &str) -> Option<&FeedbackItem> {
        self.items.iter().find(|i| i.objective == objective)
    }

    pub fn total(&self) -> f64 {
        self.items.iter().map(|i| i.mark).sum()
    }
}

pub fn load_feedback(path: &Path, rubric: &Rubric) -> Result<FeedbackBundle, ReportError> {
    FeedbackBundle::parse(&read(path)?, rubric)
}

/// Method references shown on each panel and in the appendix.
pub const CITATIONS: [(&str, &str); 6] = [
    ("edges", "J. Canny. A computational approach to edge detection. IEEE Trans. Pattern Analysis and Machine Intelligence 8(6), 1986."),
    ("congestion", "R. Rosenholtz, Y. Li, L. Nakano. Measuring visual clutter. Journal of Vision 7(2), 2007; A. Miniukovich, A. De Angeli. Quantification of interface visual complexity. AVI 2014."),
    ("saliency", "L. Itti, C. Koch, E. Niebur. A model of saliency-based visual attention for rapid scene analysis. IEEE Trans. Pattern Analysis and Machine Intelligence 20(11), 1998."),
    ("cvd", "G. M. Machado, M. M. Oliveira, L. A. F. Fernandes. A physiologically-based model for simulation of color vision deficiency. IEEE Trans. Visualization and Computer Graphics 15(6), 2009."),
    ("wave", "S. E. Palmer, K. B. Schloss. An ecological valence theory of human color preference. PNAS 107(19), 2010."),
    ("colorfulness", "D. Hasler, S. Suesstrunk. Measuring colourfulness in natural images. Proc. SPIE 5007, Human Vision and Electronic Imaging VIII, 2003."),
];

pub fn citation(key: &str) -> &'static str {
    CITATIONS.iter().find(|(k, _)| *k == key).map(|(_, c)| *c).expect("known citation key")
}

pub const PENDING_TEXT: &str = "Pending human assessment.";

/// Artifacts every report embeds.
pub const REQUIRED_ARTIFACTS: [&str; 9] = [
    keys::INPUT,
    keys::EDGES,
    keys::CONGESTION,
    keys::SALIENCY,
    keys::SALIENT_MASK,
    keys::CVD_D,
    keys::CVD_P,
    keys::CVD_T,
    keys::MONO,
];

const RANKED_METRICS: [&str; 4] = [METRIC_EDGE_CONGESTION, METRIC_SALIENCY, METRIC_WAVE, METRIC_COLORFULNESS];

#[derive(Clone, Debug, PartialEq)]
pub struct ReportDocument {
    pub html: String,
}

impl ReportDocument {
    pub fn section_count(&self) -> usize {
        self.html.matches("<section ").count()
    }
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn fmt_score(v: f64) -> String {
    format!("{v:.4}")
}

pub fn fmt_percentile(p: Option<f64>) -> String {
    match p {
        Some(p) => format!("{:.1}%", p * 100.0),
        None => "n/a (no earlier submissions)".to_string(),
    }
}

fn fmt_date(ts: i64) -> String {
    chrono::DateTime::from_timestamp(ts, 0).map_or_else(|| ts.to_string(), |d| d.format("%Y-%m-%d %H:%M UTC").to_string())
}

const STYLE: &str = "\
body{font-family:sans-serif;margin:0;color:#111}
section.page{padding:16mm;break-after:page;page-break-after:always}
section.page:last-of-type{break-after:auto;page-break-after:auto}
h1,h2{margin-top:0}
figure{display:inline-block;margin:4px 8px;vertical-align:top}
figure img{max-width:100%;border:1px solid #ccc}
.panel img{max-width:46%}
table{border-collapse:collapse}
td,th{border:1px solid #999;padding:4px 8px;text-align:left}
.score{font-weight:bold}
.cite{font-size:smaller;color:#444}
.pending{font-style:italic;color:#666}
@page{size:A4;margin:0}
";

struct Ctx<'a> {
    loaded: &'a LoadedBundle,
}

impl Ctx<'_> {
    fn image(&self, key: &str) -> Result<String, ReportError> {
        let bytes = self.loaded.images.get(key).ok_or_else(|| ReportError::IncompleteBundle(key.to_string()))?;
        Ok(format!("data:image/png;base64,{}", base64::engine::general_purpose::STANDARD.encode(bytes)))
    }

    fn figure(&self, key: &str, caption: &str) -> Result<String, ReportError> {
        Ok(format!(
            "<figure><img src=\"{}\" alt=\"{}\"><figcaption>{}</figcaption></figure>\n",
            self.image(key)?,
            esc(caption),
            esc(caption)
        ))
    }

    fn score(&self, metric: &str) -> Result<f64, ReportError> {
        self.loaded.bundle.scores.get(metric).copied().ok_or_else(|| ReportError::IncompleteBundle(format!("scores.{metric}")))
    }

    fn percentile(&self, metric: &str) -> Option<f64> {
        self.loaded.bundle.percentiles.get(metric).copied().flatten()
    }

    fn score_line(&self, label: &str, metric: &str) -> Result<String, ReportError> {
        Ok(format!(
            "<p>{} = <span class=\"score\" data-metric=\"{metric}\">{}</span>; percentile among earlier submissions: <span class=\"pct\" data-metric=\"{metric}\">{}</span> (corpus size {})</p>\n",
            esc(label),
            fmt_score(self.score(metric)?),
            fmt_percentile(self.percentile(metric)),
            self.loaded.bundle.corpus_size
        ))
    }

    fn cite(&self, key: &str) -> String {
        format!("<p class=\"cite\" data-cite=\"{key}\">Method: {}</p>\n", esc(citation(key)))
    }
}

/// Builds the eight-section report. `feedback = None` renders the machine-only
/// variant with placeholders for marks and written feedback.
pub fn assemble_report(loaded: &LoadedBundle, feedback: Option<&FeedbackBundle>, rubric: &Rubric) -> Result<ReportDocument, ReportError> {
    for key in REQUIRED_ARTIFACTS {
        if !loaded.images.contains_key(key) {
            return Err(ReportError::IncompleteBundle(key.to_string()));
        }
    }
    for metric in RANKED_METRICS {
        let key = keys::rank(metric);
        if !loaded.images.contains_key(&key) {
            return Err(ReportError::IncompleteBundle(key));
        }
    }
    if let Some(fb) = feedback {
        fb.validate(rubric)?;
    }

    let b = &loaded.bundle;
    let cx = Ctx { loaded };
    let mut h = String::new();
    let _ = writeln!(h, "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">");
    let _ = writeln!(h, "<title>Feedback report: {}</title>\n<style>\n{STYLE}</style>\n</head>\n<body>", esc(&b.id));

    // 1. Cover.
    h.push_str("<section class=\"page\" id=\"cover\">\n<h1>Visualization feedback report</h1>\n");
    let _ = writeln!(
        h,
        "<table><tr><th>Submission</th><td>{}</td></tr><tr><th>Cohort</th><td>{}</td></tr><tr><th>Analysed</th><td>{}</td></tr><tr><th>Image</th><td>{} ({}&times;{}, analysed at {}&times;{})</td></tr></table>",
        esc(&b.id),
        esc(&b.cohort),
        fmt_date(b.ts),
        esc(&b.image.source),
        b.image.original_width,
        b.image.original_height,
        b.image.width,
        b.image.height
    );
    h.push_str(&cx.figure(keys::INPUT, "Submitted visualization")?);
    h.push_str("</section>\n");

    // 2. Marks.
    h.push_str("<section class=\"page\" id=\"marks\">\n<h2>Marks</h2>\n");
    match feedback {
        Some(fb) => {
            h.push_str("<table class=\"marks\">\n<tr><th>Objective</th><th>Title</th><th>Mark</th><th>Out of</th></tr>\n");
            for o in &rubric.objectives {
                let mark = fb.item(&o.id).map_or(0.0, |i| i.mark);
                let _ = writeln!(h, "<tr><td>{}</td><td>{}</td><td>{mark}</td><td>{}</td></tr>", esc(&o.id), esc(&o.title), o.max_points);
            }
            let _ = writeln!(h, "<tr><th colspan=\"2\">Total</th><th>{}</th><th>{}</th></tr>\n</table>", fb.total(), rubric.total_points());
        }
        None => {
            let _ = writeln!(h, "<p class=\"pending\">{PENDING_TEXT}</p>");
        }
    }
    h.push_str("</section>\n");

    // 3. Edge congestion.
    h.push_str("<section class=\"page panel\" id=\"congestion\">\n<h2>Edge detection and edge congestion</h2>\n");
    h.push_str("<p>White pixels in the congestion image are edge pixels with another, separate edge within a few pixels: places where the visualization may look crowded.</p>\n");
    h.push_str(&cx.figure(keys::EDGES, "Detected edges")?);
    h.push_str(&cx.figure(keys::CONGESTION, "Congested edges")?);
    h.push_str(&cx.score_line("Edge congestion S_ec", METRIC_EDGE_CONGESTION)?);
    h.push_str(&cx.figure(&keys::rank(METRIC_EDGE_CONGESTION), "Ranking (green line: this submission)")?);
    h.push_str(&cx.cite("edges"));
    h.push_str(&cx.cite("congestion"));
    h.push_str("</section>\n");

    // 4. Saliency.
    h.push_str("<section class=\"page panel\" id=\"saliency\">\n<h2>Saliency</h2>\n");
    let _ = writeln!(h, "<p>Brighter areas are predicted to draw the eye first. The salient area counts pixels at or above level {} of 255.</p>", b.config.saliency_threshold);
    h.push_str(&cx.figure(keys::SALIENCY, "Saliency map")?);
    h.push_str(&cx.figure(keys::SALIENT_MASK, "Salient pixels")?);
    h.push_str(&cx.score_line("Salient area S_sy", METRIC_SALIENCY)?);
    h.push_str(&cx.figure(&keys::rank(METRIC_SALIENCY), "Ranking (green line: this submission)")?);
    h.push_str(&cx.cite("saliency"));
    h.push_str("</section>\n");

    // 5. CVD and monochrome.
    h.push_str("<section class=\"page panel\" id=\"colour-vision\">\n<h2>Colour vision and monochrome views</h2>\n");
    let _ = writeln!(h, "<p>Simulated appearance for viewers with colour vision deficiencies (severity {:.1}) and in grey-scale print.</p>", b.config.cvd_severity);
    h.push_str(&cx.figure(keys::CVD_D, "(d) Deuteranomaly")?);
    h.push_str(&cx.figure(keys::CVD_P, "(p) Protanomaly")?);
    h.push_str(&cx.figure(keys::CVD_T, "(t) Tritanomaly")?);
    h.push_str(&cx.figure(keys::MONO, "(m) Monochrome")?);
    h.push_str(&cx.cite("cvd"));
    h.push_str("</section>\n");

    // 6. Colour scores.
    h.push_str("<section class=\"page panel\" id=\"colour-scores\">\n<h2>Colour preference and colourfulness</h2>\n");
    h.push_str(&cx.score_line("WAVE colour preference S_wv", METRIC_WAVE)?);
    h.push_str(&cx.figure(&keys::rank(METRIC_WAVE), "WAVE ranking (green line: this submission)")?);
    h.push_str(&cx.cite("wave"));
    h.push_str(&cx.score_line("Colourfulness S_hs", METRIC_COLORFULNESS)?);
    h.push_str(&cx.figure(&keys::rank(METRIC_COLORFULNESS), "Colourfulness ranking (green line: this submission)")?);
    h.push_str(&cx.cite("colorfulness"));
    h.push_str("</section>\n");

    // 7. Written feedback.
    h.push_str("<section class=\"page\" id=\"feedback\">\n<h2>Written feedback</h2>\n");
    match feedback {
        Some(fb) => {
            for o in &rubric.objectives {
                let comment = fb.item(&o.id).map_or("", |i| i.comment.as_str());
                let _ = writeln!(h, "<h3>{} &mdash; {}</h3>\n<p>{}</p>", esc(&o.id), esc(&o.title), esc(comment));
                if !o.metrics.is_empty() {
                    let related: Vec<String> = o
                        .metrics
                        .iter()
                        .filter_map(|m| b.scores.get(m).map(|v| format!("{} = {}", esc(m), fmt_score(*v))))
                        .collect();
                    if !related.is_empty() {
                        let _ = writeln!(h, "<p class=\"related\">Related machine metrics: {}</p>", related.join(", "));
                    }
                }
            }
            let _ = writeln!(h, "<h3>Overall</h3>\n<p>{}</p>\n<p>Marker: {}</p>", esc(&fb.overall), esc(&fb.marker));
        }
        None => {
            let _ = writeln!(h, "<p class=\"pending\">{PENDING_TEXT}</p>");
        }
    }
    h.push_str("</section>\n");

    // 8. Methods appendix.
    h.push_str("<section class=\"page\" id=\"methods\">\n<h2>Methods</h2>\n<ol>\n");
    for (key, text) in CITATIONS {
        let _ = writeln!(h, "<li data-cite=\"{key}\">{}</li>", esc(text));
    }
    h.push_str("</ol>\n");
    let c = &b.config;
    let _ = writeln!(
        h,
        "<p>Parameters: congestion distance {} px; saliency threshold {}; analysis size cap {} px; CVD severity {:.1}; Canny sigma {}, thresholds {}/{}.</p>",
        c.congestion_distance, c.saliency_threshold, c.max_dimension, c.cvd_severity, c.canny_sigma, c.canny_low, c.canny_high
    );
    let _ = writeln!(h, "<p>Tool: {}; data tables: {}; configuration fingerprint: {}.</p>", esc(&b.tool_version), esc(&b.data_tables), esc(&b.config_fp));
    let notes = footnotes(&b.flags);
    if !notes.is_empty() {
        h.push_str("<ul class=\"footnotes\">\n");
        for n in notes {
            let _ = writeln!(h, "<li>{}</li>", esc(&n));
        }
        h.push_str("</ul>\n");
    }
    h.push_str("</section>\n</body>\n</html>\n");

    Ok(ReportDocument { html: h })
}

fn footnotes(flags: &[String]) -> Vec<String> {
    let known: BTreeMap<&str, &str> = BTreeMap::from([
        ("config_fp_mismatch", "This submission was analysed with settings or data tables that differ from the earliest corpus entries; rankings mix configurations."),
        ("corpus_mixed_config", "Some earlier submissions in the ranking corpus were analysed with different settings or data tables."),
        ("dry_run", "Dry run: this submission was ranked but not added to the corpus."),
        ("no_edges", "No edges were detected; edge congestion is reported as 0."),
        ("degenerate_saliency", "The image has no contrast; the saliency map is empty."),
        ("achromatic", "The image contains no colour; colourfulness is 0."),
        ("resized", "The image was downscaled before analysis."),
    ]);
    flags.iter().map(|f| known.get(f.as_str()).map_or_else(|| format!("Flag: {f}"), |s| s.to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUBRIC: &str = r#"{"objectives": [
        {"id": "O1", "title": "Data", "max_points": 10, "metrics": ["edge_congestion"]},
        {"id": "O2", "title": "Colour", "max_points": 5, "metrics": ["wave", "colorfulness"]}
    ]}"#;

    fn rubric() -> Rubric {
        Rubric::parse(RUBRIC).unwrap()
    }

    #[test]
    fn rubric_errors_carry_paths() {
        let dup = r#"{"objectives": [
            {"id": "a", "title": "A", "max_points": 1}, {"id": "b", "title": "B", "max_points": 1},
            {"id": "c", "title": "C", "max_points": 1}, {"id": "a", "title": "D", "max_points": 1}]}"#;
        assert_eq!(Rubric::parse(dup).unwrap_err(), schema("objectives[3].id", "duplicate or empty id \"a\""));
        let zero = r#"{"objectives": [{"id": "a", "title": "A", "max_points": 0}]}"#;
        assert!(matches!(Rubric::parse(zero), Err(ReportError::SchemaError { path, .. }) if path == "objectives[0].max_points"));
        let typed = r#"{"objectives": [{"id": "a", "title": "A", "max_points": "ten"}]}"#;
        assert!(matches!(Rubric::parse(typed), Err(ReportError::SchemaError { path, .. }) if path == "objectives[0].max_points"));
    }

    #[test]
    fn feedback_validation() {
        let r = rubric();
        let ok = r#"{"items": [{"objective": "O1", "mark": 7, "comment": "ok"}, {"objective": "O2", "mark": 5}], "overall": "x", "marker": "m"}"#;
        assert_eq!(FeedbackBundle::parse(ok, &r).unwrap().total(), 12.0);
        let missing = r#"{"items": [{"objective": "O1", "mark": 7}]}"#;
        assert_eq!(FeedbackBundle::parse(missing, &r).unwrap_err(), ReportError::MissingObjective("O2".into()));
        let over = r#"{"items": [{"objective": "O1", "mark": 12}, {"objective": "O2", "mark": 1}]}"#;
        assert!(matches!(FeedbackBundle::parse(over, &r), Err(ReportError::MarkOutOfRange { objective, .. }) if objective == "O1"));
        let unknown = r#"{"items": [{"objective": "O9", "mark": 1}]}"#;
        assert!(matches!(FeedbackBundle::parse(unknown, &r), Err(ReportError::SchemaError { path, .. }) if path == "items[0].objective"));
    }

    #[test]
    fn escaping() {
        assert_eq!(esc("<a href='x'>&</a>"), "&lt;a href=&#39;x&#39;&gt;&amp;&lt;/a&gt;");
    }

    #[test]
    fn score_formatting() {
        assert_eq!(fmt_score(0.123456), "0.1235");
        assert_eq!(fmt_percentile(Some(2.0 / 3.0)), "66.7%");
    }
}
