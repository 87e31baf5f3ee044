//! Append-only JSON-lines store of analysed submissions and percentile
//! ranking against it.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Metric names every pipeline run records.
pub const BUILTIN_METRICS: [&str; 4] = ["edge_congestion", "saliency", "wave", "colorfulness"];

pub const HISTOGRAM_BINS: usize = 20;

/// Record flag set when its config fingerprint differs from the corpus baseline.
pub const FLAG_FP_MISMATCH: &str = "config_fp_mismatch";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corrupt corpus record at line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },
    #[error("submission id already in corpus: {0}")]
    DuplicateId(String),
    #[error("unknown metric: {0}")]
    UnknownMetric(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("corpus I/O on {}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub id: String,
    /// UTC seconds.
    pub ts: i64,
    pub cohort: String,
    pub scores: BTreeMap<String, f64>,
    pub config_fp: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl CorpusRecord {
    fn check(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.config_fp.is_empty() {
            return Err("empty config_fp".into());
        }
        if let Some((k, v)) = self.scores.iter().find(|(_, v)| !v.is_finite()) {
            return Err(format!("score {k} is not finite ({v})"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` ascending bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub metric: String,
    pub score: f64,
    /// Fraction of corpus scores strictly below `score`; `None` for an empty corpus.
    pub percentile: Option<f64>,
    pub corpus_size: usize,
    pub histogram: Histogram,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricStats {
    pub metric: String,
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

/// In-memory snapshot of a corpus file.
#[derive(Debug)]
pub struct CorpusStore {
    path: PathBuf,
    records: Vec<CorpusRecord>,
    ids: HashSet<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

fn read_records(path: &Path) -> Result<Vec<CorpusRecord>, CorpusError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::CorruptRecord { line: line_no, reason: e.to_string() })?;
        let rec: CorpusRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::CorruptRecord { line: line_no, reason: e.to_string() })?;
        rec.check().map_err(|reason| CorpusError::CorruptRecord { line: line_no, reason })?;
        if !seen.insert(rec.id.clone()) {
            return Err(CorpusError::CorruptRecord { line: line_no, reason: format!("duplicate id {}", rec.id) });
        }
        records.push(rec);
    }
    Ok(records)
}

impl CorpusStore {
    /// Loads every record; a missing file is an empty store.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref().to_path_buf();
        let records = read_records(&path)?;
        let ids = records.iter().map(|r| r.id.clone()).collect();
        Ok(Self { path, records, ids })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[CorpusRecord] {
        &self.records
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    /// Fingerprint new records are compared against: the first record's.
    pub fn baseline_fp(&self) -> Option<&str> {
        self.records.first().map(|r| r.config_fp.as_str())
    }

    /// Appends one record under an exclusive file lock.
    ///
    /// The file is re-read while the lock is held, so records appended by
    /// other processes since `open` are picked up before the duplicate check.
    pub fn add(&mut self, mut record: CorpusRecord) -> Result<&CorpusRecord, CorpusError> {
        record.check().map_err(CorpusError::InvalidRecord)?;
        if let Some(parent) = self.path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io_err(&self.path))?;
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path).map_err(io_err(&self.path))?;
        file.lock().map_err(io_err(&self.path))?;

        let result = (|| {
            let on_disk = read_records(&self.path)?;
            if on_disk.len() != self.records.len() {
                self.ids = on_disk.iter().map(|r| r.id.clone()).collect();
                self.records = on_disk;
            }
            if self.ids.contains(&record.id) {
                return Err(CorpusError::DuplicateId(record.id.clone()));
            }
            if self.baseline_fp().is_some_and(|fp| fp != record.config_fp)
                && !record.flags.iter().any(|f| f == FLAG_FP_MISMATCH)
            {
                record.flags.push(FLAG_FP_MISMATCH.to_string());
            }
            let mut line = serde_json::to_string(&record).expect("record serializes");
            line.push('\n');
            file.write_all(line.as_bytes()).map_err(io_err(&self.path))?;
            file.flush().map_err(io_err(&self.path))?;
            Ok(())
        })();
        let _ = file.unlock();
        result?;

        self.ids.insert(record.id.clone());
        self.records.push(record);
        Ok(self.records.last().expect("just pushed"))
    }

    /// Sorted metric names present in any record plus the built-in ones.
    pub fn metric_names(&self) -> Vec<String> {
        let mut names: BTreeSet<String> = BUILTIN_METRICS.iter().map(|s| s.to_string()).collect();
        for r in &self.records {
            names.extend(r.scores.keys().cloned());
        }
        names.into_iter().collect()
    }

    /// All recorded values of one metric, in insertion order.
    pub fn values(&self, metric: &str) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.scores.get(metric).copied()).collect()
    }

    pub fn rank(&self, metric: &str, score: f64) -> Result<RankingResult, CorpusError> {
        if !BUILTIN_METRICS.contains(&metric) && !self.records.iter().any(|r| r.scores.contains_key(metric)) {
            return Err(CorpusError::UnknownMetric(metric.to_string()));
        }
        Ok(rank_values(metric, &self.values(metric), score))
    }

    pub fn stats(&self, metric: &str) -> Option<MetricStats> {
        let mut v = self.values(metric);
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        Some(MetricStats { metric: metric.to_string(), count: n, min: v[0], median, max: v[n - 1] })
    }
}

/// Ranks `score` against `corpus` with the strict-less-than rule.
pub fn rank_values(metric: &str, corpus: &[f64], score: f64) -> RankingResult {
    let below = corpus.iter().filter(|&&v| v < score).count();
    let percentile = (!corpus.is_empty()).then(|| below as f64 / corpus.len() as f64);
    RankingResult {
        metric: metric.to_string(),
        score,
        percentile,
        corpus_size: corpus.len(),
        histogram: histogram(corpus, score),
    }
}

/// Equal-width histogram of `corpus` over the range of `corpus` and `score`.
///
/// A zero-width range becomes one bin centred on the value.
pub fn histogram(corpus: &[f64], score: f64) -> Histogram {
    let lo = corpus.iter().copied().fold(score, f64::min);
    let hi = corpus.iter().copied().fold(score, f64::max);
    if hi <= lo {
        let width = (lo.abs() * 1e-6).max(1e-9);
        return Histogram { edges: vec![lo - width / 2.0, lo + width / 2.0], counts: vec![corpus.len()] };
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut edges: Vec<f64> = (0..HISTOGRAM_BINS).map(|i| lo + width * i as f64).collect();
    edges.push(hi);
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &v in corpus {
        let bin = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[bin] += 1;
    }
    Histogram { edges, counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, ec: f64) -> CorpusRecord {
        CorpusRecord {
            id: id.into(),
            ts: 1_700_000_000,
            cohort: "2024".into(),
            scores: BTreeMap::from([("edge_congestion".to_string(), ec)]),
            config_fp: "fp-a".into(),
            flags: vec![],
        }
    }

    #[test]
    fn missing_file_is_empty_store() {
        let dir = tempfile::tempdir().unwrap();
        let s = CorpusStore::open(dir.path().join("c.jsonl")).unwrap();
        assert_eq!(s.len(), 0);
    }

    #[test]
    fn add_then_duplicate() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = CorpusStore::open(dir.path().join("c.jsonl")).unwrap();
        s.add(record("a", 0.1)).unwrap();
        assert_eq!(s.len(), 1);
        assert!(matches!(s.add(record("a", 0.2)), Err(CorpusError::DuplicateId(id)) if id == "a"));
        assert_eq!(CorpusStore::open(s.path()).unwrap().len(), 1);
    }

    #[test]
    fn mismatched_fingerprint_is_flagged_not_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = CorpusStore::open(dir.path().join("c.jsonl")).unwrap();
        s.add(record("a", 0.1)).unwrap();
        let mut other = record("b", 0.2);
        other.config_fp = "fp-b".into();
        assert_eq!(s.add(other).unwrap().flags, vec![FLAG_FP_MISMATCH.to_string()]);
        assert!(s.add(record("c", 0.3)).unwrap().flags.is_empty());
        assert_eq!(s.values("edge_congestion").len(), 3);
    }

    #[test]
    fn corrupt_line_reported_with_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        let good = serde_json::to_string(&record("a", 0.1)).unwrap();
        let good2 = serde_json::to_string(&record("c", 0.1)).unwrap();
        std::fs::write(&p, format!("{good}\n{{not json\n{good2}\n")).unwrap();
        assert!(matches!(CorpusStore::open(&p), Err(CorpusError::CorruptRecord { line: 2, .. })));
    }

    #[test]
    fn wire_field_names() {
        let line = serde_json::to_string(&record("x", 0.5)).unwrap();
        assert!(line.starts_with(r#"{"id":"x","ts":1700000000,"cohort":"2024","scores":{"edge_congestion":0.5},"config_fp":"fp-a"}"#), "{line}");
    }

    #[test]
    fn rank_examples() {
        let c = [0.1, 0.2, 0.3];
        assert_eq!(rank_values("m", &c, 0.25).percentile, Some(2.0 / 3.0));
        assert_eq!(rank_values("m", &c, 0.05).percentile, Some(0.0));
        assert_eq!(rank_values("m", &c, 0.2).percentile, Some(1.0 / 3.0));
        assert_eq!(rank_values("m", &[], 0.2).percentile, None);
    }

    #[test]
    fn unknown_metric() {
        let dir = tempfile::tempdir().unwrap();
        let s = CorpusStore::open(dir.path().join("c.jsonl")).unwrap();
        assert!(matches!(s.rank("nope", 1.0), Err(CorpusError::UnknownMetric(_))));
        assert!(s.rank("saliency", 1.0).is_ok());
    }

    #[test]
    fn degenerate_histogram_single_bin() {
        let h = histogram(&[0.5, 0.5, 0.5], 0.5);
        assert_eq!(h.counts, vec![3]);
        assert!(h.edges[0] < 0.5 && h.edges[1] > 0.5);
        let h = histogram(&[0.0, 1.0], 0.5);
        assert_eq!(h.counts.len(), HISTOGRAM_BINS);
        assert_eq!(h.total(), 2);
        assert_eq!(h.counts[19], 1);
    }

    #[test]
    fn stats_median() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = CorpusStore::open(dir.path().join("c.jsonl")).unwrap();
        for (i, v) in [0.4, 0.1, 0.3, 0.2].iter().enumerate() {
            s.add(record(&format!("r{i}"), *v)).unwrap();
        }
        let st = s.stats("edge_congestion").unwrap();
        assert_eq!((st.count, st.min, st.max), (4, 0.1, 0.4));
        assert!((st.median - 0.25).abs() < 1e-12);
        assert!(s.stats("wave").is_none());
    }
}
