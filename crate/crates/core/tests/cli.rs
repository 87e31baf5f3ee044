mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vizqm::{scene, ImageRgb};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn vizqm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vizqm"))
        .args(args)
        .current_dir(cwd)
        .env_remove("VIZQM_DATA_DIR")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    common::write_png(dir.path(), "sub.png", &scene::generate().image);
    fs::write(dir.path().join("rubric.json"), common::RUBRIC_JSON).unwrap();
    fs::write(dir.path().join("fb.json"), common::FEEDBACK_JSON).unwrap();
    dir
}

#[test]
fn analyze_writes_bundle_and_panels() {
    let dir = fixture();
    let out = vizqm(&["analyze", "sub.png", "--corpus", "c.jsonl", "--out", "o", "--timestamp", "1700000000"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    for m in ["edge_congestion", "saliency", "wave", "colorfulness"] {
        assert!(stdout.lines().any(|l| l.starts_with(m)), "{stdout}");
    }
    let pngs = fs::read_dir(dir.path().join("o")).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png")).count();
    assert!(pngs >= 8);
    assert!(dir.path().join("o/bundle.json").is_file());
}

#[test]
fn analyze_input_errors_exit_1() {
    let dir = fixture();
    let missing = vizqm(&["analyze", "sub.png", "--out", "o"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(text(&missing.stderr).contains("--corpus"));

    let bad = vizqm(&["analyze", "nope.png", "--corpus", "c.jsonl", "--out", "o"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(text(&bad.stderr).contains("nope.png"));

    fs::write(dir.path().join("junk.png"), b"not a png").unwrap();
    let junk = vizqm(&["analyze", "junk.png", "--corpus", "c.jsonl", "--out", "o"], dir.path());
    assert_eq!(junk.status.code(), Some(1));
    assert!(text(&junk.stderr).contains("junk.png"));

    let flag = vizqm(&["analyze", "sub.png", "--corpus", "c.jsonl", "--out", "o", "--cvd-severity", "1.5"], dir.path());
    assert_eq!(flag.status.code(), Some(1));
    assert!(text(&flag.stderr).contains("--cvd-severity"));
    assert!(!dir.path().join("c.jsonl").exists());
}

#[test]
fn config_file_then_flags() {
    let dir = fixture();
    fs::write(dir.path().join("cfg.json"), r#"{"saliency_threshold": 200, "congestion_distance": 2}"#).unwrap();
    let out = vizqm(
        &["analyze", "sub.png", "--corpus", "c.jsonl", "--out", "o", "--dry-run", "--config", "cfg.json", "--congestion-distance", "6"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let b: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("o/bundle.json")).unwrap()).unwrap();
    assert_eq!(b["config"]["saliency_threshold"], 200);
    assert_eq!(b["config"]["congestion_distance"], 6);

    fs::write(dir.path().join("bad.json"), r#"{"saliency_treshold": 1}"#).unwrap();
    let bad = vizqm(&["analyze", "sub.png", "--corpus", "c.jsonl", "--out", "o", "--config", "bad.json"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(text(&bad.stderr).contains("bad.json"));
}

#[test]
fn report_full_and_machine_only() {
    let dir = fixture();
    let a = vizqm(&["analyze", "sub.png", "--corpus", "c.jsonl", "--out", "o", "--timestamp", "1"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    let full = vizqm(&["report", "--bundle", "o", "--rubric", "rubric.json", "--feedback", "fb.json", "--out", "r.html"], dir.path());
    assert_eq!(full.status.code(), Some(0), "{}", text(&full.stderr));
    let html = fs::read_to_string(dir.path().join("r.html")).unwrap();
    assert!(html.contains("Gridlines compete with the data."));
    assert!(!html.contains(vizqm::report::PENDING_TEXT));

    let machine = vizqm(&["report", "--bundle", "o", "--rubric", "rubric.json", "--out", "m.html"], dir.path());
    assert_eq!(machine.status.code(), Some(0));
    let html = fs::read_to_string(dir.path().join("m.html")).unwrap();
    assert!(html.contains(vizqm::report::PENDING_TEXT));
}

#[test]
fn report_validation_errors_name_the_problem() {
    let dir = fixture();
    vizqm(&["analyze", "sub.png", "--corpus", "c.jsonl", "--out", "o", "--dry-run"], dir.path());
    fs::write(dir.path().join("over.json"), r#"{"items": [{"objective": "O2", "mark": 9, "comment": ""}]}"#).unwrap();
    let over = vizqm(&["report", "--bundle", "o", "--rubric", "rubric.json", "--feedback", "over.json", "--out", "r.html"], dir.path());
    assert_eq!(over.status.code(), Some(1));
    assert!(text(&over.stderr).contains("O2"), "{}", text(&over.stderr));

    fs::write(dir.path().join("ghost.json"), r#"{"items": [{"objective": "O9", "mark": 1, "comment": ""}]}"#).unwrap();
    let ghost = vizqm(&["report", "--bundle", "o", "--rubric", "rubric.json", "--feedback", "ghost.json", "--out", "r.html"], dir.path());
    assert_eq!(ghost.status.code(), Some(1));
    assert!(text(&ghost.stderr).contains("O9"));

    fs::write(dir.path().join("typed.json"), r#"{"objectives": [{"id": "O1", "title": "t", "max_points": "ten", "metrics": []}]}"#).unwrap();
    let typed = vizqm(&["report", "--bundle", "o", "--rubric", "typed.json", "--out", "r.html"], dir.path());
    assert_eq!(typed.status.code(), Some(1));
    assert!(text(&typed.stderr).contains("objectives[0].max_points"), "{}", text(&typed.stderr));
    assert!(!dir.path().join("r.html").exists());
}

#[test]
fn corpus_list_and_stats() {
    let dir = fixture();
    let empty = vizqm(&["corpus", "list", "--corpus", "c.jsonl"], dir.path());
    assert_eq!(empty.status.code(), Some(0));
    assert_eq!(text(&empty.stdout).lines().count(), 1);

    common::write_png(dir.path(), "flat.png", &ImageRgb::filled(64, 64, [200, 30, 30]));
    for img in ["sub.png", "sub.png", "flat.png"] {
        let r = vizqm(&["analyze", img, "--corpus", "c.jsonl", "--out", "o", "--timestamp", "5"], dir.path());
        assert_eq!(r.status.code(), Some(0));
    }
    let list = vizqm(&["corpus", "list", "--corpus", "c.jsonl"], dir.path());
    assert_eq!(text(&list.stdout).lines().count(), 4);
    let stats = vizqm(&["corpus", "stats", "--corpus", "c.jsonl"], dir.path());
    assert_eq!(stats.status.code(), Some(0));
    let s = text(&stats.stdout);
    let rows: Vec<&str> = s.lines().skip(1).collect();
    assert_eq!(rows.len(), 4, "{s}");
    assert!(rows.iter().all(|r| r.split('\t').nth(1) == Some("3")), "{s}");
}

#[test]
fn corrupt_corpus_reports_line() {
    let dir = fixture();
    let good = r#"{"id":"a","ts":1,"cohort":"","scores":{"wave":0.5},"config_fp":"f"}"#;
    fs::write(dir.path().join("c.jsonl"), format!("{good}\n{{oops\n")).unwrap();
    for args in [&["corpus", "list", "--corpus", "c.jsonl"][..], &["analyze", "sub.png", "--corpus", "c.jsonl", "--out", "o"]] {
        let out = vizqm(args, dir.path());
        assert_eq!(out.status.code(), Some(1));
        assert!(text(&out.stderr).contains("line 2"), "{}", text(&out.stderr));
    }
}

#[test]
fn selftest_passes_and_writes_panels() {
    let dir = tempfile::tempdir().unwrap();
    let out = vizqm(&["selftest", "--out", "st"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}{}", text(&out.stdout), text(&out.stderr));
    assert!(fs::read_dir(dir.path().join("st")).unwrap().count() >= 6);

    // Checks use map values, not the threshold.
    let high = vizqm(&["selftest", "--out", "st2", "--saliency-threshold", "255"], dir.path());
    assert_eq!(high.status.code(), Some(0));
}

#[test]
fn selftest_catches_sabotaged_cvd_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir(&data).unwrap();
    let identity = "[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]";
    let cvd: String = fs::read_to_string(Path::new(DATA).join("cvd_matrices.toml"))
        .unwrap()
        .lines()
        .map(|l| match l.split_once(" = [[") {
            Some((key, _)) => format!("{key} = {identity}\n"),
            None => format!("{l}\n"),
        })
        .collect();
    fs::write(data.join("cvd_matrices.toml"), cvd).unwrap();
    fs::copy(Path::new(DATA).join("wave_bcp32.toml"), data.join("wave_bcp32.toml")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_vizqm"))
        .args(["selftest", "--out", "st"])
        .current_dir(dir.path())
        .env("VIZQM_DATA_DIR", &data)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stdout));
}

#[test]
fn broken_data_dir_is_an_input_error() {
    let dir = fixture();
    let out = Command::new(env!("CARGO_BIN_EXE_vizqm"))
        .args(["analyze", "sub.png", "--corpus", "c.jsonl", "--out", "o"])
        .current_dir(dir.path())
        .env("VIZQM_DATA_DIR", dir.path().join("absent"))
        .output()
        .unwrap();
    assert_ne!(out.status.code(), Some(0));
    assert!(text(&out.stderr).contains("absent"));
}

#[test]
fn help_documents_every_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &[&str]); 5] = [
        (
            &["analyze"],
            &["--corpus", "--out", "--dry-run", "--config", "--id", "--cohort", "--timestamp", "--congestion-distance", "--saliency-threshold", "--max-dimension", "--cvd-severity"],
        ),
        (&["report"], &["--bundle", "--rubric", "--feedback", "--out"]),
        (&["corpus", "list"], &["--corpus"]),
        (&["corpus", "stats"], &["--corpus"]),
        (&["selftest"], &["--out", "--config", "--saliency-threshold"]),
    ];
    for (cmd, flags) in cases {
        let mut args = cmd.to_vec();
        args.push("--help");
        let out = vizqm(&args, tmp.path());
        assert_eq!(out.status.code(), Some(0));
        let help = text(&out.stdout);
        for f in flags {
            let line = help.lines().find(|l| l.trim_start().starts_with(&format!("{f} "))).unwrap_or_else(|| panic!("{cmd:?} lacks {f}"));
            let desc = line.trim_start()[f.len()..].trim_start();
            let desc = if desc.starts_with('<') { desc.split_once('>').map_or("", |(_, d)| d) } else { desc };
            assert!(desc.trim().len() > 10, "{cmd:?} {f} undocumented: {line}");
        }
    }
}
