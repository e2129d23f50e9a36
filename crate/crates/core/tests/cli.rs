mod common;

use std::path::Path;
use std::process::{Command, Output};

use cofib::imagekit::{add_awgn, load_pgm, save_pgm};

const QUICK_CONFIG: &str = r#"{"clusters_k": 2, "ksvd_iters": 3, "dict_atoms": 60, "collab_t": 4}"#;

fn cofib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cofib"))
        .args(args)
        .env_remove("COFIB_THREADS")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let clean = common::natural_image(40, 6);
        let (noisy, _) = add_awgn(&clean, 15.0, 2).unwrap();
        save_pgm(&clean, dir.path().join("clean.pgm"), true).unwrap();
        save_pgm(&noisy.quantized(), dir.path().join("noisy.pgm"), false).unwrap();
        std::fs::write(dir.path().join("quick.json"), QUICK_CONFIG).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self.dir.path().join(name)
    }
}

#[test]
fn denoise_with_reference_reports_improvement() {
    let fx = Fixture::new();
    let out = cofib(&[
        "denoise",
        "--input",
        p(&fx.path("noisy.pgm")),
        "--output",
        p(&fx.path("out.pgm")),
        "--reference",
        p(&fx.path("clean.pgm")),
        "--config",
        p(&fx.path("quick.json")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let noisy = summary["psnr_noisy"].as_f64().unwrap();
    let denoised = summary["psnr_denoised"].as_f64().unwrap();
    assert!(denoised > noisy, "{summary}");
    let written = load_pgm(fx.path("out.pgm")).unwrap();
    assert_eq!(written.dims(), (40, 40));
}

#[test]
fn summary_omits_metrics_without_reference() {
    let fx = Fixture::new();
    let out = cofib(&[
        "denoise",
        "--input",
        p(&fx.path("noisy.pgm")),
        "--output",
        p(&fx.path("out.pgm")),
        "--config",
        p(&fx.path("quick.json")),
        "--sigma",
        "12",
        "--ascii",
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary.get("psnr_denoised").is_none());
    assert_eq!(summary["sigma"].as_f64(), Some(12.0));
    assert!(std::fs::read(fx.path("out.pgm")).unwrap().starts_with(b"P2"));
}

#[test]
fn usage_errors_exit_one() {
    let fx = Fixture::new();
    let out = cofib(&["denoise", "--output", p(&fx.path("out.pgm"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--input"));

    assert_eq!(cofib(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cofib(&["sweep-snr", "--input", "x.pgm", "--output", "y.csv", "--snrs", "a,b"]).status.code(), Some(1));

    std::fs::write(fx.path("bad.json"), r#"{"patch_n": 7, "turbo_mode": true}"#).unwrap();
    let out = cofib(&[
        "denoise",
        "--input",
        p(&fx.path("noisy.pgm")),
        "--output",
        p(&fx.path("out.pgm")),
        "--config",
        p(&fx.path("bad.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("turbo_mode"));

    let out = Command::new(env!("CARGO_BIN_EXE_cofib"))
        .args(["chart", "--input", "a.csv", "--output", "b.svg"])
        .env("COFIB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(cofib(&["--help"]).status.code(), Some(0));
}

#[test]
fn io_errors_exit_two() {
    let fx = Fixture::new();
    let missing = cofib(&["denoise", "--input", p(&fx.path("nope.pgm")), "--output", p(&fx.path("o.pgm"))]);
    assert_eq!(missing.status.code(), Some(2));

    std::fs::write(fx.path("broken.pgm"), b"P5\n4 4\n255\nabc").unwrap();
    let broken = cofib(&["denoise", "--input", p(&fx.path("broken.pgm")), "--output", p(&fx.path("o.pgm"))]);
    assert_eq!(broken.status.code(), Some(2));
}

#[test]
fn pipeline_errors_exit_three() {
    let fx = Fixture::new();
    let tiny = cofib::Image::filled(4, 4, 9.0, 255.0).unwrap();
    save_pgm(&tiny, fx.path("tiny.pgm"), true).unwrap();
    let out = cofib(&["denoise", "--input", p(&fx.path("tiny.pgm")), "--output", p(&fx.path("o.pgm"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_then_chart() {
    let fx = Fixture::new();
    let out = cofib(&[
        "sweep-snr",
        "--input",
        p(&fx.path("clean.pgm")),
        "--snrs",
        "-5,10",
        "--output",
        p(&fx.path("s.csv")),
        "--svg",
        p(&fx.path("s.svg")),
        "--config",
        p(&fx.path("quick.json")),
        "--seed",
        "4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(fx.path("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("clean,40,40,-5.00000,"));
    assert!(csv.lines().all(|l| l.ends_with(",0,4") || l.starts_with("image")));

    let chart = cofib(&["chart", "--input", p(&fx.path("s.csv")), "--output", p(&fx.path("c.svg"))]);
    assert!(chart.status.success());
    // the chart from the CSV sees six-digit values, so only the plotted
    // points (rounded to 0.01 px) are guaranteed to coincide
    let points = |name: &str| {
        let text = std::fs::read_to_string(fx.path(name)).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        let line = doc.descendants().find(|n| n.has_tag_name("polyline")).unwrap();
        line.attribute("points").unwrap().to_string()
    };
    assert_eq!(points("c.svg"), points("s.svg"));

    let res = cofib(&[
        "sweep-res",
        "--input",
        p(&fx.path("clean.pgm")),
        "--sides",
        "16,24",
        "--output",
        p(&fx.path("r.csv")),
        "--config",
        p(&fx.path("quick.json")),
        "--name",
        "scene",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(fx.path("r.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("scene,24,24,20.0000,"));
}
