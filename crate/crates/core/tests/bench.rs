mod common;

use cofib::bench::{
    crop_and_downsample, emit_csv, emit_svg_chart, format_sig6, parse_csv, read_csv, records_to_csv,
    render_svg_chart, run_resolution_sweep, run_snr_sweep, BenchRecord, CSV_HEADER, DEFAULT_SNRS,
};
use cofib::{DenoiseConfig, Image};
use proptest::prelude::*;

fn quick_config() -> DenoiseConfig {
    DenoiseConfig {
        clusters_k: 2,
        ksvd_iters: 3,
        dict_atoms: Some(60),
        collab_t: 4,
        ..DenoiseConfig::default()
    }
}

fn synthetic_records() -> Vec<BenchRecord> {
    DEFAULT_SNRS
        .iter()
        .enumerate()
        .map(|(i, &snr)| BenchRecord {
            image_name: "scene".into(),
            width: 128,
            height: 96,
            snr_db: snr,
            psnr_noisy: snr + 6.0 + 1.0 / 3.0,
            psnr_denoised: if i == 8 { f64::INFINITY } else { snr + 10.0 + 2.0 / 7.0 },
            ssim_noisy: 0.1 * i as f64 / 3.0,
            ssim_denoised: 0.1 + 0.1 * i as f64,
            wall_time_s: 12.345678,
            seed: 42,
        })
        .collect()
}

#[test]
fn csv_layout_and_round_trip() {
    let records = synthetic_records();
    let text = records_to_csv(&records).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines[1], "scene,128,96,-5.00000,1.33333,5.28571,0,0.100000,12.3457,42");
    assert!(lines[9].contains(",inf,"));
    let parsed = parse_csv(&text).unwrap();
    assert_eq!(parsed.len(), 9);
    // once rounded to six digits, the text is a fixed point
    assert_eq!(records_to_csv(&parsed).unwrap(), text);
    for (a, b) in parsed.iter().zip(&records) {
        assert_eq!(a.image_name, b.image_name);
        assert_eq!(a.seed, b.seed);
        assert!(a.psnr_denoised == b.psnr_denoised || (a.psnr_denoised - b.psnr_denoised).abs() < 1e-4);
    }
}

#[test]
fn files_are_written_and_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let svg = dir.path().join("sweep.svg");
    let records = synthetic_records();
    emit_csv(&records, &csv).unwrap();
    emit_svg_chart(&records, &svg).unwrap();
    assert_eq!(read_csv(&csv).unwrap().len(), 9);
    assert!(emit_csv(&[], dir.path().join("empty.csv")).is_err());
    assert!(emit_csv(&records, dir.path().join("missing/dir/x.csv")).is_err());
    assert!(parse_csv("image,width\nx,1\n").is_err());
}

#[test]
fn svg_is_one_polyline_with_finite_points() {
    let mut records = synthetic_records();
    records[8].psnr_denoised = 50.0;
    let svg = render_svg_chart(&records).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(root.attribute("version"), Some("1.1"));
    let polylines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
    assert_eq!(polylines.len(), 1);
    let points = polylines[0].attribute("points").unwrap().split_whitespace().count();
    assert_eq!(points, 9);
    assert!(doc.descendants().filter(|n| n.has_tag_name("text")).count() >= 4);

    // the infinite point is skipped rather than drawn off-canvas
    let svg = render_svg_chart(&synthetic_records()).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let line = doc.descendants().find(|n| n.has_tag_name("polyline")).unwrap();
    assert_eq!(line.attribute("points").unwrap().split_whitespace().count(), 8);
}

#[test]
fn downsampling_constants_and_shapes() {
    let flat = Image::filled(100, 80, 77.0, 255.0).unwrap();
    for side in [8, 20, 33, 80] {
        let small = crop_and_downsample(&flat, side).unwrap();
        assert_eq!(small.dims(), (side, side));
        assert!(small.pixels().iter().all(|&p| (p - 77.0).abs() < 1e-12));
    }
    assert!(crop_and_downsample(&flat, 81).is_err());
    assert!(crop_and_downsample(&flat, 0).is_err());
}

#[test]
fn small_sweeps_have_expected_shape() {
    let clean = common::natural_image(64, 4);
    let cfg = quick_config();
    let snr = run_snr_sweep(&clean, "scene", &[0.0, 20.0], &cfg, 5).unwrap();
    assert_eq!(snr.len(), 2);
    assert!(snr.iter().all(|r| r.seed == 5 && r.width == 64));
    assert!(snr[1].psnr_noisy > snr[0].psnr_noisy);
    let again = run_snr_sweep(&clean, "scene", &[0.0, 20.0], &cfg, 5).unwrap();
    for (a, b) in snr.iter().zip(&again) {
        assert_eq!((a.psnr_denoised, a.ssim_denoised), (b.psnr_denoised, b.ssim_denoised));
    }
    let res = run_resolution_sweep(&clean, "scene", &[16, 32], 20.0, &cfg, 5).unwrap();
    assert_eq!(res.iter().map(|r| r.width).collect::<Vec<_>>(), vec![16, 32]);
    assert!(run_resolution_sweep(&clean, "scene", &[65], 20.0, &cfg, 5).is_err());
    assert!(run_snr_sweep(&clean, "scene", &[], &cfg, 5).is_err());
}

proptest! {
    #[test]
    fn six_digit_format_round_trips(v in -1e6..1e6f64) {
        let text = format_sig6(v);
        prop_assert!(!text.contains('e'));
        let back: f64 = text.parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-6 * v.abs() + 1e-300);
        prop_assert_eq!(format_sig6(back), text);
    }
}
