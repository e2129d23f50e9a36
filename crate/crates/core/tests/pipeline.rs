mod common;

use cofib::imagekit::{add_awgn, psnr};
use cofib::pipeline::estimate_sigma;
use cofib::{denoise_image, DenoiseConfig, Error, Image, NoiseSigma};
use rand_distr::{Distribution, Normal};

fn quick_config() -> DenoiseConfig {
    DenoiseConfig {
        clusters_k: 3,
        ksvd_iters: 4,
        dict_atoms: Some(64),
        collab_t: 5,
        seed: 3,
        ..DenoiseConfig::default()
    }
}

#[test]
fn sigma_of_pure_noise() {
    for seed in 0..5 {
        let mut r = common::rng(seed);
        let noise = Normal::new(128.0, 10.0).unwrap();
        let pixels = (0..256 * 256).map(|_| noise.sample(&mut r)).collect();
        let img = Image::new(256, 256, pixels, 255.0).unwrap();
        let s = estimate_sigma(&img);
        assert!((s - 10.0).abs() <= 1.0, "seed {seed}: {s}");
    }
}

#[test]
fn sigma_of_noisy_natural_image() {
    let clean = common::natural_image(256, 21);
    let mut r = common::rng(4);
    let noise = Normal::new(0.0, 15.0).unwrap();
    let pixels = clean.pixels().iter().map(|p| p + noise.sample(&mut r)).collect();
    let img = Image::new(256, 256, pixels, 255.0).unwrap();
    let s = estimate_sigma(&img);
    assert!((10.0..=22.0).contains(&s), "{s}");
}

#[test]
fn sigma_of_constant_image_is_zero() {
    assert_eq!(estimate_sigma(&Image::filled(9, 7, 42.0, 255.0).unwrap()), 0.0);
}

#[test]
fn denoising_is_deterministic_and_shape_preserving() {
    let clean = common::natural_image(40, 8);
    let (noisy, spec) = add_awgn(&clean, 15.0, 1).unwrap();
    let cfg = DenoiseConfig {
        noise_sigma: NoiseSigma::Known(spec.sigma),
        ..quick_config()
    };
    let a = denoise_image(&noisy, &cfg).unwrap();
    let b = denoise_image(&noisy, &cfg).unwrap();
    assert_eq!(a.denoised, b.denoised);
    assert_eq!(a.per_cluster_sizes, b.per_cluster_sizes);
    assert_eq!(a.denoised.dims(), noisy.dims());
    assert_eq!(a.per_cluster_sizes.iter().sum::<usize>(), 40 * 40);
    assert!(a.denoised.pixels().iter().all(|p| p.is_finite()));
    assert_eq!(a.sigma_used, spec.sigma);
    assert!(psnr(&clean, &a.denoised).unwrap() > psnr(&clean, &noisy).unwrap());
}

#[test]
fn denoising_without_collaboration_still_works() {
    let clean = common::natural_image(32, 9);
    let (noisy, _) = add_awgn(&clean, 15.0, 2).unwrap();
    let cfg = DenoiseConfig {
        collab_t: 1,
        collab_rounds: 0,
        ..quick_config()
    };
    let report = denoise_image(&noisy, &cfg).unwrap();
    assert_eq!(report.denoised.dims(), noisy.dims());
    assert!(psnr(&clean, &report.denoised).unwrap() > psnr(&clean, &noisy).unwrap());
    assert_eq!(report.config_echo.collab_t, 1);
}

#[test]
fn different_seeds_may_differ_but_both_run() {
    let clean = common::natural_image(32, 10);
    let (noisy, _) = add_awgn(&clean, 10.0, 3).unwrap();
    for seed in [0, 1] {
        let cfg = DenoiseConfig { seed, ..quick_config() };
        assert_eq!(denoise_image(&noisy, &cfg).unwrap().denoised.dims(), (32, 32));
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let img = common::natural_image(16, 1);
    for cfg in [
        DenoiseConfig { patch_n: 4, ..quick_config() },
        DenoiseConfig { clusters_k: 0, ..quick_config() },
        DenoiseConfig { collab_t: 0, ..quick_config() },
        DenoiseConfig { dict_atoms: Some(49), ..quick_config() },
        DenoiseConfig { noise_sigma: NoiseSigma::Known(-1.0), ..quick_config() },
    ] {
        assert!(denoise_image(&img, &cfg).is_err(), "{cfg:?}");
    }
    let tiny = Image::filled(5, 5, 1.0, 255.0).unwrap();
    assert!(denoise_image(&tiny, &quick_config()).is_err());
    assert!(matches!(
        DenoiseConfig::from_json(r#"{"patch_n": 5, "bogus": 1}"#),
        Err(Error::Config(msg)) if msg.contains("bogus")
    ));
}

#[test]
fn config_json_round_trip() {
    let cfg = DenoiseConfig {
        noise_sigma: NoiseSigma::Known(12.5),
        dict_atoms: Some(100),
        ..DenoiseConfig::default()
    };
    assert_eq!(DenoiseConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    let est = DenoiseConfig::from_json(r#"{"noise_sigma": "estimate"}"#).unwrap();
    assert_eq!(est.noise_sigma, NoiseSigma::Estimate);
}
