mod common;

use cofib::imagekit::{add_awgn, parse_pgm, psnr, ssim, write_pgm};
use cofib::Image;
use proptest::prelude::*;

fn image_strategy(max_side: usize) -> impl Strategy<Value = Image> {
    (11..=max_side, 11..=max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(0.0..255.0f64, w * h).prop_map(move |p| Image::new(w, h, p, 255.0).unwrap())
    })
}

fn pair_strategy() -> impl Strategy<Value = (Image, Image)> {
    (11usize..=24, 11usize..=24).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(0.0..255.0f64, w * h),
            prop::collection::vec(0.0..255.0f64, w * h),
        )
            .prop_map(move |(a, b)| {
                (Image::new(w, h, a, 255.0).unwrap(), Image::new(w, h, b, 255.0).unwrap())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psnr_is_symmetric((a, b) in pair_strategy()) {
        let ab = psnr(&a, &b).unwrap();
        let ba = psnr(&b, &a).unwrap();
        prop_assert!(ab == ba || (ab - ba).abs() < 1e-12);
    }

    #[test]
    fn ssim_is_symmetric_and_bounded((a, b) in pair_strategy()) {
        let ab = ssim(&a, &b).unwrap();
        let ba = ssim(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn identical_images_are_perfect(a in image_strategy(24)) {
        prop_assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pgm_round_trip_of_quantized_images(a in image_strategy(20), binary in any::<bool>()) {
        let q = a.quantized();
        let back = parse_pgm(&write_pgm(&q, binary)).unwrap();
        prop_assert_eq!(back.dims(), q.dims());
        prop_assert_eq!(back.pixels(), q.pixels());
    }
}

#[test]
fn awgn_variance_matches_snr_over_large_image() {
    let clean = common::natural_image(512, 5);
    let (noisy, spec) = add_awgn(&clean, 20.0, 17).unwrap();
    let diff: Vec<f64> = noisy.pixels().iter().zip(clean.pixels()).map(|(a, b)| a - b).collect();
    let n = diff.len() as f64;
    let mean = diff.iter().sum::<f64>() / n;
    let var = diff.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let expected = clean.mean_power() / 100.0;
    assert!((spec.variance() - expected).abs() < 1e-9 * expected);
    assert!((var - expected).abs() < 0.05 * expected, "{var} vs {expected}");
    assert!(mean.abs() < 3.0 * spec.sigma / n.sqrt());
}

#[test]
fn awgn_is_reproducible_per_seed() {
    let clean = common::natural_image(32, 1);
    let (a, _) = add_awgn(&clean, 10.0, 3).unwrap();
    let (b, _) = add_awgn(&clean, 10.0, 3).unwrap();
    let (c, _) = add_awgn(&clean, 10.0, 4).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn psnr_falls_as_noise_grows() {
    let clean = common::natural_image(64, 2);
    let values: Vec<f64> = [30.0, 20.0, 10.0, 0.0]
        .iter()
        .map(|&snr| psnr(&clean, &add_awgn(&clean, snr, 9).unwrap().0).unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[0] > w[1]), "{values:?}");
}
