mod common;

use cofib::clustering::{kmeans, DEFAULT_MAX_ITER, DEFAULT_TOL};
use proptest::prelude::*;

fn brute_nearest(centroids: &[Vec<f64>], v: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d: f64 = c.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.1 {
            best = (j, d);
        }
    }
    best.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn final_assignments_are_nearest_centroids(
        data in prop::collection::vec(-10.0..10.0f64, 3 * 40),
        k in 1usize..=6,
        seed in any::<u64>(),
    ) {
        let model = kmeans(&data, 3, k, seed, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let centroids: Vec<Vec<f64>> = (0..model.k()).map(|j| model.centroid(j).to_vec()).collect();
        for (i, v) in data.chunks_exact(3).enumerate() {
            let expected = brute_nearest(&centroids, v);
            prop_assert_eq!(model.assign(v).unwrap(), expected);
            let a = model.assignments()[i];
            let da: f64 = centroids[a].iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum();
            let de: f64 = centroids[expected].iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum();
            prop_assert!(da <= de + 1e-9);
        }
        prop_assert!(model.inertia_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].max(1.0)));
        prop_assert_eq!(model.sizes().iter().sum::<usize>(), 40);
    }
}

#[test]
fn same_seed_same_model() {
    let mut r = common::rng(8);
    let data = common::gaussian_vec(5 * 300, &mut r);
    let a = kmeans(&data, 5, 4, 77, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
    let b = kmeans(&data, 5, 4, 77, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
    assert_eq!(a, b);
}

#[test]
fn separated_blobs_are_found_exactly() {
    let mut r = common::rng(12);
    let centres = [[0.0, 0.0], [20.0, 0.0], [0.0, 20.0], [20.0, 20.0]];
    let mut data = Vec::new();
    for c in &centres {
        for _ in 0..50 {
            let g = common::gaussian_vec(2, &mut r);
            data.extend([c[0] + g[0], c[1] + g[1]]);
        }
    }
    let model = kmeans(&data, 2, 4, 3, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
    for blob in 0..4 {
        let labels = &model.assignments()[blob * 50..(blob + 1) * 50];
        assert!(labels.iter().all(|&l| l == labels[0]));
    }
    let mut sizes = model.sizes();
    sizes.sort();
    assert_eq!(sizes, vec![50; 4]);
}
