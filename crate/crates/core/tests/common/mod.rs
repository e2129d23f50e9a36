#![allow(dead_code)]

use cofib::dictlearn::Dictionary;
use cofib::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn smoothstep(edge: f64) -> f64 {
    // one-pixel soft edge, as an optical system would blur it
    let t = (edge + 0.5).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// A deterministic scene with the ingredients of a natural photograph:
/// smooth shading, hard object boundaries, an oriented texture and faint
/// grain. Values lie in 0..=255.
pub fn natural_image(side: usize, seed: u64) -> Image {
    let mut r = rng(seed);
    let s = side as f64;
    let tilt: f64 = r.random_range(0.0..std::f64::consts::PI);
    let disks: Vec<(f64, f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                r.random_range(0.15..0.85) * s,
                r.random_range(0.15..0.85) * s,
                r.random_range(0.06..0.2) * s,
                r.random_range(20.0..235.0),
            )
        })
        .collect();
    let rect = (
        r.random_range(0.05..0.4) * s,
        r.random_range(0.05..0.4) * s,
        r.random_range(0.2..0.45) * s,
        r.random_range(0.15..0.35) * s,
        r.random_range(30.0..220.0),
    );
    // grain smoothed over 3x3 so it is image content, not noise
    let raw: Vec<f64> = (0..(side + 2) * (side + 2))
        .map(|_| StandardNormal.sample(&mut r))
        .collect();
    let grain = |row: usize, col: usize| -> f64 {
        let mut acc = 0.0;
        for dr in 0..3 {
            for dc in 0..3 {
                acc += raw[(row + dr) * (side + 2) + col + dc];
            }
        }
        acc / 3.0
    };
    let pixels = (0..side * side)
        .map(|i| {
            let (row, col) = ((i / side) as f64, (i % side) as f64);
            let (u, v) = (row / s, col / s);
            let mut value = 60.0 + 90.0 * u + 40.0 * (3.0 * v + 1.0).sin() * (2.0 * u).cos();
            let (rx, ry, rw, rh, rv) = rect;
            let inside = smoothstep(row - ry).min(smoothstep(ry + rh - row))
                .min(smoothstep(col - rx))
                .min(smoothstep(rx + rw - col));
            let stripes = 25.0 * ((row * tilt.cos() + col * tilt.sin()) * 0.6).sin();
            value = value * (1.0 - inside) + (rv + stripes) * inside;
            for &(cy, cx, radius, level) in &disks {
                let d = ((row - cy).powi(2) + (col - cx).powi(2)).sqrt();
                let w = smoothstep(radius - d);
                let shade = level * (1.0 - 0.2 * (row - cy) / radius.max(1.0));
                value = value * (1.0 - w) + shade * w;
            }
            (value + 2.0 * grain(i / side, i % side)).clamp(0.0, 255.0)
        })
        .collect();
    Image::new(side, side, pixels, 255.0).unwrap()
}

/// Gaussian columns normalized to unit length.
pub fn random_dictionary(dim: usize, atoms: usize, seed: u64) -> Dictionary {
    let mut r = rng(seed);
    let cols = (0..dim * atoms).map(|_| StandardNormal.sample(&mut r)).collect();
    Dictionary::from_columns(dim, cols).unwrap()
}

pub fn gaussian_vec(len: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(r)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn random_image(width: usize, height: usize, r: &mut ChaCha8Rng) -> Image {
    let pixels = (0..width * height).map(|_| r.random_range(0.0..255.0)).collect();
    Image::new(width, height, pixels, 255.0).unwrap()
}

/// One solver/oracle comparison instance: a random 5x8 dictionary, a signal
/// built from one or two atoms with N(0, 1) coefficients, and white noise at
/// 20 dB below the clean signal power.
pub struct OracleInstance {
    pub dict: Dictionary,
    pub signal: Vec<f64>,
    pub truth: Vec<usize>,
    pub prior: cofib::sparsebayes::ActivityPrior,
}

pub fn oracle_instance(seed: u64) -> OracleInstance {
    let (r_dim, m) = (5, 8);
    let dict = random_dictionary(r_dim, m, seed ^ 0xD1C7);
    let mut r = rng(seed);
    let size = r.random_range(1..=2);
    let mut truth: Vec<usize> = rand::seq::index::sample(&mut r, m, size).into_vec();
    truth.sort();
    let mut clean = vec![0.0; r_dim];
    for &j in &truth {
        let c: f64 = StandardNormal.sample(&mut r);
        for (v, a) in clean.iter_mut().zip(dict.atom(j)) {
            *v += c * a;
        }
    }
    let power = clean.iter().map(|v| v * v).sum::<f64>() / r_dim as f64;
    let noise_variance = (power / 100.0).max(1e-12);
    let signal = clean
        .iter()
        .map(|v| {
            let w: f64 = StandardNormal.sample(&mut r);
            v + noise_variance.sqrt() * w
        })
        .collect();
    let prior = cofib::sparsebayes::ActivityPrior::uniform(m, 0.2, 1.0, noise_variance).unwrap();
    OracleInstance {
        dict,
        signal,
        truth,
        prior,
    }
}

/// `count` signals, each a random multiple (magnitude 1..3, random sign) of
/// one random atom plus white noise of standard deviation `noise_sd`, and the
/// index of that atom.
pub fn one_sparse_signals(truth: &Dictionary, count: usize, noise_sd: f64, seed: u64) -> (Vec<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let mut signals = Vec::with_capacity(count * truth.atom_dim());
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let j = r.random_range(0..truth.num_atoms());
        let magnitude = r.random_range(1.0..3.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        for &a in truth.atom(j) {
            let w: f64 = StandardNormal.sample(&mut r);
            signals.push(magnitude * a + noise_sd * w);
        }
        labels.push(j);
    }
    (signals, labels)
}

/// Share of `truth` atoms matched by some `learned` atom with |correlation| ≥ `min_corr`.
pub fn recovered_fraction(truth: &Dictionary, learned: &Dictionary, min_corr: f64) -> f64 {
    let matched = (0..truth.num_atoms())
        .filter(|&j| {
            (0..learned.num_atoms()).any(|k| {
                let c: f64 = truth.atom(j).iter().zip(learned.atom(k)).map(|(a, b)| a * b).sum();
                c.abs() >= min_corr
            })
        })
        .count();
    matched as f64 / truth.num_atoms() as f64
}
