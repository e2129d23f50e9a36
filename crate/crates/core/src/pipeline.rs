//! End-to-end denoiser.
//!
//! Patches are extracted and normalized, clustered with k-means, and each
//! cluster gets its own K-SVD dictionary and collaborative sparse coding.
//! Denoised patches are scaled back and averaged into the output image.

use std::fmt;
use std::time::Instant;

use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::clustering::{kmeans, ClusterModel, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::collab::{denoise_cluster, CollabParams};
use crate::dictlearn::{ksvd_refine, ksvd_train, Dictionary};
use crate::imagekit::Image;
use crate::linalg::norm_sq;
use crate::patches::{aggregate, extract_patches, PatchSet};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

/// Smallest noise level handed to the solver, as a fraction of `range_max`.
const SIGMA_FLOOR: f64 = 1e-3;

/// Noise standard deviation: given, or estimated from the image.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseSigma {
    Known(f64),
    #[default]
    Estimate,
}

impl Serialize for NoiseSigma {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NoiseSigma::Known(v) => s.serialize_f64(*v),
            NoiseSigma::Estimate => s.serialize_str("estimate"),
        }
    }
}

impl<'de> Deserialize<'de> for NoiseSigma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = NoiseSigma;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative number or \"estimate\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<NoiseSigma, E> {
                Ok(NoiseSigma::Known(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<NoiseSigma, E> {
                Ok(NoiseSigma::Known(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<NoiseSigma, E> {
                Ok(NoiseSigma::Known(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<NoiseSigma, E> {
                if v == "estimate" {
                    Ok(NoiseSigma::Estimate)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Every tunable of the denoiser. Field names are the JSON config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiseConfig {
    /// Odd patch side `n`; patches have `n^2` pixels.
    pub patch_n: usize,
    pub clusters_k: usize,
    /// Patches per collaboration group, self included.
    pub collab_t: usize,
    pub collab_rounds: usize,
    /// Atoms per dictionary; `None` means `2 n^2`.
    pub dict_atoms: Option<usize>,
    pub ksvd_iters: usize,
    pub ksvd_sparsity: usize,
    pub max_support: usize,
    pub beam_width: usize,
    pub noise_sigma: NoiseSigma,
    pub seed: u64,
    pub train_sample_cap: usize,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            patch_n: 7,
            clusters_k: 5,
            collab_t: 10,
            collab_rounds: 1,
            dict_atoms: None,
            ksvd_iters: 20,
            ksvd_sparsity: 4,
            max_support: 8,
            beam_width: 4,
            noise_sigma: NoiseSigma::Estimate,
            seed: 0,
            train_sample_cap: 20_000,
        }
    }
}

impl DenoiseConfig {
    /// Parses a JSON object, rejecting unknown keys.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn patch_dim(&self) -> usize {
        self.patch_n * self.patch_n
    }

    pub fn atoms(&self) -> usize {
        self.dict_atoms.unwrap_or(2 * self.patch_dim())
    }

    /// Copy with `dict_atoms` filled in.
    pub fn resolved(&self) -> Self {
        Self {
            dict_atoms: Some(self.atoms()),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.patch_dim();
        let fail = |msg: String| Err(Error::Config(msg));
        if self.patch_n < 3 || self.patch_n % 2 == 0 {
            return fail(format!("patch_n {} must be odd and at least 3", self.patch_n));
        }
        if self.clusters_k == 0 {
            return fail("clusters_k must be at least 1".into());
        }
        if self.collab_t == 0 {
            return fail("collab_t must be at least 1".into());
        }
        if self.atoms() <= r {
            return fail(format!("dict_atoms {} must exceed patch_n^2 = {r}", self.atoms()));
        }
        if self.ksvd_iters == 0 {
            return fail("ksvd_iters must be at least 1".into());
        }
        if self.ksvd_sparsity == 0 || self.ksvd_sparsity > r {
            return fail(format!("ksvd_sparsity {} outside 1..={r}", self.ksvd_sparsity));
        }
        if self.max_support == 0 || self.max_support > r {
            return fail(format!("max_support {} outside 1..={r}", self.max_support));
        }
        if self.beam_width == 0 {
            return fail("beam_width must be at least 1".into());
        }
        if self.train_sample_cap == 0 {
            return fail("train_sample_cap must be at least 1".into());
        }
        if let NoiseSigma::Known(s) = self.noise_sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return fail(format!("noise_sigma {s} must be a non-negative number"));
            }
        }
        Ok(())
    }
}

/// Output of [`denoise_image`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseReport {
    pub denoised: Image,
    pub per_cluster_sizes: Vec<usize>,
    pub wall_time_s: f64,
    /// Noise standard deviation the solver used, in intensity units.
    pub sigma_used: f64,
    pub config_echo: DenoiseConfig,
}

/// Robust noise level from the finest diagonal Haar detail band:
/// `median(|hh|) / 0.6745` with `hh = (a - b - c + d) / 2` over 2x2 blocks.
pub fn estimate_sigma(noisy: &Image) -> f64 {
    let (h, w) = noisy.dims();
    let mut detail = Vec::with_capacity((h / 2) * (w / 2));
    for r in (0..h.saturating_sub(1)).step_by(2) {
        for c in (0..w.saturating_sub(1)).step_by(2) {
            let v = (noisy.get(r, c) - noisy.get(r, c + 1) - noisy.get(r + 1, c) + noisy.get(r + 1, c + 1)) / 2.0;
            detail.push(v.abs());
        }
    }
    if detail.is_empty() {
        return 0.0;
    }
    detail.sort_by(f64::total_cmp);
    let n = detail.len();
    let median = if n % 2 == 1 {
        detail[n / 2]
    } else {
        0.5 * (detail[n / 2 - 1] + detail[n / 2])
    };
    median / 0.6745
}

/// k-means that backs off to fewer clusters when the patches have fewer
/// distinct values than requested.
fn cluster_patches(patches: &PatchSet, cfg: &DenoiseConfig) -> Result<ClusterModel> {
    let seed = derive_seed(cfg.seed, 1);
    let mut k = cfg.clusters_k.min(patches.len());
    loop {
        match kmeans(patches.vectors(), patches.patch_dim(), k, seed, DEFAULT_MAX_ITER, DEFAULT_TOL) {
            Err(Error::Degenerate(_)) if k > 1 => k -= 1,
            other => return other,
        }
    }
}

/// Starting atoms when the cluster cannot supply enough distinct signals:
/// every distinct direction it has, then seeded random unit vectors.
fn fallback_init(signals: &[f64], dim: usize, num_atoms: usize, seed: u64) -> Result<Dictionary> {
    use crate::dictlearn::is_new_direction;
    let mut atoms: Vec<f64> = Vec::with_capacity(num_atoms * dim);
    for s in signals.chunks_exact(dim) {
        if atoms.len() == num_atoms * dim {
            break;
        }
        let n = norm_sq(s).sqrt();
        if n > 0.0 {
            let u: Vec<f64> = s.iter().map(|v| v / n).collect();
            if is_new_direction(&atoms, dim, &u) {
                atoms.extend(u);
            }
        }
    }
    let mut rng = seeded(seed);
    while atoms.len() < num_atoms * dim {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm_sq(&g).sqrt();
        let u: Vec<f64> = g.iter().map(|v| v / n).collect();
        if is_new_direction(&atoms, dim, &u) {
            atoms.extend(u);
        }
    }
    Dictionary::new(dim, num_atoms, atoms)
}

fn train_dictionary(cluster: &[f64], dim: usize, cfg: &DenoiseConfig, seed: u64) -> Result<Dictionary> {
    let n = cluster.len() / dim;
    let training: Vec<f64> = if n > cfg.train_sample_cap {
        let mut picks = sample(&mut seeded(derive_seed(seed, 2)), n, cfg.train_sample_cap).into_vec();
        picks.sort_unstable();
        picks
            .iter()
            .flat_map(|&i| cluster[i * dim..(i + 1) * dim].iter().copied())
            .collect()
    } else {
        cluster.to_vec()
    };
    let m = cfg.atoms();
    match ksvd_train(&training, dim, m, cfg.ksvd_sparsity, cfg.ksvd_iters, derive_seed(seed, 3)) {
        Err(Error::TooFewVectors { .. }) | Err(Error::Degenerate(_)) => {
            let init = fallback_init(&training, dim, m, derive_seed(seed, 4))?;
            ksvd_refine(&training, init, cfg.ksvd_sparsity, cfg.ksvd_iters).map(|(d, _)| d)
        }
        other => other,
    }
}

/// Denoises one cluster and returns its patches back in intensity units.
fn process_cluster(
    patches: &PatchSet,
    members: &[usize],
    sigma: f64,
    cfg: &DenoiseConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let dim = patches.patch_dim();
    let data: Vec<f64> = members
        .iter()
        .flat_map(|&i| patches.vector(i).iter().copied())
        .collect();
    let t0 = Instant::now();
    let dict = train_dictionary(&data, dim, cfg, seed)?;
    log::debug!("cluster of {}: dictionary in {:.2}s", members.len(), t0.elapsed().as_secs_f64());

    let noise_variances: Vec<f64> = members
        .iter()
        .map(|&i| (sigma / patches.scale(i)).powi(2))
        .collect();
    let mean_energy = data.chunks_exact(dim).map(norm_sq).sum::<f64>() / members.len() as f64;
    let expected = cfg.ksvd_sparsity as f64;
    let coeff_variance = if mean_energy > 0.0 { mean_energy / expected } else { 1.0 };
    let params = CollabParams {
        t: cfg.collab_t,
        rounds: cfg.collab_rounds,
        max_support: cfg.max_support,
        beam_width: cfg.beam_width,
        coeff_variance,
        initial_lambda: (expected / dict.num_atoms() as f64).min(1.0),
    };
    let t0 = Instant::now();
    let solutions = denoise_cluster(&data, dim, &dict, &noise_variances, &params)?;
    log::debug!("cluster of {}: sparse coding in {:.2}s", members.len(), t0.elapsed().as_secs_f64());
    let mut out = Vec::with_capacity(data.len());
    for (sol, &i) in solutions.iter().zip(members) {
        let scale = patches.scale(i);
        out.extend(dict.synthesize(&sol.coeffs).into_iter().map(|v| v * scale));
    }
    Ok(out)
}

/// Runs the full denoiser on `noisy`.
pub fn denoise_image(noisy: &Image, cfg: &DenoiseConfig) -> Result<DenoiseReport> {
    cfg.validate()?;
    let (h, w) = noisy.dims();
    if h < cfg.patch_n || w < cfg.patch_n {
        return Err(Error::InvalidImage(format!(
            "{w}x{h} image is smaller than {n}x{n} patches",
            n = cfg.patch_n
        )));
    }
    let start = Instant::now();
    let sigma = match cfg.noise_sigma {
        NoiseSigma::Known(s) => s,
        NoiseSigma::Estimate => estimate_sigma(noisy),
    }
    .max(SIGMA_FLOOR * noisy.range_max());

    let patches = extract_patches(noisy, cfg.patch_n)?;
    let model = cluster_patches(&patches, cfg)?;
    log::debug!("clustered into {:?} after {:.2}s", model.sizes(), start.elapsed().as_secs_f64());
    let members = model.members();

    let denoised_parts: Vec<Vec<f64>> = members
        .par_iter()
        .enumerate()
        .map(|(c, m)| process_cluster(&patches, m, sigma, cfg, derive_seed(cfg.seed, 100 + c as u64)))
        .collect::<Result<_>>()?;

    let dim = patches.patch_dim();
    let mut vectors = vec![0.0; patches.len() * dim];
    for (m, part) in members.iter().zip(&denoised_parts) {
        for (&i, v) in m.iter().zip(part.chunks_exact(dim)) {
            vectors[i * dim..(i + 1) * dim].copy_from_slice(v);
        }
    }
    let denoised = aggregate(&patches.with_vectors(vectors)?, (h, w), noisy.range_max())?;
    Ok(DenoiseReport {
        denoised,
        per_cluster_sizes: members.iter().map(Vec::len).collect(),
        wall_time_s: start.elapsed().as_secs_f64(),
        sigma_used: sigma,
        config_echo: cfg.resolved(),
    })
}
