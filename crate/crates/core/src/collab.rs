//! Collaboration among similar patches of one cluster.
//!
//! Each patch picks its `t - 1` nearest cluster mates. Their influence is
//! inversely proportional to distance and normalized so that the neighbours
//! share half of the total weight and the patch itself keeps the other half.
//! The weighted blend of activity posteriors becomes the patch's prior for a
//! fresh sparse solve.

use rayon::prelude::*;

use crate::dictlearn::Dictionary;
use crate::linalg::{dist_sq, norm_sq};
use crate::sparsebayes::{ActivityPrior, BayesianPursuit, SparseSolution};
use crate::{Error, Result};

/// Distances below this are treated as this when inverted.
pub const DISTANCE_FLOOR: f64 = 1e-8;
/// Share of the total weight a patch gives itself when it has neighbours.
pub const SELF_WEIGHT: f64 = 0.5;
/// Lower bound on a collaborated prior, so every atom stays reachable.
pub const PRIOR_FLOOR: f64 = 1e-6;

/// Patch `p`'s collaboration neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct CollabGroup {
    pub patch_index: usize,
    pub neighbor_indices: Vec<usize>,
    pub distances: Vec<f64>,
    /// Neighbour weights in `neighbor_indices` order, then the self weight.
    pub weights: Vec<f64>,
}

impl CollabGroup {
    pub fn new(patch_index: usize, neighbor_indices: Vec<usize>, distances: Vec<f64>) -> Self {
        let weights = collab_weights(&distances);
        Self {
            patch_index,
            neighbor_indices,
            distances,
            weights,
        }
    }
}

fn check_cluster(vectors: &[f64], dim: usize, p: usize, t: usize) -> Result<usize> {
    if dim == 0 || vectors.len() % dim != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} values are not whole vectors of length {dim}",
            vectors.len()
        )));
    }
    let n = vectors.len() / dim;
    if p >= n {
        return Err(Error::InvalidArgument(format!("patch {p} outside cluster of {n}")));
    }
    if t == 0 || t > n {
        return Err(Error::InvalidArgument(format!(
            "t = {t} collaborating patches for a cluster of {n}"
        )));
    }
    Ok(n)
}

/// The `t - 1` vectors closest to vector `p` (Euclidean), excluding `p`.
/// Ties go to the lower index. Exhaustive scan.
pub fn nearest_patches(vectors: &[f64], dim: usize, p: usize, t: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = check_cluster(vectors, dim, p, t)?;
    let target = &vectors[p * dim..(p + 1) * dim];
    let mut all: Vec<(f64, usize)> = (0..n)
        .filter(|&j| j != p)
        .map(|j| (dist_sq(&vectors[j * dim..(j + 1) * dim], target), j))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(t - 1);
    Ok(all.into_iter().map(|(d, j)| (j, d.sqrt())).unzip())
}

const QUERY_BLOCK: usize = 64;

/// [`nearest_patches`] for every vector of the cluster at once.
///
/// Distances are screened in blocks through `|a|^2 + |b|^2 - 2 a.b` with a
/// matrix product; every candidate within the rounding margin of the
/// `t - 1`-th screened distance is then measured directly, so the result is
/// exactly the exhaustive one.
pub fn all_nearest_patches(vectors: &[f64], dim: usize, t: usize) -> Result<Vec<(Vec<usize>, Vec<f64>)>> {
    let n = check_cluster(vectors, dim, 0, t)?;
    let k = t - 1;
    if k == 0 {
        return Ok(vec![(Vec::new(), Vec::new()); n]);
    }
    let norms: Vec<f64> = vectors.chunks_exact(dim).map(norm_sq).collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let starts: Vec<usize> = (0..n).step_by(QUERY_BLOCK).collect();
    let blocks: Vec<Vec<(Vec<usize>, Vec<f64>)>> = starts
        .into_par_iter()
        .map(|q0| {
            let rows = QUERY_BLOCK.min(n - q0);
            let mut gram = vec![0.0; rows * n];
            // SAFETY: `a` is `rows x dim` row-major inside `vectors`, `b` is
            // the `dim x n` transpose view of `vectors`, `c` is `rows x n`
            // row-major; all strides stay inside the slices.
            unsafe {
                matrixmultiply::dgemm(
                    rows,
                    dim,
                    n,
                    1.0,
                    vectors[q0 * dim..].as_ptr(),
                    dim as isize,
                    1,
                    vectors.as_ptr(),
                    1,
                    dim as isize,
                    0.0,
                    gram.as_mut_ptr(),
                    n as isize,
                    1,
                );
            }
            let mut screened = vec![0.0; n];
            (0..rows)
                .map(|r| {
                    let p = q0 + r;
                    let g = &gram[r * n..(r + 1) * n];
                    for (j, (s, (&gj, &nj))) in screened.iter_mut().zip(g.iter().zip(&norms)).enumerate() {
                        *s = if j == p { f64::INFINITY } else { norms[p] + nj - 2.0 * gj };
                    }
                    let mut sorted = screened.clone();
                    let (_, &mut kth, _) = sorted.select_nth_unstable_by(k - 1, f64::total_cmp);
                    let margin = 8.0 * (dim as f64 + 2.0) * f64::EPSILON * (norms[p] + max_norm) + f64::MIN_POSITIVE;
                    let target = &vectors[p * dim..(p + 1) * dim];
                    let mut cands: Vec<(f64, usize)> = screened
                        .iter()
                        .enumerate()
                        .filter(|&(_, &s)| s <= kth + margin)
                        .map(|(j, _)| (dist_sq(&vectors[j * dim..(j + 1) * dim], target), j))
                        .collect();
                    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    cands.truncate(k);
                    cands.into_iter().map(|(d, j)| (j, d.sqrt())).unzip()
                })
                .collect()
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

/// Inverse-distance weights: neighbours share 0.5 in proportion to
/// `1 / max(distance, DISTANCE_FLOOR)`, and the self weight 0.5 is appended
/// last. With no neighbours the single self weight is 1.
pub fn collab_weights(distances: &[f64]) -> Vec<f64> {
    if distances.is_empty() {
        return vec![1.0];
    }
    let raw: Vec<f64> = distances.iter().map(|d| 1.0 / d.max(DISTANCE_FLOOR)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|a| SELF_WEIGHT * a / total).collect();
    w.push(SELF_WEIGHT);
    w
}

/// Weighted blend of activity probabilities. `weights` lists the neighbours
/// in `neighbor_lambdas` order followed by the self weight.
pub fn update_lambda(neighbor_lambdas: &[&[f64]], self_lambda: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != neighbor_lambdas.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} neighbours plus self",
            weights.len(),
            neighbor_lambdas.len()
        )));
    }
    let m = self_lambda.len();
    if let Some(bad) = neighbor_lambdas.iter().find(|l| l.len() != m) {
        return Err(Error::DimensionMismatch(format!(
            "neighbour lambda of length {} vs {m}",
            bad.len()
        )));
    }
    let self_w = weights[neighbor_lambdas.len()];
    let mut out: Vec<f64> = self_lambda.iter().map(|l| self_w * l).collect();
    for (lam, &w) in neighbor_lambdas.iter().zip(weights) {
        for (o, l) in out.iter_mut().zip(lam.iter()) {
            *o += w * l;
        }
    }
    out.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(out)
}

/// Solver and collaboration settings for one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct CollabParams {
    /// Patches per collaboration group, self included.
    pub t: usize,
    pub rounds: usize,
    pub max_support: usize,
    pub beam_width: usize,
    pub coeff_variance: f64,
    /// Uniform activity probability for the first solve.
    pub initial_lambda: f64,
}

/// Sparse codes every patch of a cluster, then refines them through
/// `rounds` of collaboration. Rounds are synchronous: every patch reads the
/// posteriors produced by the previous round.
pub fn denoise_cluster(
    vectors: &[f64],
    dim: usize,
    dict: &Dictionary,
    noise_variances: &[f64],
    params: &CollabParams,
) -> Result<Vec<SparseSolution>> {
    if dim != dict.atom_dim() || vectors.len() % dim != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} values for atoms of length {}",
            vectors.len(),
            dict.atom_dim()
        )));
    }
    let n = vectors.len() / dim;
    if n == 0 {
        return Err(Error::InvalidArgument("empty cluster".into()));
    }
    if noise_variances.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} noise variances for {n} patches",
            noise_variances.len()
        )));
    }
    let m = dict.num_atoms();
    let pursuit = BayesianPursuit::new(dict, params.beam_width);
    let solve = |p: usize, lambda: Vec<f64>| -> Result<SparseSolution> {
        let prior = ActivityPrior::new(lambda, params.coeff_variance, noise_variances[p])?;
        pursuit.estimate(&vectors[p * dim..(p + 1) * dim], &prior, params.max_support)
    };

    let lambda0 = vec![params.initial_lambda.clamp(PRIOR_FLOOR, 1.0); m];
    let mut solutions: Vec<SparseSolution> = (0..n)
        .into_par_iter()
        .map(|p| solve(p, lambda0.clone()))
        .collect::<Result<_>>()?;

    let t = params.t.min(n);
    if params.rounds == 0 || t <= 1 {
        return Ok(solutions);
    }
    let started = std::time::Instant::now();
    let groups: Vec<CollabGroup> = all_nearest_patches(vectors, dim, t)?
        .into_iter()
        .enumerate()
        .map(|(p, (idx, dist))| CollabGroup::new(p, idx, dist))
        .collect();
    log::debug!("neighbours for {n} patches in {:.2}s", started.elapsed().as_secs_f64());

    for _ in 0..params.rounds {
        let previous = &solutions;
        let next: Vec<SparseSolution> = groups
            .par_iter()
            .map(|g| {
                let neigh: Vec<&[f64]> = g
                    .neighbor_indices
                    .iter()
                    .map(|&j| previous[j].posterior_lambda.as_slice())
                    .collect();
                let mut lambda = update_lambda(&neigh, &previous[g.patch_index].posterior_lambda, &g.weights)?;
                lambda.iter_mut().for_each(|l| *l = l.max(PRIOR_FLOOR));
                solve(g.patch_index, lambda)
            })
            .collect::<Result<_>>()?;
        solutions = next;
    }
    Ok(solutions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_hand_case() {
        let w = collab_weights(&[1.0, 2.0]);
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((w[1] - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(w[2], 0.5);
    }

    #[test]
    fn weights_symmetric_and_empty() {
        let w = collab_weights(&[0.7, 0.7]);
        assert!((w[0] - 0.25).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15);
        assert_eq!(collab_weights(&[]), vec![1.0]);
    }

    #[test]
    fn zero_distance_is_floored() {
        let w = collab_weights(&[0.0, 1.0]);
        assert!(w.iter().all(|v| v.is_finite()));
        assert!(w[0] > w[1]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_hand_case() {
        let out = update_lambda(&[&[0.4, 0.6]], &[0.8, 0.2], &[0.5, 0.5]).unwrap();
        assert!((out[0] - 0.6).abs() < 1e-12 && (out[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn lambda_length_errors() {
        assert!(update_lambda(&[&[0.4]], &[0.8, 0.2], &[0.5, 0.5]).is_err());
        assert!(update_lambda(&[&[0.4, 0.1]], &[0.8, 0.2], &[1.0]).is_err());
    }

    #[test]
    fn nearest_simple() {
        // p = 0 at origin; distances 0.5 and 2.0
        let v = [0.0, 0.0, 0.5, 0.0, 0.0, 2.0];
        let (idx, d) = nearest_patches(&v, 2, 0, 2).unwrap();
        assert_eq!(idx, vec![1]);
        assert_eq!(d, vec![0.5]);
        let (idx, d) = nearest_patches(&v, 2, 0, 1).unwrap();
        assert!(idx.is_empty() && d.is_empty());
        assert!(nearest_patches(&v, 2, 0, 4).is_err());
    }

    #[test]
    fn nearest_ties_lower_index() {
        let v = [0.0, 1.0, -1.0, 1.0];
        let (idx, _) = nearest_patches(&v, 1, 0, 2).unwrap();
        assert_eq!(idx, vec![1]);
        let all = all_nearest_patches(&v, 1, 4).unwrap();
        assert_eq!(all[0].0, vec![1, 2, 3]);
        assert_eq!(all[3].0, vec![1, 0, 2]);
    }
}
