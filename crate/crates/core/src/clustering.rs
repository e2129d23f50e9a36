//! k-means over normalized patch vectors.
//!
//! Lloyd iterations from a seeded k-means++ start. Assignment is parallel
//! over vectors; centroid sums are accumulated in vector order so results do
//! not depend on the thread count.

use rand::Rng;
use rayon::prelude::*;

use crate::linalg::dist_sq;
use crate::rng::seeded;
use crate::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    dim: usize,
    centroids: Vec<f64>,
    assignments: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub inertia_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Member indices of every cluster, in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &a) in self.assignments.iter().enumerate() {
            out[a].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members().iter().map(Vec::len).collect()
    }

    /// Nearest centroid; ties go to the lowest index.
    pub fn assign(&self, vector: &[f64]) -> Result<usize> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for centroids of length {}",
                vector.len(),
                self.dim
            )));
        }
        Ok(nearest(&self.centroids, self.dim, vector).0)
    }
}

fn nearest(centroids: &[f64], dim: usize, v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let d = dist_sq(c, v);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_init(data: &[f64], dim: usize, k: usize, seed: u64) -> Vec<f64> {
    let n = data.len() / dim;
    let mut rng = seeded(seed);
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(&data[first * dim..(first + 1) * dim]);
    let mut d2: Vec<f64> = data
        .chunks_exact(dim)
        .map(|v| dist_sq(v, &centroids[..dim]))
        .collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = data[pick * dim..(pick + 1) * dim].to_vec();
        for (v, d) in data.chunks_exact(dim).zip(d2.iter_mut()) {
            *d = d.min(dist_sq(v, &c));
        }
        centroids.extend_from_slice(&c);
    }
    centroids
}

fn assign_all(data: &[f64], dim: usize, centroids: &[f64]) -> (Vec<usize>, Vec<f64>) {
    data.par_chunks_exact(dim)
        .map(|v| nearest(centroids, dim, v))
        .unzip()
}

/// Moves each empty cluster's centroid onto the point farthest from its own
/// centroid. Returns whether anything was re-seeded.
fn reseed_empty(
    data: &[f64],
    dim: usize,
    centroids: &mut [f64],
    assignments: &mut [usize],
    dists: &mut [f64],
) -> bool {
    let k = centroids.len() / dim;
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a] += 1;
    }
    let mut changed = false;
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        // farthest point whose cluster can spare it
        let far = (0..dists.len())
            .filter(|&i| counts[assignments[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dists[b] >= dists[i] => Some(b),
                _ => Some(i),
            });
        let Some(i) = far else { continue };
        centroids[j * dim..(j + 1) * dim].copy_from_slice(&data[i * dim..(i + 1) * dim]);
        counts[assignments[i]] -= 1;
        counts[j] += 1;
        assignments[i] = j;
        dists[i] = 0.0;
        changed = true;
    }
    changed
}

fn update_centroids(data: &[f64], dim: usize, assignments: &[usize], centroids: &mut [f64]) -> f64 {
    let k = centroids.len() / dim;
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (v, &a) in data.chunks_exact(dim).zip(assignments) {
        counts[a] += 1;
        for (s, x) in sums[a * dim..(a + 1) * dim].iter_mut().zip(v) {
            *s += x;
        }
    }
    let mut shift = 0.0f64;
    for j in 0..k {
        if counts[j] == 0 {
            continue;
        }
        let inv = 1.0 / counts[j] as f64;
        let new: Vec<f64> = sums[j * dim..(j + 1) * dim].iter().map(|s| s * inv).collect();
        let c = &mut centroids[j * dim..(j + 1) * dim];
        shift = shift.max(dist_sq(c, &new).sqrt());
        c.copy_from_slice(&new);
    }
    shift
}

/// Clusters `data` (contiguous vectors of length `dim`) into `k` groups.
pub fn kmeans(
    data: &[f64],
    dim: usize,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<ClusterModel> {
    if dim == 0 || data.len() % dim != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} values do not split into vectors of length {dim}",
            data.len()
        )));
    }
    if k == 0 || max_iter == 0 || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "k={k}, max_iter={max_iter}, tol={tol}"
        )));
    }
    let n = data.len() / dim;
    if n < k {
        return Err(Error::TooFewVectors { needed: k, got: n });
    }

    let mut centroids = plus_plus_init(data, dim, k, seed);
    let mut inertia_trace = Vec::new();
    let mut iter = 0;
    let (assignments, _) = loop {
        let (mut assignments, mut dists) = assign_all(data, dim, &centroids);
        reseed_empty(data, dim, &mut centroids, &mut assignments, &mut dists);
        inertia_trace.push(dists.iter().sum());
        iter += 1;
        let shift = update_centroids(data, dim, &assignments, &mut centroids);
        if shift < tol || iter >= max_iter {
            // final assignment against the final centroids
            let (mut a, mut d) = assign_all(data, dim, &centroids);
            if reseed_empty(data, dim, &mut centroids, &mut a, &mut d) {
                update_centroids(data, dim, &a, &mut centroids);
                let (a2, d2) = assign_all(data, dim, &centroids);
                a = a2;
                d = d2;
            }
            break (a, d);
        }
    };

    let mut present = vec![false; k];
    assignments.iter().for_each(|&a| present[a] = true);
    if present.iter().any(|p| !p) {
        return Err(Error::Degenerate(format!(
            "fewer than {k} distinct vectors, cannot fill every cluster"
        )));
    }
    Ok(ClusterModel {
        dim,
        centroids,
        assignments,
        inertia_trace,
    })
}
