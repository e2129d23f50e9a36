use super::{ActivityPrior, SparseSolution, LAMBDA_CEIL};
use crate::dictlearn::Dictionary;
use crate::linalg::{dot, norm_sq, GrowingCholesky};
use crate::rng::mix64;
use crate::{Error, Result};

pub const DEFAULT_BEAM_WIDTH: usize = 4;

/// One support in the beam, with the factor of `D_S^T D_S + rho I`.
#[derive(Clone)]
struct Node {
    support: Vec<usize>,
    chol: GrowingCholesky,
    /// `L^{-1} D_S^T y`
    z: Vec<f64>,
    score: f64,
    key: u64,
}

struct Candidate {
    score: f64,
    parent: usize,
    atom: usize,
    key: u64,
    /// new pivot and whitened correlation, reused when the candidate is kept
    pivot_sq: f64,
    z_new: f64,
}

/// Running per-atom activity mass, rescaled whenever a better score appears.
struct Marginals {
    reference: f64,
    total: f64,
    mass: Vec<f64>,
}

impl Marginals {
    fn new(m: usize) -> Self {
        // the empty support has relative score 0
        Self {
            reference: 0.0,
            total: 1.0,
            mass: vec![0.0; m],
        }
    }

    fn add(&mut self, score: f64, atoms: impl Iterator<Item = usize>) {
        if score > self.reference {
            let f = (self.reference - score).exp();
            self.total *= f;
            self.mass.iter_mut().for_each(|v| *v *= f);
            self.reference = score;
        }
        let gap = score - self.reference;
        // below exp(-48) of the leading mass, the share is not representable
        // in the normalized marginals anyway
        if gap < -48.0 {
            return;
        }
        let w = gap.exp();
        self.total += w;
        for a in atoms {
            self.mass[a] += w;
        }
    }

    fn finish(self) -> Vec<f64> {
        let total = self.total;
        self.mass.into_iter().map(|v| (v / total).clamp(0.0, 1.0)).collect()
    }
}

#[inline]
fn atom_key(j: usize) -> u64 {
    mix64(0xC0F1_B000 ^ j as u64)
}

/// Beam-search Bayesian matching pursuit over one dictionary.
///
/// Holds the dictionary's Gram matrix, so construct once per dictionary and
/// reuse across signals.
#[derive(Debug, Clone)]
pub struct BayesianPursuit<'a> {
    dict: &'a Dictionary,
    gram: Vec<f64>,
    beam_width: usize,
}

impl<'a> BayesianPursuit<'a> {
    pub fn new(dict: &'a Dictionary, beam_width: usize) -> Self {
        Self {
            dict,
            gram: dict.gram(),
            beam_width: beam_width.max(1),
        }
    }

    pub fn dictionary(&self) -> &Dictionary {
        self.dict
    }

    /// Greedy support search under the prior.
    ///
    /// Every level extends each beam support by one atom, scores the
    /// extensions by log posterior, and keeps the best `beam_width` distinct
    /// supports. The search ends when no extension beats the best support
    /// found so far or `max_support` is reached. Activity posteriors are the
    /// posterior-weighted share of every scored support that contains the
    /// atom.
    pub fn estimate(
        &self,
        signal: &[f64],
        prior: &ActivityPrior,
        max_support: usize,
    ) -> Result<SparseSolution> {
        let r = self.dict.atom_dim();
        let m = self.dict.num_atoms();
        if signal.len() != r {
            return Err(Error::DimensionMismatch(format!(
                "signal of length {} for atoms of length {r}",
                signal.len()
            )));
        }
        if prior.lambda.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{} activity probabilities for {m} atoms",
                prior.lambda.len()
            )));
        }
        if max_support == 0 || max_support > r {
            return Err(Error::InvalidArgument(format!(
                "max_support {max_support} outside 1..={r}"
            )));
        }
        prior.validate()?;

        let sigma2 = prior.noise_variance;
        let rho = sigma2 / prior.coeff_variance;
        let half_ln_rho = 0.5 * rho.ln();
        let min_pivot = 1e-12 * (1.0 + rho);
        let corr = self.dict.correlate(signal);
        let logit: Vec<Option<f64>> = prior
            .lambda
            .iter()
            .map(|&l| {
                (l > 0.0).then(|| {
                    let l = l.min(LAMBDA_CEIL);
                    l.ln() - (-l).ln_1p()
                })
            })
            .collect();

        let mut marginals = Marginals::new(m);
        let mut beam = vec![Node {
            support: Vec::new(),
            chol: GrowingCholesky::with_capacity(max_support),
            z: Vec::new(),
            score: 0.0,
            key: 0,
        }];
        let mut best = beam[0].clone();
        let mut cross = vec![0.0; max_support];
        let mut w = vec![0.0; max_support];

        let mut candidates: Vec<Candidate> = Vec::with_capacity(self.beam_width * m);
        for _level in 0..max_support {
            candidates.clear();
            for (pi, node) in beam.iter().enumerate() {
                let s = node.support.len();
                for j in 0..m {
                    let Some(lj) = logit[j] else { continue };
                    if node.support.contains(&j) {
                        continue;
                    }
                    for (c, &a) in cross.iter_mut().zip(&node.support) {
                        *c = self.gram[a * m + j];
                    }
                    node.chol.forward(&cross[..s], &mut w[..s]);
                    let pivot_sq = self.gram[j * m + j] + rho - norm_sq(&w[..s]);
                    if !(pivot_sq > min_pivot) {
                        continue;
                    }
                    let z_new = (corr[j] - dot(&w[..s], &node.z)) / pivot_sq.sqrt();
                    let score = node.score + 0.5 * z_new * z_new / sigma2 - 0.5 * pivot_sq.ln()
                        + half_ln_rho
                        + lj;
                    candidates.push(Candidate {
                        score,
                        parent: pi,
                        atom: j,
                        key: node.key ^ atom_key(j),
                        pivot_sq,
                        z_new,
                    });
                }
            }
            if candidates.is_empty() {
                break;
            }
            // one entry per distinct support, keeping the best-scored route
            candidates.sort_unstable_by(|a, b| {
                a.key.cmp(&b.key).then(b.score.total_cmp(&a.score))
            });
            candidates.dedup_by_key(|c| c.key);
            for c in &candidates {
                let parent = &beam[c.parent];
                marginals.add(c.score, parent.support.iter().copied().chain([c.atom]));
            }
            let by_rank = |a: &Candidate, b: &Candidate| {
                b.score.total_cmp(&a.score).then(a.key.cmp(&b.key))
            };
            if candidates.len() > self.beam_width {
                candidates.select_nth_unstable_by(self.beam_width, by_rank);
                candidates.truncate(self.beam_width);
            }
            candidates.sort_unstable_by(by_rank);
            if candidates[0].score <= best.score {
                break;
            }
            let next: Vec<Node> = candidates
                .iter()
                .take(self.beam_width)
                .map(|c| {
                    let parent = &beam[c.parent];
                    let mut node = parent.clone();
                    let cr: Vec<f64> = parent.support.iter().map(|&a| self.gram[a * m + c.atom]).collect();
                    node.chol
                        .push(&cr, self.gram[c.atom * m + c.atom] + rho, 0.0)
                        .expect("pivot checked when scoring");
                    node.support.push(c.atom);
                    node.z.push(c.z_new);
                    node.score = c.score;
                    node.key = c.key;
                    debug_assert!(c.pivot_sq > 0.0);
                    node
                })
                .collect();
            best = next[0].clone();
            beam = next;
        }

        let mut coeffs = vec![0.0; m];
        if !best.support.is_empty() {
            let rhs: Vec<f64> = best.support.iter().map(|&a| corr[a]).collect();
            for (&a, x) in best.support.iter().zip(best.chol.solve(&rhs)) {
                coeffs[a] = x;
            }
        }

        let yy = norm_sq(signal);
        let base_likelihood =
            -0.5 * (r as f64 * (2.0 * std::f64::consts::PI * sigma2).ln() + yy / sigma2);
        let base_prior: f64 = prior
            .lambda
            .iter()
            .map(|&l| (-l.min(LAMBDA_CEIL)).ln_1p())
            .sum();
        Ok(SparseSolution::from_coeffs(
            coeffs,
            marginals.finish(),
            base_likelihood + base_prior + best.score,
        ))
    }
}

/// One-off solve with the default beam width.
pub fn bmp_estimate(
    dict: &Dictionary,
    signal: &[f64],
    prior: &ActivityPrior,
    max_support: usize,
) -> Result<SparseSolution> {
    BayesianPursuit::new(dict, DEFAULT_BEAM_WIDTH).estimate(signal, prior, max_support)
}
