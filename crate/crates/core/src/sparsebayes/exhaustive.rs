use super::ActivityPrior;
use crate::dictlearn::Dictionary;
use crate::linalg::cholesky;
use crate::{Error, Result};

pub const MAX_ENUM_ATOMS: usize = 16;
pub const MAX_ENUM_SUPPORT: usize = 4;

/// Exact posterior over every support of size at most `max_support`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustivePosterior {
    /// Marginal probability that each atom is active.
    pub posterior_lambda: Vec<f64>,
    /// Most probable support (ascending indices; empty if the null model wins).
    pub map_support: Vec<usize>,
    /// Normalized probability of every enumerated support.
    pub supports: Vec<(Vec<usize>, f64)>,
}

/// `log N(y; 0, noise I + coeff D_S D_S^T)` evaluated on the full covariance.
fn log_likelihood(dict: &Dictionary, signal: &[f64], support: &[usize], prior: &ActivityPrior) -> f64 {
    let r = dict.atom_dim();
    let mut cov = vec![0.0; r * r];
    for a in 0..r {
        cov[a * r + a] = prior.noise_variance;
    }
    for &j in support {
        let d = dict.atom(j);
        for a in 0..r {
            for b in 0..r {
                cov[a * r + b] += prior.coeff_variance * d[a] * d[b];
            }
        }
    }
    let l = cholesky(&cov, r).expect("noise term keeps the covariance positive definite");
    // solve L w = y, quadratic form is |w|^2
    let mut w = vec![0.0; r];
    for i in 0..r {
        let mut s = signal[i];
        for k in 0..i {
            s -= l[i * r + k] * w[k];
        }
        w[i] = s / l[i * r + i];
    }
    let quad: f64 = w.iter().map(|v| v * v).sum();
    let logdet: f64 = (0..r).map(|i| 2.0 * l[i * r + i].ln()).sum();
    -0.5 * (r as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
}

fn log_prior(support: &[usize], lambda: &[f64]) -> f64 {
    lambda
        .iter()
        .enumerate()
        .map(|(i, &l)| if support.contains(&i) { l.ln() } else { (1.0 - l).ln() })
        .sum()
}

/// Enumerates all index sets of size `<= k` from `0..m`, by size then lexicographically.
fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 0..=k.min(m) {
        rec(0, m, size, &mut Vec::new(), &mut out);
    }
    out
}

/// Exact Bernoulli-Gaussian support posterior by brute-force enumeration.
pub fn support_posterior_exhaustive(
    dict: &Dictionary,
    signal: &[f64],
    prior: &ActivityPrior,
    max_support: usize,
) -> Result<ExhaustivePosterior> {
    let m = dict.num_atoms();
    if m > MAX_ENUM_ATOMS || max_support > MAX_ENUM_SUPPORT {
        return Err(Error::EnumerationBound(format!(
            "{m} atoms / support {max_support}, limits are {MAX_ENUM_ATOMS} / {MAX_ENUM_SUPPORT}"
        )));
    }
    if signal.len() != dict.atom_dim() || prior.lambda.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "signal {} / lambda {} for a {}x{m} dictionary",
            signal.len(),
            prior.lambda.len(),
            dict.atom_dim()
        )));
    }
    prior.validate()?;

    let scored: Vec<(Vec<usize>, f64)> = subsets(m, max_support)
        .into_iter()
        .map(|s| {
            let lp = log_prior(&s, &prior.lambda);
            let score = if lp == f64::NEG_INFINITY {
                lp
            } else {
                lp + log_likelihood(dict, signal, &s, prior)
            };
            (s, score)
        })
        .collect();
    let top = scored
        .iter()
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(
            "prior gives zero probability to every enumerated support".into(),
        ));
    }
    let norm: f64 = scored.iter().map(|(_, s)| (s - top).exp()).sum();
    let mut posterior_lambda = vec![0.0; m];
    let mut map_support = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let supports: Vec<(Vec<usize>, f64)> = scored
        .into_iter()
        .map(|(s, score)| {
            let p = (score - top).exp() / norm;
            for &i in &s {
                posterior_lambda[i] += p;
            }
            if score > best {
                best = score;
                map_support = s.clone();
            }
            (s, p)
        })
        .collect();
    posterior_lambda.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));
    Ok(ExhaustivePosterior {
        posterior_lambda,
        map_support,
        supports,
    })
}
