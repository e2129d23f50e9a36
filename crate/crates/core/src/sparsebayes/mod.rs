//! Sparse coding with per-atom activity priors.
//!
//! The model is Bernoulli-Gaussian: atom `i` is active with probability
//! `lambda[i]`, active coefficients are `N(0, coeff_variance)`, and the signal
//! is observed through `N(0, noise_variance)` noise. For a support `S` the
//! marginal likelihood is Gaussian with covariance
//! `noise_variance * I + coeff_variance * D_S D_S^T`.
//!
//! [`BayesianPursuit`] searches supports greedily with a small beam and
//! reports both the best support's posterior-mean coefficients and per-atom
//! activity posteriors. [`support_posterior_exhaustive`] enumerates every
//! support of a small problem and is the reference the search is tested
//! against.

mod bmp;
mod exhaustive;

pub use bmp::{bmp_estimate, BayesianPursuit, DEFAULT_BEAM_WIDTH};
pub use exhaustive::{support_posterior_exhaustive, ExhaustivePosterior, MAX_ENUM_ATOMS, MAX_ENUM_SUPPORT};

use crate::{Error, Result};

/// Prior over supports and coefficients for one signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityPrior {
    pub lambda: Vec<f64>,
    pub coeff_variance: f64,
    pub noise_variance: f64,
}

impl ActivityPrior {
    pub fn new(lambda: Vec<f64>, coeff_variance: f64, noise_variance: f64) -> Result<Self> {
        let prior = Self {
            lambda,
            coeff_variance,
            noise_variance,
        };
        prior.validate()?;
        Ok(prior)
    }

    /// Same activity probability `p` for each of `m` atoms.
    pub fn uniform(m: usize, p: f64, coeff_variance: f64, noise_variance: f64) -> Result<Self> {
        Self::new(vec![p; m], coeff_variance, noise_variance)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((i, l)) = self
            .lambda
            .iter()
            .enumerate()
            .find(|(_, l)| !(0.0..=1.0).contains(*l))
        {
            return Err(Error::InvalidArgument(format!("lambda[{i}] = {l} outside [0, 1]")));
        }
        if !self.lambda.iter().any(|&l| l > 0.0) {
            return Err(Error::InvalidArgument("every activity probability is zero".into()));
        }
        if !(self.coeff_variance > 0.0 && self.coeff_variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coeff_variance {} must be positive",
                self.coeff_variance
            )));
        }
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise_variance {} must be positive",
                self.noise_variance
            )));
        }
        Ok(())
    }
}

/// Result of one sparse solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    /// Posterior-mean coefficients on the selected support, zero elsewhere.
    pub coeffs: Vec<f64>,
    /// Per-atom probability of being active.
    pub posterior_lambda: Vec<f64>,
    /// Indices of the nonzero coefficients, ascending.
    pub support: Vec<usize>,
    /// Unnormalized log posterior (log likelihood plus log prior) of the
    /// selected support.
    pub log_evidence: f64,
}

impl SparseSolution {
    pub(crate) fn from_coeffs(coeffs: Vec<f64>, posterior_lambda: Vec<f64>, log_evidence: f64) -> Self {
        let support = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, _)| i)
            .collect();
        Self {
            coeffs,
            posterior_lambda,
            support,
            log_evidence,
        }
    }
}

/// Largest prior probability used inside log-odds, so `lambda = 1` stays finite.
pub(crate) const LAMBDA_CEIL: f64 = 1.0 - 1e-12;
