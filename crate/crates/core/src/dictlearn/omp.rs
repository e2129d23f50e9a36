use super::Dictionary;
use crate::linalg::{norm_sq, GrowingCholesky};
use crate::{Error, Result};

const MIN_PIVOT: f64 = 1e-10;

/// Orthogonal matching pursuit against one dictionary.
///
/// Keeps the Gram matrix so that after the initial `D^T y` every step costs
/// `O(M s)` instead of a full residual correlation.
#[derive(Debug, Clone)]
pub struct OmpCoder<'a> {
    dict: &'a Dictionary,
    gram: Vec<f64>,
}

impl<'a> OmpCoder<'a> {
    pub fn new(dict: &'a Dictionary) -> Self {
        Self {
            dict,
            gram: dict.gram(),
        }
    }

    pub fn dictionary(&self) -> &Dictionary {
        self.dict
    }

    /// Sparse code as `(atom, coefficient)` pairs in selection order.
    pub fn code_sparse(
        &self,
        signal: &[f64],
        max_sparsity: usize,
        residual_tol: f64,
    ) -> Result<Vec<(usize, f64)>> {
        let r = self.dict.atom_dim();
        if signal.len() != r {
            return Err(Error::DimensionMismatch(format!(
                "signal of length {} for atoms of length {r}",
                signal.len()
            )));
        }
        if max_sparsity > r || residual_tol < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "max_sparsity {max_sparsity} (limit {r}), residual_tol {residual_tol}"
            )));
        }
        let m = self.dict.num_atoms();
        let corr0 = self.dict.correlate(signal);
        let yy = norm_sq(signal);
        let tol_sq = residual_tol * residual_tol;
        let floor = 1e-14 * yy.sqrt().max(1.0);

        let mut corr = corr0.clone();
        let mut chol = GrowingCholesky::with_capacity(max_sparsity);
        let mut support: Vec<usize> = Vec::with_capacity(max_sparsity);
        let mut chosen = vec![false; m];
        let mut coeffs: Vec<f64> = Vec::new();
        let mut residual_sq = yy;

        while support.len() < max_sparsity && residual_sq > tol_sq {
            let mut best = None;
            let mut best_abs = floor;
            for (j, c) in corr.iter().enumerate() {
                if !chosen[j] && c.abs() > best_abs {
                    best_abs = c.abs();
                    best = Some(j);
                }
            }
            let Some(k) = best else { break };
            let cross: Vec<f64> = support.iter().map(|&s| self.gram[s * m + k]).collect();
            if chol.push(&cross, self.gram[k * m + k], MIN_PIVOT).is_none() {
                break;
            }
            support.push(k);
            chosen[k] = true;
            let rhs: Vec<f64> = support.iter().map(|&s| corr0[s]).collect();
            coeffs = chol.solve(&rhs);
            corr.copy_from_slice(&corr0);
            for (&s, &x) in support.iter().zip(&coeffs) {
                let row = &self.gram[s * m..(s + 1) * m];
                for (c, g) in corr.iter_mut().zip(row) {
                    *c -= x * g;
                }
            }
            residual_sq = (yy - rhs.iter().zip(&coeffs).map(|(a, b)| a * b).sum::<f64>()).max(0.0);
        }
        Ok(support.into_iter().zip(coeffs).collect())
    }

    /// Dense `M`-length code.
    pub fn code(&self, signal: &[f64], max_sparsity: usize, residual_tol: f64) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.dict.num_atoms()];
        for (j, v) in self.code_sparse(signal, max_sparsity, residual_tol)? {
            x[j] = v;
        }
        Ok(x)
    }
}

/// Greedy OMP: pick the atom most correlated with the residual, refit by least
/// squares on the active set, stop at `max_sparsity` atoms or when the
/// residual norm is at most `residual_tol`.
pub fn omp(
    dict: &Dictionary,
    signal: &[f64],
    max_sparsity: usize,
    residual_tol: f64,
) -> Result<Vec<f64>> {
    OmpCoder::new(dict).code(signal, max_sparsity, residual_tol)
}
