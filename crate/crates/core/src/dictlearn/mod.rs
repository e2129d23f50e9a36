//! Per-cluster dictionaries: the atom matrix, its binary file format, OMP
//! sparse coding and K-SVD training.

mod ksvd;
mod omp;

pub(crate) use ksvd::is_new_direction;
pub use ksvd::{ksvd_refine, ksvd_train, ksvd_train_traced, KsvdTrace};
pub use omp::{omp, OmpCoder};

use std::fs;
use std::path::Path;

use crate::linalg::{dot, norm_sq};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"COFD";
const FORMAT_VERSION: u32 = 1;
const NORM_TOL: f64 = 1e-9;

/// Column-major `atom_dim x num_atoms` matrix with unit-norm columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atom_dim: usize,
    num_atoms: usize,
    atoms: Vec<f64>,
}

impl Dictionary {
    /// Wraps column-major data. Every column must already have unit norm.
    pub fn new(atom_dim: usize, num_atoms: usize, atoms: Vec<f64>) -> Result<Self> {
        if atom_dim == 0 || num_atoms == 0 || atoms.len() != atom_dim * num_atoms {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {atom_dim}x{num_atoms} dictionary",
                atoms.len()
            )));
        }
        for (j, col) in atoms.chunks_exact(atom_dim).enumerate() {
            let n = norm_sq(col).sqrt();
            if !((n - 1.0).abs() <= NORM_TOL) {
                return Err(Error::InvalidArgument(format!("atom {j} has norm {n}")));
            }
        }
        Ok(Self {
            atom_dim,
            num_atoms,
            atoms,
        })
    }

    /// Normalizes each column first. Zero columns are rejected.
    pub fn from_columns(atom_dim: usize, mut atoms: Vec<f64>) -> Result<Self> {
        if atom_dim == 0 || atoms.len() % atom_dim != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} values are not whole columns of length {atom_dim}",
                atoms.len()
            )));
        }
        for (j, col) in atoms.chunks_exact_mut(atom_dim).enumerate() {
            let n = norm_sq(col).sqrt();
            if !(n > 0.0) {
                return Err(Error::InvalidArgument(format!("atom {j} is zero")));
            }
            col.iter_mut().for_each(|v| *v /= n);
        }
        let m = atoms.len() / atom_dim;
        Self::new(atom_dim, m, atoms)
    }

    pub fn atom_dim(&self) -> usize {
        self.atom_dim
    }

    pub fn num_atoms(&self) -> usize {
        self.num_atoms
    }

    pub fn atom(&self, j: usize) -> &[f64] {
        &self.atoms[j * self.atom_dim..(j + 1) * self.atom_dim]
    }

    /// Column-major data.
    pub fn as_slice(&self) -> &[f64] {
        &self.atoms
    }

    /// `D^T y`.
    pub fn correlate(&self, signal: &[f64]) -> Vec<f64> {
        self.atoms
            .chunks_exact(self.atom_dim)
            .map(|a| dot(a, signal))
            .collect()
    }

    /// Row-major `num_atoms x num_atoms` Gram matrix `D^T D`.
    pub fn gram(&self) -> Vec<f64> {
        let m = self.num_atoms;
        let mut g = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = dot(self.atom(i), self.atom(j));
                g[i * m + j] = v;
                g[j * m + i] = v;
            }
        }
        g
    }

    /// `D x` for a dense coefficient vector.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.atom_dim];
        for (j, &x) in coeffs.iter().enumerate() {
            if x != 0.0 {
                for (o, a) in out.iter_mut().zip(self.atom(j)) {
                    *o += x * a;
                }
            }
        }
        out
    }

    /// Largest `|<d_i, d_j>|` over distinct atom pairs.
    pub fn max_coherence(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.num_atoms {
            for j in i + 1..self.num_atoms {
                best = best.max(dot(self.atom(i), self.atom(j)).abs());
            }
        }
        best
    }

    /// Serializes as `COFD`, version, R, M (u32 LE), then R*M f64 LE column-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.atoms.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.atom_dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.num_atoms as u32).to_le_bytes());
        for v in &self.atoms {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(Error::DictionaryFormat("missing COFD header".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let version = word(4);
        if version != FORMAT_VERSION {
            return Err(Error::DictionaryFormat(format!("unsupported version {version}")));
        }
        let (r, m) = (word(8) as usize, word(12) as usize);
        let body = &bytes[16..];
        if body.len() != 8 * r * m {
            return Err(Error::DictionaryFormat(format!(
                "expected {} payload bytes for {r}x{m}, found {}",
                8 * r * m,
                body.len()
            )));
        }
        let atoms = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(r, m, atoms)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
