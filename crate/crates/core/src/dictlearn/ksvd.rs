//! K-SVD dictionary learning.
//!
//! Each iteration sparse codes every signal with OMP, then replaces atoms one
//! at a time by the leading singular pair of the residual restricted to the
//! signals that use the atom. A signal keeps its previous code when that code
//! represents it better than the fresh OMP code, so the training error never
//! increases between iterations. Unused and near-duplicate atoms are
//! re-seeded from the worst-represented signals when that lowers the error.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{Dictionary, OmpCoder};
use crate::linalg::{dot, norm_sq};
use crate::rng::seeded;
use crate::{Error, Result};

const DUPLICATE_COS: f64 = 1.0 - 1e-9;
/// Atom pairs at least this aligned are candidates for clearing.
const REDUNDANT_COS: f64 = 0.99;
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_STEPS: usize = 100;

/// Per-iteration training diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KsvdTrace {
    /// Total squared representation error after each sparse-coding stage.
    pub objective: Vec<f64>,
    /// Atoms re-seeded from badly represented signals, because no signal
    /// used them or they duplicated another atom.
    pub replaced_atoms: usize,
}

type Code = Vec<(usize, f64)>;

/// Trains a `dim x num_atoms` dictionary on contiguous `signals`.
pub fn ksvd_train(
    signals: &[f64],
    dim: usize,
    num_atoms: usize,
    sparsity: usize,
    iterations: usize,
    seed: u64,
) -> Result<Dictionary> {
    ksvd_train_traced(signals, dim, num_atoms, sparsity, iterations, seed).map(|(d, _)| d)
}

pub(crate) fn is_new_direction(atoms: &[f64], dim: usize, cand: &[f64]) -> bool {
    atoms
        .chunks_exact(dim)
        .all(|a| dot(a, cand).abs() < DUPLICATE_COS)
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm_sq(v).sqrt();
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

fn initial_atoms(signals: &[f64], dim: usize, num_atoms: usize, seed: u64) -> Result<Vec<f64>> {
    let n = signals.len() / dim;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let mut atoms = Vec::with_capacity(num_atoms * dim);
    for i in order {
        if atoms.len() == num_atoms * dim {
            break;
        }
        if let Some(u) = unit(&signals[i * dim..(i + 1) * dim]) {
            if is_new_direction(&atoms, dim, &u) {
                atoms.extend(u);
            }
        }
    }
    if atoms.len() < num_atoms * dim {
        return Err(Error::Degenerate(format!(
            "only {} distinct signal directions for {num_atoms} atoms",
            atoms.len() / dim
        )));
    }
    Ok(atoms)
}

fn residual_of(signal: &[f64], atoms: &[f64], dim: usize, code: &Code) -> Vec<f64> {
    let mut r = signal.to_vec();
    for &(j, x) in code {
        for (v, a) in r.iter_mut().zip(&atoms[j * dim..(j + 1) * dim]) {
            *v -= x * a;
        }
    }
    r
}

/// Leading left singular vector of the rows `f` (each of length `dim`),
/// by power iteration on `F^T F` started from `start`.
fn leading_direction(rows: &[Vec<f64>], dim: usize, start: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; dim * dim];
    for f in rows {
        for a in 0..dim {
            let fa = f[a];
            if fa == 0.0 {
                continue;
            }
            for b in a..dim {
                c[a * dim + b] += fa * f[b];
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            c[a * dim + b] = c[b * dim + a];
        }
    }
    let mut u = start.to_vec();
    for _ in 0..POWER_MAX_STEPS {
        let next: Vec<f64> = c.chunks_exact(dim).map(|row| dot(row, &u)).collect();
        let Some(next) = unit(&next) else { break };
        let moved = next
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        u = next;
        if moved < POWER_TOL {
            break;
        }
    }
    if let Some(first) = u.iter().find(|v| **v != 0.0) {
        if *first < 0.0 {
            u.iter_mut().for_each(|v| *v = -*v);
        }
    }
    u
}

/// Like [`ksvd_train`], also returning the per-iteration objective.
pub fn ksvd_train_traced(
    signals: &[f64],
    dim: usize,
    num_atoms: usize,
    sparsity: usize,
    iterations: usize,
    seed: u64,
) -> Result<(Dictionary, KsvdTrace)> {
    if dim == 0 || signals.len() % dim != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} values do not split into signals of length {dim}",
            signals.len()
        )));
    }
    if num_atoms == 0 || sparsity == 0 || sparsity > dim || iterations == 0 {
        return Err(Error::InvalidArgument(format!(
            "num_atoms={num_atoms}, sparsity={sparsity} (max {dim}), iterations={iterations}"
        )));
    }
    let n = signals.len() / dim;
    if n < num_atoms {
        return Err(Error::TooFewVectors {
            needed: num_atoms,
            got: n,
        });
    }

    let atoms = initial_atoms(signals, dim, num_atoms, seed)?;
    ksvd_refine(signals, Dictionary::new(dim, num_atoms, atoms)?, sparsity, iterations)
}

/// Runs K-SVD iterations starting from `init` instead of sampled signals.
/// Any number of signals is accepted; atoms nobody uses keep being offered
/// the worst-represented signals.
pub fn ksvd_refine(
    signals: &[f64],
    init: Dictionary,
    sparsity: usize,
    iterations: usize,
) -> Result<(Dictionary, KsvdTrace)> {
    let dim = init.atom_dim();
    let num_atoms = init.num_atoms();
    if signals.len() % dim != 0 || signals.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} values do not split into signals of length {dim}",
            signals.len()
        )));
    }
    if sparsity == 0 || sparsity > dim || iterations == 0 {
        return Err(Error::InvalidArgument(format!(
            "sparsity={sparsity} (max {dim}), iterations={iterations}"
        )));
    }
    let n = signals.len() / dim;
    let mut atoms = init.as_slice().to_vec();
    let mut codes: Vec<Option<Code>> = vec![None; n];
    let mut residuals: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut trace = KsvdTrace::default();

    for _ in 0..iterations {
        let dict = Dictionary::new(dim, num_atoms, atoms.clone())?;
        let coder = OmpCoder::new(&dict);
        let coded: Vec<(Code, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let s = &signals[i * dim..(i + 1) * dim];
                let fresh = coder
                    .code_sparse(s, sparsity, 0.0)
                    .expect("signal length checked above");
                let fresh_res = residual_of(s, &atoms, dim, &fresh);
                match &codes[i] {
                    Some(prev) if norm_sq(&residuals[i]) < norm_sq(&fresh_res) => {
                        (prev.clone(), residuals[i].clone())
                    }
                    _ => (fresh, fresh_res),
                }
            })
            .collect();
        let mut total = 0.0;
        for (i, (code, res)) in coded.into_iter().enumerate() {
            total += norm_sq(&res);
            codes[i] = Some(code);
            residuals[i] = res;
        }
        trace.objective.push(total);

        let mut users: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_atoms];
        for (i, code) in codes.iter().enumerate() {
            for (pos, &(j, _)) in code.as_ref().unwrap().iter().enumerate() {
                users[j].push((i, pos));
            }
        }

        let mut unused = Vec::new();
        for k in 0..num_atoms {
            if users[k].is_empty() {
                unused.push(k);
                continue;
            }
            let old = atoms[k * dim..(k + 1) * dim].to_vec();
            let rows: Vec<Vec<f64>> = users[k]
                .iter()
                .map(|&(i, pos)| {
                    let x = codes[i].as_ref().unwrap()[pos].1;
                    residuals[i].iter().zip(&old).map(|(e, a)| e + x * a).collect()
                })
                .collect();
            let u = leading_direction(&rows, dim, &old);
            for (&(i, pos), f) in users[k].iter().zip(&rows) {
                let x = dot(f, &u);
                codes[i].as_mut().unwrap()[pos].1 = x;
                residuals[i] = f.iter().zip(&u).map(|(fv, uv)| fv - x * uv).collect();
            }
            atoms[k * dim..(k + 1) * dim].copy_from_slice(&u);
        }

        trace.replaced_atoms += clear_redundant(&mut atoms, dim, &mut codes, &mut residuals, signals, &mut unused);
        trace.replaced_atoms += replace_unused(&mut atoms, dim, &unused, &residuals, signals);
        for code in codes.iter_mut().flatten() {
            code.retain(|&(_, x)| x != 0.0);
        }
    }
    Ok((Dictionary::new(dim, num_atoms, atoms)?, trace))
}

/// Residual energy of every signal, and the signals with nonzero energy
/// ordered worst-represented first (ties by index).
fn worst_first(residuals: &[Vec<f64>]) -> (Vec<f64>, Vec<usize>) {
    let energy: Vec<f64> = residuals.iter().map(|r| norm_sq(r)).collect();
    let mut order: Vec<usize> = (0..energy.len()).filter(|&k| energy[k] > 0.0).collect();
    order.sort_by(|&a, &b| energy[b].total_cmp(&energy[a]).then(a.cmp(&b)));
    (energy, order)
}

/// Unit direction of `signal`, unless an atom other than `slot` already has it.
fn fresh_direction(atoms: &[f64], dim: usize, slot: usize, signal: &[f64]) -> Option<Vec<f64>> {
    let u = unit(signal)?;
    let fresh = atoms
        .chunks_exact(dim)
        .enumerate()
        .all(|(a, col)| a == slot || dot(col, &u).abs() < DUPLICATE_COS);
    fresh.then_some(u)
}

/// Clears redundant atoms. For each pair with `|cos| >= REDUNDANT_COS`, the
/// users of the higher-indexed atom are moved onto the lower one (coefficient
/// refitted) and the freed atom takes the worst-represented signal. The swap
/// is kept only if it removes more error than the move adds (that signal is
/// coded exactly at the next coding stage), so the objective cannot rise.
/// Exact duplicates are always collapsed; without a replacement the freed
/// atom joins `unused`. Returns the number of atoms re-seeded.
fn clear_redundant(
    atoms: &mut [f64],
    dim: usize,
    codes: &mut [Option<Code>],
    residuals: &mut [Vec<f64>],
    signals: &[f64],
    unused: &mut Vec<usize>,
) -> usize {
    let m = atoms.len() / dim;
    let (mut energy, order) = worst_first(residuals);
    // signals whose energy changed since `order` was built, or may change now
    let mut stale = vec![false; residuals.len()];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (k, code) in codes.iter().enumerate() {
        for &(a, _) in code.as_ref().unwrap() {
            users[a].push(k);
        }
    }
    let mut reseeded = 0;
    for i in 0..m {
        if unused.contains(&i) {
            continue;
        }
        let ai = atoms[i * dim..(i + 1) * dim].to_vec();
        for j in i + 1..m {
            if unused.contains(&j) {
                continue;
            }
            let aj = atoms[j * dim..(j + 1) * dim].to_vec();
            let c = dot(&ai, &aj);
            if c.abs() < REDUNDANT_COS {
                continue;
            }
            let mut moved = Vec::with_capacity(users[j].len());
            let mut cost = 0.0;
            for &k in &users[j] {
                let xj = codes[k].as_ref().unwrap().iter().find(|&&(a, _)| a == j).unwrap().1;
                let mut r: Vec<f64> = residuals[k].iter().zip(&aj).map(|(e, a)| e + xj * a).collect();
                let delta = dot(&r, &ai);
                r.iter_mut().zip(&ai).for_each(|(e, a)| *e -= delta * a);
                let e = norm_sq(&r);
                cost += e - energy[k];
                moved.push((k, delta, r, e));
            }
            let was_stale: Vec<bool> = moved.iter().map(|&(k, ..)| stale[k]).collect();
            moved.iter().for_each(|&(k, ..)| stale[k] = true);
            let mut pick = order.iter().filter(|&&k| !stale[k]).find_map(|&k| {
                fresh_direction(atoms, dim, j, &signals[k * dim..(k + 1) * dim]).map(|u| (u, energy[k]))
            });
            let floor = pick.as_ref().map_or(0.0, |p| p.1);
            let mut by_energy: Vec<&(usize, f64, Vec<f64>, f64)> = moved.iter().filter(|mv| mv.3 > floor).collect();
            by_energy.sort_by(|a, b| b.3.total_cmp(&a.3).then(a.0.cmp(&b.0)));
            if let Some(better) = by_energy.into_iter().find_map(|&(k, _, _, e)| {
                fresh_direction(atoms, dim, j, &signals[k * dim..(k + 1) * dim]).map(|u| (u, e))
            }) {
                pick = Some(better);
            }
            let exact = c.abs() >= DUPLICATE_COS;
            let accept = exact || pick.as_ref().is_some_and(|p| p.1 > cost);
            if !accept {
                moved.iter().zip(was_stale).for_each(|(&(k, ..), s)| stale[k] = s);
                continue;
            }
            for (k, delta, r, e) in moved {
                let code = codes[k].as_mut().unwrap();
                code.retain(|&(a, _)| a != j);
                match code.iter_mut().find(|(a, _)| *a == i) {
                    Some(entry) => entry.1 += delta,
                    None => {
                        code.push((i, delta));
                        users[i].push(k);
                    }
                }
                residuals[k] = r;
                energy[k] = e;
            }
            users[j].clear();
            match pick {
                Some((u, _)) => {
                    atoms[j * dim..(j + 1) * dim].copy_from_slice(&u);
                    reseeded += 1;
                }
                None => unused.push(j),
            }
        }
    }
    reseeded
}

/// Replaces unused atoms with the worst-represented signals, normalized.
fn replace_unused(
    atoms: &mut [f64],
    dim: usize,
    unused: &[usize],
    residuals: &[Vec<f64>],
    signals: &[f64],
) -> usize {
    let (_, order) = worst_first(residuals);
    let mut next = order.into_iter();
    let mut replaced = 0;
    for &k in unused {
        let found = next
            .by_ref()
            .find_map(|w| fresh_direction(atoms, dim, k, &signals[w * dim..(w + 1) * dim]));
        let Some(u) = found else { break };
        atoms[k * dim..(k + 1) * dim].copy_from_slice(&u);
        replaced += 1;
    }
    replaced
}
