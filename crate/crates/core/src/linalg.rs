//! Small dense helpers. Matrices are plain slices; sizes here are tiny
//! (active sets of a few atoms, patch dimensions under a hundred).

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..a.len() {
        s += a[j] * b[j];
    }
    s
}

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Lower-triangular Cholesky factor grown one row at a time.
///
/// Row `i` is stored at `rows[i*(i+1)/2 ..]`, so appending never moves data.
#[derive(Debug, Clone, Default)]
pub(crate) struct GrowingCholesky {
    rows: Vec<f64>,
    size: usize,
}

impl GrowingCholesky {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            rows: Vec::with_capacity(n * (n + 1) / 2),
            size: 0,
        }
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.size
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.rows[start..start + i + 1]
    }

    /// Solves `L w = rhs` for the current factor, writing into `out`.
    pub(crate) fn forward(&self, rhs: &[f64], out: &mut [f64]) {
        for i in 0..self.size {
            let row = self.row(i);
            let mut s = rhs[i];
            for j in 0..i {
                s -= row[j] * out[j];
            }
            out[i] = s / row[i];
        }
    }

    /// Solves `L^T x = rhs` in place.
    pub(crate) fn backward_in_place(&self, x: &mut [f64]) {
        for i in (0..self.size).rev() {
            let mut s = x[i];
            for j in i + 1..self.size {
                s -= self.row(j)[i] * x[j];
            }
            x[i] = s / self.row(i)[i];
        }
    }

    /// Appends a row given the new column of the SPD matrix: `cross` holds the
    /// entries against existing rows, `diag` the new diagonal entry. Returns
    /// the squared new pivot, or `None` (leaving the factor unchanged) when the
    /// pivot is not positive beyond `min_pivot`.
    pub(crate) fn push(&mut self, cross: &[f64], diag: f64, min_pivot: f64) -> Option<f64> {
        let n = self.size;
        let mut w = vec![0.0; n];
        self.forward(cross, &mut w);
        let pivot_sq = diag - norm_sq(&w);
        if !(pivot_sq > min_pivot) {
            return None;
        }
        self.rows.extend_from_slice(&w);
        self.rows.push(pivot_sq.sqrt());
        self.size += 1;
        Some(pivot_sq)
    }

    /// Full solve `L L^T x = rhs`.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.size];
        self.forward(rhs, &mut x);
        self.backward_in_place(&mut x);
        x
    }
}

/// Dense Cholesky of a row-major SPD matrix. Returns the row-major lower
/// factor, or `None` if the matrix is not numerically positive definite.
pub(crate) fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}
