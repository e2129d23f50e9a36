//! Per-pixel overlapping patches.
//!
//! Every pixel owns the `n x n` window centred on it; the image is mirror
//! padded by `(n - 1) / 2` so border pixels get full windows. Vectors are
//! column-major (`index = col * n + row` within the window) and divided by
//! their maximum absolute value, which is kept as the patch scale.

use crate::imagekit::Image;
use crate::{Error, Result};

/// Normalized patches of one image, one per pixel in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    side: usize,
    height: usize,
    width: usize,
    vectors: Vec<f64>,
    scales: Vec<f64>,
}

impl PatchSet {
    /// Builds a set from raw parts. `vectors` is `height * width` patches of
    /// `side * side` values each, laid out contiguously.
    pub fn from_parts(
        side: usize,
        height: usize,
        width: usize,
        vectors: Vec<f64>,
        scales: Vec<f64>,
    ) -> Result<Self> {
        if side % 2 == 0 || side == 0 {
            return Err(Error::InvalidArgument(format!("patch side {side} must be odd")));
        }
        let count = height * width;
        if vectors.len() != count * side * side || scales.len() != count {
            return Err(Error::DimensionMismatch(format!(
                "{} values / {} scales for {count} patches of side {side}",
                vectors.len(),
                scales.len()
            )));
        }
        Ok(Self {
            side,
            height,
            width,
            vectors,
            scales,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Vector length `R = n^2`.
    pub fn patch_dim(&self) -> usize {
        self.side * self.side
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Dimensions `(height, width)` of the source image.
    pub fn image_dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        let r = self.patch_dim();
        &self.vectors[i * r..(i + 1) * r]
    }

    /// All vectors, contiguous.
    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn scale(&self, i: usize) -> f64 {
        self.scales[i]
    }

    /// `(row, col)` of the pixel patch `i` is centred on.
    pub fn center(&self, i: usize) -> (usize, usize) {
        (i / self.width, i % self.width)
    }

    pub fn centers(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).map(|i| self.center(i))
    }

    /// Same geometry with replacement vectors.
    pub fn with_vectors(&self, vectors: Vec<f64>) -> Result<Self> {
        Self::from_parts(self.side, self.height, self.width, vectors, self.scales.clone())
    }

    /// Every vector multiplied back by its scale.
    pub fn denormalized(&self) -> Self {
        let r = self.patch_dim();
        let mut vectors = self.vectors.clone();
        for (chunk, &s) in vectors.chunks_exact_mut(r).zip(&self.scales) {
            chunk.iter_mut().for_each(|v| *v *= s);
        }
        Self {
            vectors,
            ..self.clone()
        }
    }
}

/// Padding used for patches of side `n`.
pub fn padding_for(side: usize) -> usize {
    (side - 1) / 2
}

#[inline]
fn reflect(i: isize, len: usize) -> usize {
    let last = len as isize - 1;
    let j = if i < 0 {
        -i
    } else if i > last {
        2 * last - i
    } else {
        i
    };
    j as usize
}

/// Mirror padding that does not repeat the edge pixel: `[a b c]` padded by one
/// is `[b a b c b]`.
pub fn pad_reflect(image: &Image, pad: usize) -> Result<Image> {
    let (h, w) = image.dims();
    if pad >= h.min(w) {
        return Err(Error::InvalidArgument(format!(
            "padding {pad} too large for {w}x{h} image"
        )));
    }
    let p = pad as isize;
    Image::from_fn(w + 2 * pad, h + 2 * pad, image.range_max(), |r, c| {
        image.get(reflect(r as isize - p, h), reflect(c as isize - p, w))
    })
}

/// Extracts and normalizes the pixel patch of every pixel.
pub fn extract_patches(image: &Image, side: usize) -> Result<PatchSet> {
    let (h, w) = image.dims();
    if side % 2 == 0 {
        return Err(Error::InvalidArgument(format!("patch side {side} must be odd")));
    }
    if side < 3 || side > h.min(w) {
        return Err(Error::InvalidArgument(format!(
            "patch side {side} outside 3..={} for {w}x{h} image",
            h.min(w)
        )));
    }
    let pad = padding_for(side);
    let padded = pad_reflect(image, pad)?;
    let pw = padded.width();
    let src = padded.pixels();
    let r = side * side;

    let mut vectors = vec![0.0; h * w * r];
    let mut scales = vec![0.0; h * w];
    for (i, (vec, scale)) in vectors.chunks_exact_mut(r).zip(scales.iter_mut()).enumerate() {
        let (row, col) = (i / w, i % w);
        // padded window top-left is (row, col)
        for dc in 0..side {
            for dr in 0..side {
                vec[dc * side + dr] = src[(row + dr) * pw + col + dc];
            }
        }
        let peak = vec.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            vec.iter_mut().for_each(|v| *v /= peak);
            *scale = peak;
        } else {
            *scale = 1.0;
        }
    }
    PatchSet::from_parts(side, h, w, vectors, scales)
}

/// Multiplies a normalized vector by its scale.
pub fn denormalize(vector: &[f64], scale: f64) -> Result<Vec<f64>> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("scale {scale} must be positive")));
    }
    Ok(vector.iter().map(|v| v * scale).collect())
}

/// Averages overlapping patches back into an image of `out_dims = (h, w)`.
///
/// Vectors are taken as-is (already in intensity units). Window entries that
/// fall in the padding are dropped; every pixel is divided by the number of
/// patches that actually covered it.
pub fn aggregate(patches: &PatchSet, out_dims: (usize, usize), range_max: f64) -> Result<Image> {
    let (h, w) = out_dims;
    if patches.image_dims() != out_dims {
        return Err(Error::DimensionMismatch(format!(
            "patches cover {:?}, output is {:?}",
            patches.image_dims(),
            out_dims
        )));
    }
    let side = patches.side();
    let pad = padding_for(side) as isize;
    let mut sum = vec![0.0; h * w];
    let mut count = vec![0u32; h * w];
    for i in 0..patches.len() {
        let (row, col) = patches.center(i);
        let vec = patches.vector(i);
        for dc in 0..side {
            let c = col as isize + dc as isize - pad;
            if c < 0 || c >= w as isize {
                continue;
            }
            for dr in 0..side {
                let r = row as isize + dr as isize - pad;
                if r < 0 || r >= h as isize {
                    continue;
                }
                let idx = r as usize * w + c as usize;
                sum[idx] += vec[dc * side + dr];
                count[idx] += 1;
            }
        }
    }
    let pixels = sum
        .iter()
        .zip(&count)
        .map(|(s, &n)| s / n as f64)
        .collect();
    Image::new(w, h, pixels, range_max)
}
