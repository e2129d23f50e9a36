//! Grayscale images, PGM I/O, AWGN synthesis and quality metrics.

mod metrics;
mod noise;
mod pgm;

pub use metrics::{psnr, ssim, SSIM_WINDOW};
pub use noise::{add_awgn, NoiseSpec};
pub use pgm::{load_pgm, parse_pgm, save_pgm, write_pgm};

use crate::{Error, Result};

/// Row-major grayscale image with real-valued intensities.
///
/// `range_max` is the peak intensity of the source (255 for 8-bit files).
/// Pixels are not clamped in memory; noisy images may leave `[0, range_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    range_max: f64,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>, range_max: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if !(range_max.is_finite() && range_max > 0.0) {
            return Err(Error::InvalidImage(format!("range_max {range_max} must be positive")));
        }
        if let Some(i) = pixels.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidImage(format!("non-finite pixel at index {i}")));
        }
        Ok(Self {
            width,
            height,
            pixels,
            range_max,
        })
    }

    /// Constant image, mostly useful in tests.
    pub fn filled(width: usize, height: usize, value: f64, range_max: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], range_max)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        range_max: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels, range_max)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn range_max(&self) -> f64 {
        self.range_max
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Mean of squared intensities.
    pub fn mean_power(&self) -> f64 {
        self.pixels.iter().map(|p| p * p).sum::<f64>() / self.pixels.len() as f64
    }

    /// Copy with every pixel clamped to `[0, range_max]` and rounded.
    pub fn quantized(&self) -> Image {
        let pixels = self
            .pixels
            .iter()
            .map(|p| p.clamp(0.0, self.range_max).round())
            .collect();
        Image {
            pixels,
            ..self.clone()
        }
    }

    pub(crate) fn check_same_shape(&self, other: &Image) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}
