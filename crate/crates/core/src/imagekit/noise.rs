use rand_distr::{Distribution, StandardNormal};

use super::Image;
use crate::rng::seeded;
use crate::{Error, Result};

/// Parameters of one AWGN realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
    /// Noise standard deviation in intensity units.
    pub sigma: f64,
}

impl NoiseSpec {
    /// Noise level giving `snr_db` for a signal of mean power `power`
    /// (mean of squared intensities, not variance).
    pub fn for_power(power: f64, snr_db: f64, seed: u64) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::ZeroSignalPower);
        }
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!("snr_db {snr_db} is not usable")));
        }
        let variance = power / 10f64.powf(snr_db / 10.0);
        Ok(Self {
            snr_db,
            seed,
            sigma: variance.sqrt(),
        })
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Adds white Gaussian noise at the requested SNR. The result is not clamped.
pub fn add_awgn(clean: &Image, snr_db: f64, seed: u64) -> Result<(Image, NoiseSpec)> {
    let spec = NoiseSpec::for_power(clean.mean_power(), snr_db, seed)?;
    let mut rng = seeded(seed);
    let pixels = clean
        .pixels()
        .iter()
        .map(|&p| {
            let z: f64 = StandardNormal.sample(&mut rng);
            p + spec.sigma * z
        })
        .collect();
    let noisy = Image::new(clean.width(), clean.height(), pixels, clean.range_max())?;
    Ok((noisy, spec))
}
