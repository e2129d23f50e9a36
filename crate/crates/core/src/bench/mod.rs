//! Experiment harness: SNR sweeps, resolution sweeps, CSV and SVG output.

mod csv;
mod svg;

pub use self::csv::{emit_csv, format_sig6, parse_csv, read_csv, records_to_csv, CSV_HEADER};
pub use self::svg::{emit_svg_chart, render_svg_chart};

use crate::imagekit::{add_awgn, psnr, ssim, Image};
use crate::pipeline::{denoise_image, DenoiseConfig, NoiseSigma};
use crate::{Error, Result};

/// Input SNRs of the standard sweep, -5 dB to 35 dB in 5 dB steps.
pub const DEFAULT_SNRS: [f64; 9] = [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0];
/// Output sides of the standard resolution sweep.
pub const DEFAULT_SIDES: [usize; 3] = [64, 128, 256];
/// SNR used for the resolution sweep.
pub const DEFAULT_RESOLUTION_SNR: f64 = 20.0;

/// Metrics for one noisy/denoised run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub image_name: String,
    pub width: usize,
    pub height: usize,
    pub snr_db: f64,
    pub psnr_noisy: f64,
    pub psnr_denoised: f64,
    pub ssim_noisy: f64,
    pub ssim_denoised: f64,
    pub wall_time_s: f64,
    pub seed: u64,
}

/// Adds noise at `snr_db`, denoises with the generated sigma, and measures.
fn run_point(
    clean: &Image,
    name: &str,
    snr_db: f64,
    noise_seed: u64,
    cfg: &DenoiseConfig,
    seed: u64,
) -> Result<BenchRecord> {
    let (noisy, spec) = add_awgn(clean, snr_db, noise_seed)?;
    let run_cfg = DenoiseConfig {
        noise_sigma: NoiseSigma::Known(spec.sigma),
        seed,
        ..cfg.clone()
    };
    let report = denoise_image(&noisy, &run_cfg)?;
    Ok(BenchRecord {
        image_name: name.to_string(),
        width: clean.width(),
        height: clean.height(),
        snr_db,
        psnr_noisy: psnr(clean, &noisy)?,
        psnr_denoised: psnr(clean, &report.denoised)?,
        ssim_noisy: ssim(clean, &noisy)?,
        ssim_denoised: ssim(clean, &report.denoised)?,
        wall_time_s: report.wall_time_s,
        seed,
    })
}

/// One record per SNR, in the given order. Point `i` uses noise seed
/// `seed + i`; the denoiser always runs with `seed`.
pub fn run_snr_sweep(
    clean: &Image,
    name: &str,
    snrs: &[f64],
    cfg: &DenoiseConfig,
    seed: u64,
) -> Result<Vec<BenchRecord>> {
    if snrs.is_empty() {
        return Err(Error::InvalidArgument("empty SNR list".into()));
    }
    snrs.iter()
        .enumerate()
        .map(|(i, &snr)| {
            log::info!("{name}: {snr} dB");
            run_point(clean, name, snr, seed.wrapping_add(i as u64), cfg, seed)
        })
        .collect()
}

/// Center-crops the largest square that is a whole multiple of `side`, then
/// averages non-overlapping blocks down to `side x side`.
pub fn crop_and_downsample(image: &Image, side: usize) -> Result<Image> {
    let (h, w) = image.dims();
    if side == 0 || side > h.min(w) {
        return Err(Error::InvalidArgument(format!(
            "side {side} does not fit a {w}x{h} image"
        )));
    }
    let factor = h.min(w) / side;
    let span = factor * side;
    let top = (h - span) / 2;
    let left = (w - span) / 2;
    let area = (factor * factor) as f64;
    Image::from_fn(side, side, image.range_max(), |r, c| {
        let mut s = 0.0;
        for dr in 0..factor {
            for dc in 0..factor {
                s += image.get(top + r * factor + dr, left + c * factor + dc);
            }
        }
        s / area
    })
}

/// One record per output side, all at `snr_db`. Point `i` uses noise seed
/// `seed + i`.
pub fn run_resolution_sweep(
    clean: &Image,
    name: &str,
    sides: &[usize],
    snr_db: f64,
    cfg: &DenoiseConfig,
    seed: u64,
) -> Result<Vec<BenchRecord>> {
    if sides.is_empty() {
        return Err(Error::InvalidArgument("empty side list".into()));
    }
    let (h, w) = clean.dims();
    if let Some(s) = sides.iter().find(|&&s| s > h.min(w)) {
        return Err(Error::InvalidArgument(format!("side {s} larger than {w}x{h} source")));
    }
    sides
        .iter()
        .enumerate()
        .map(|(i, &side)| {
            log::info!("{name}: {side}x{side}");
            let small = crop_and_downsample(clean, side)?;
            run_point(&small, name, snr_db, seed.wrapping_add(i as u64), cfg, seed)
        })
        .collect()
}
