//! Collaborative-filtering image denoising in the sparse domain.
//!
//! A noisy grayscale image is split into one overlapping patch per pixel,
//! the intensity-normalized patches are grouped with k-means, a K-SVD
//! dictionary is learned for each group, and every patch is sparse coded by a
//! Bayesian matching pursuit whose per-atom activity priors are refined by
//! the activity posteriors of its most similar neighbours. Denoised patches
//! are averaged back into the image.
//!
//! The modules mirror the stages of the pipeline:
//!
//! - [`imagekit`]: images, PGM I/O, AWGN synthesis, PSNR/SSIM
//! - [`patches`]: per-pixel patch extraction, normalization, aggregation
//! - [`clustering`]: k-means over normalized patches
//! - [`dictlearn`]: OMP and K-SVD dictionary learning
//! - [`sparsebayes`]: Bayesian matching pursuit with activity priors
//! - [`collab`]: neighbour selection, collaboration weights, prior updates
//! - [`pipeline`]: end-to-end denoiser and its configuration
//! - [`bench`]: experiment sweeps, CSV and SVG output

pub mod bench;
pub mod clustering;
pub mod collab;
pub mod dictlearn;
mod error;
pub mod imagekit;
pub(crate) mod linalg;
pub mod patches;
pub mod pipeline;
pub(crate) mod rng;
pub mod sparsebayes;

pub use error::{Error, Result};
pub use imagekit::Image;
pub use pipeline::{denoise_image, DenoiseConfig, DenoiseReport, NoiseSigma};

