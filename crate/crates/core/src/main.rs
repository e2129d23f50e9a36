use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use cofib::bench::{
    emit_csv, emit_svg_chart, read_csv, run_resolution_sweep, run_snr_sweep, BenchRecord,
    DEFAULT_RESOLUTION_SNR, DEFAULT_SIDES, DEFAULT_SNRS,
};
use cofib::imagekit::{load_pgm, psnr, save_pgm, ssim};
use cofib::{denoise_image, DenoiseConfig, Error, NoiseSigma};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_PIPELINE: u8 = 3;

/// Collaborative sparse-domain image denoiser.
#[derive(Parser)]
#[command(name = "cofib", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise a PGM image.
    Denoise(DenoiseArgs),
    /// Add noise at a range of SNRs to a clean image, denoise, and record metrics.
    SweepSnr(SweepSnrArgs),
    /// Downsample a clean image to several sizes, add noise, denoise, and record metrics.
    SweepRes(SweepResArgs),
    /// Render a sweep CSV as an SVG line chart.
    Chart(ChartArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON file with denoiser settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random choice; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Known noise standard deviation in intensity units.
    #[arg(long)]
    sigma: Option<f64>,
    /// Clean image to score the result against.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Write ASCII (P2) instead of binary (P5).
    #[arg(long)]
    ascii: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepOutput {
    /// CSV file to write.
    #[arg(long)]
    output: PathBuf,
    /// Also write a chart of the sweep.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Image label in the CSV (default: input file stem).
    #[arg(long)]
    name: Option<String>,
    /// Record measured wall time; without this the column is 0 so reruns are byte-identical.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SweepSnrArgs {
    /// Clean PGM image.
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated input SNRs in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = DEFAULT_SNRS.to_vec())]
    snrs: Vec<f64>,
    #[command(flatten)]
    out: SweepOutput,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepResArgs {
    /// Clean PGM image.
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated output sides in pixels.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIDES.to_vec())]
    sides: Vec<usize>,
    /// Input SNR in dB.
    #[arg(long, allow_hyphen_values = true, default_value_t = DEFAULT_RESOLUTION_SNR)]
    snr: f64,
    #[command(flatten)]
    out: SweepOutput,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ChartArgs {
    /// Sweep CSV.
    #[arg(long)]
    input: PathBuf,
    /// SVG file to write.
    #[arg(long)]
    output: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } | Error::MalformedPgm(_) | Error::TruncatedRaster { .. } => EXIT_IO,
            Error::Config(_) => EXIT_USAGE,
            _ => EXIT_PIPELINE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<DenoiseConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure {
                code: EXIT_IO,
                message: format!("cannot read config {}: {e}", path.display()),
            })?;
            DenoiseConfig::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        None => DenoiseConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn metric_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn run_denoise(args: DenoiseArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.common)?;
    if let Some(s) = args.sigma {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Failure::usage(format!("--sigma {s} must be a non-negative number")));
        }
        cfg.noise_sigma = NoiseSigma::Known(s);
    }
    let noisy = load_pgm(&args.input)?;
    let reference = args.reference.as_ref().map(load_pgm).transpose()?;
    let report = denoise_image(&noisy, &cfg)?;
    save_pgm(&report.denoised, &args.output, !args.ascii)?;

    let mut summary = Map::new();
    summary.insert("input".into(), json!(args.input.display().to_string()));
    summary.insert("output".into(), json!(args.output.display().to_string()));
    summary.insert("width".into(), json!(noisy.width()));
    summary.insert("height".into(), json!(noisy.height()));
    summary.insert("sigma".into(), json!(report.sigma_used));
    summary.insert("cluster_sizes".into(), json!(report.per_cluster_sizes));
    summary.insert("wall_time_s".into(), json!(report.wall_time_s));
    if let Some(clean) = reference {
        let written = report.denoised.quantized();
        summary.insert("psnr_noisy".into(), metric_value(psnr(&clean, &noisy)?));
        summary.insert("psnr_denoised".into(), metric_value(psnr(&clean, &written)?));
        summary.insert("ssim_noisy".into(), metric_value(ssim(&clean, &noisy)?));
        summary.insert("ssim_denoised".into(), metric_value(ssim(&clean, &written)?));
    }
    println!("{}", Value::Object(summary));
    Ok(())
}

fn image_name(input: &Path, name: &Option<String>) -> String {
    name.clone().unwrap_or_else(|| {
        input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".into())
    })
}

fn write_sweep(mut records: Vec<BenchRecord>, out: &SweepOutput) -> Result<(), Failure> {
    if !out.timing {
        records.iter_mut().for_each(|r| r.wall_time_s = 0.0);
    }
    emit_csv(&records, &out.output)?;
    if let Some(svg) = &out.svg {
        emit_svg_chart(&records, svg)?;
    }
    Ok(())
}

fn run_sweep_snr(args: SweepSnrArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common)?;
    if args.snrs.is_empty() {
        return Err(Failure::usage("--snrs must list at least one value"));
    }
    let clean = load_pgm(&args.input)?;
    let name = image_name(&args.input, &args.out.name);
    let records = run_snr_sweep(&clean, &name, &args.snrs, &cfg, cfg.seed)?;
    write_sweep(records, &args.out)
}

fn run_sweep_res(args: SweepResArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common)?;
    if args.sides.is_empty() {
        return Err(Failure::usage("--sides must list at least one value"));
    }
    let clean = load_pgm(&args.input)?;
    let name = image_name(&args.input, &args.out.name);
    let records = run_resolution_sweep(&clean, &name, &args.sides, args.snr, &cfg, cfg.seed)?;
    write_sweep(records, &args.out)
}

fn run_chart(args: ChartArgs) -> Result<(), Failure> {
    let records = read_csv(&args.input).map_err(|e| match e {
        Error::Io { .. } => Failure::from(e),
        other => Failure {
            code: EXIT_IO,
            message: other.to_string(),
        },
    })?;
    emit_svg_chart(&records, &args.output)?;
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("COFIB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("COFIB_THREADS={value:?} must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Denoise(a) => run_denoise(a),
        Command::SweepSnr(a) => run_sweep_snr(a),
        Command::SweepRes(a) => run_sweep_res(a),
        Command::Chart(a) => run_chart(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cofib: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
