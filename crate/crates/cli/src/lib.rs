//! Command implementations behind the `sarposa` binary.
//!
//! Each command has a pure half (`*_image`, `*_report`, `benchmark_rows`) that
//! works on in-memory images and a file-facing half that reads inputs,
//! validates flags and writes outputs. Exit codes: 0 success, 2 usage,
//! 3 I/O, 4 domain or numeric failure.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use sarposa::despeckle::{FilterKind, FilterSpec};
use sarposa::io::{read_raster, write_image, write_report, RasterFormat};
use sarposa::metrics::{edge_map, full_report_with, MetricsReport, ReportOptions, ENL_TILE};
use sarposa::speckle::{apply_speckle, apply_speckle_snr, measured_snr_db, SpeckleKind, SpeckleModel};
use sarposa::superres::{draw_auxiliary, superres_four, superres_one, ObservationSet};
use sarposa::{EdgeMap, Image, WaveletBasis};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] sarposa::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(sarposa::Error::Parameter { .. }) => 2,
            CliError::Core(e) if e.is_io() => 3,
            CliError::Core(_) => 4,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "sarposa", version, about = "SAR speckle simulation, despeckling and superresolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply synthetic speckle to an image.
    Speckle(SpeckleArgs),
    /// Filter an image with one despeckling filter.
    Despeckle(DespeckleArgs),
    /// Reconstruct a double-size image from 1 or 4 observations.
    Superres(SuperresArgs),
    /// Write a one-row metrics report.
    Metrics(MetricsArgs),
    /// Run every filter at its defaults and tabulate the metrics.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SpeckleArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// amplitude, intensity or multilook.
    #[arg(long)]
    pub model: SpeckleKind,
    /// Number of looks; required for multilook.
    #[arg(long, value_name = "L", value_parser = clap::value_parser!(u32).range(1..))]
    pub looks: Option<u32>,
    /// Add scaled speckle noise at this SNR instead of multiplying.
    #[arg(long = "snr-db", value_name = "X", allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct DespeckleArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// posa, median, lee, kuan, frost, visu_hard, visu_soft or visu_semisoft.
    #[arg(long)]
    pub filter: FilterKind,
    /// Odd window size for local filters (default 3).
    #[arg(long, value_name = "K")]
    pub kernel: Option<usize>,
    /// db1 or db4 for wavelet filters (default db1).
    #[arg(long)]
    pub wavelet: Option<WaveletBasis>,
    /// Number of looks for lee and kuan (default 4).
    #[arg(long, value_name = "L", value_parser = clap::value_parser!(u64).range(1..))]
    pub looks: Option<u64>,
    /// Damping factor for frost (default 1).
    #[arg(long, value_name = "D")]
    pub damping: Option<f64>,
    /// Filter in the log domain (local filters only).
    #[arg(long)]
    pub homomorphic: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SuperresArgs {
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// One or four observation files.
    #[arg(long, value_name = "PATH", num_args = 1.., required = true)]
    pub obs: Vec<PathBuf>,
    #[arg(long, default_value_t = WaveletBasis::Db4)]
    pub wavelet: WaveletBasis,
    /// Seed for the auxiliary matrices (single observation only).
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[arg(long, value_name = "PATH")]
    pub noisy: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub despeckled: PathBuf,
    /// Clean scene; adds PSNR and, without --ideal-edges, its edge map for FOM.
    #[arg(long, value_name = "PATH")]
    pub reference: Option<PathBuf>,
    /// Ideal edge map; nonzero pixels are edges.
    #[arg(long = "ideal-edges", value_name = "PATH")]
    pub ideal_edges: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, value_name = "N", default_value_t = ENL_TILE as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub tile: u64,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub reference: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Accepted for interface stability; every filter is deterministic.
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub seed: u64,
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Speckle(a) => cmd_speckle(a),
        Command::Despeckle(a) => cmd_despeckle(a),
        Command::Superres(a) => cmd_superres(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    }
}

fn output_format(out: &Path, input: RasterFormat) -> RasterFormat {
    RasterFormat::for_path(out, input.is_16bit())
}

pub fn speckle_model(args: &SpeckleArgs) -> CliResult<SpeckleModel> {
    let model = match (args.model, args.looks) {
        (SpeckleKind::Multilook, Some(l)) => SpeckleModel::multilook(l, args.seed),
        (SpeckleKind::Multilook, None) => return Err(usage("--looks is required for --model multilook")),
        (kind, Some(l)) if l != 1 => {
            return Err(usage(format!("--looks {l} is only valid with --model multilook, not {kind}")))
        }
        (SpeckleKind::Amplitude, _) => SpeckleModel::amplitude(args.seed),
        (SpeckleKind::Intensity, _) => SpeckleModel::intensity(args.seed),
    };
    if let Some(x) = args.snr_db {
        if x.is_nan() || x == f64::NEG_INFINITY {
            return Err(usage(format!("--snr-db {x} is not a usable target")));
        }
    }
    Ok(model)
}

/// Speckled image before quantization.
pub fn speckle_image(args: &SpeckleArgs, clean: &Image) -> CliResult<Image> {
    let model = speckle_model(args)?;
    Ok(match args.snr_db {
        Some(snr) => apply_speckle_snr(clean, &model, snr)?,
        None => apply_speckle(clean, &model)?,
    })
}

fn cmd_speckle(args: &SpeckleArgs) -> CliResult<()> {
    speckle_model(args)?;
    let (clean, fmt) = read_raster(&args.input)?;
    let noisy = speckle_image(args, &clean)?;
    if args.snr_db.is_some() {
        println!("measured SNR: {:.4} dB", measured_snr_db(&clean, &noisy)?);
    }
    write_image(&noisy, &args.out, output_format(&args.out, fmt))?;
    Ok(())
}

/// Filter parameters from the flags, rejecting flags the filter does not use.
pub fn despeckle_spec(args: &DespeckleArgs) -> CliResult<FilterSpec> {
    let kind = args.filter;
    let name = kind.name();
    let mut spec = FilterSpec::new(kind);
    if let Some(k) = args.kernel {
        if !kind.is_local() {
            return Err(usage(format!("--kernel does not apply to --filter {name}")));
        }
        spec.kernel = k;
    }
    if let Some(b) = args.wavelet {
        if !kind.is_wavelet() {
            return Err(usage(format!("--wavelet does not apply to --filter {name}")));
        }
        spec.basis = b;
    }
    if let Some(l) = args.looks {
        if !matches!(kind, FilterKind::Lee | FilterKind::Kuan) {
            return Err(usage(format!("--looks does not apply to --filter {name}")));
        }
        spec.looks = l;
    }
    if let Some(d) = args.damping {
        if kind != FilterKind::Frost {
            return Err(usage(format!("--damping does not apply to --filter {name}")));
        }
        spec.damping = d;
    }
    if args.homomorphic && !kind.is_local() {
        return Err(usage(format!("--homomorphic does not apply to --filter {name}")));
    }
    spec.homomorphic = args.homomorphic;
    spec.validate()?;
    Ok(spec)
}

/// Filtered image before quantization.
pub fn despeckle_image(args: &DespeckleArgs, img: &Image) -> CliResult<Image> {
    Ok(despeckle_spec(args)?.apply(img)?)
}

fn cmd_despeckle(args: &DespeckleArgs) -> CliResult<()> {
    despeckle_spec(args)?;
    let (img, fmt) = read_raster(&args.input)?;
    let start = Instant::now();
    let out = despeckle_image(args, &img)?;
    let elapsed = start.elapsed();
    write_image(&out, &args.out, output_format(&args.out, fmt))?;
    println!("{}: {:.3} s", args.filter.name(), elapsed.as_secs_f64());
    Ok(())
}

fn check_superres_args(args: &SuperresArgs) -> CliResult<()> {
    match args.obs.len() {
        1 => Ok(()),
        4 if args.seed.is_some() => Err(usage("--seed only applies to a single observation")),
        4 => Ok(()),
        n => Err(usage(format!(
            "--obs takes 1 observation (auxiliary matrices fill the rest) or 4, got {n}"
        ))),
    }
}

/// Reconstruction before quantization.
pub fn superres_image(args: &SuperresArgs, obs: Vec<Image>) -> CliResult<Image> {
    check_superres_args(args)?;
    let set = ObservationSet::new(obs)?;
    Ok(match set.observations() {
        [single] => {
            let (rows, cols) = single.dims();
            let aux = draw_auxiliary(rows, cols, args.seed.unwrap_or(0))?;
            superres_one(single, &aux, args.wavelet)?
        }
        _ => superres_four(&set, args.wavelet)?,
    })
}

fn cmd_superres(args: &SuperresArgs) -> CliResult<()> {
    check_superres_args(args)?;
    let mut obs = Vec::with_capacity(args.obs.len());
    let mut sixteen = false;
    for p in &args.obs {
        let (img, fmt) = read_raster(p)?;
        sixteen |= fmt.is_16bit();
        obs.push(img);
    }
    let hr = superres_image(args, obs)?;
    write_image(&hr, &args.out, RasterFormat::for_path(&args.out, sixteen))?;
    println!("reconstructed {}x{} image", hr.rows(), hr.cols());
    Ok(())
}

/// One-row report; FOM uses `ideal` or, failing that, the reference edges.
pub fn metrics_report(
    noisy: &Image,
    despeckled: &Image,
    reference: Option<&Image>,
    ideal: Option<&EdgeMap>,
    tile: usize,
) -> CliResult<MetricsReport> {
    let derived = match (ideal, reference) {
        (None, Some(r)) => Some(edge_map(r)),
        _ => None,
    };
    let opts = ReportOptions {
        tile,
        ideal_edges: ideal.or(derived.as_ref()),
        reference,
    };
    Ok(full_report_with(noisy, despeckled, &opts)?)
}

fn cmd_metrics(args: &MetricsArgs) -> CliResult<()> {
    let tile = usize::try_from(args.tile).map_err(|_| usage("--tile is too large"))?;
    let (noisy, _) = read_raster(&args.noisy)?;
    let (despeckled, _) = read_raster(&args.despeckled)?;
    let reference = args.reference.as_ref().map(read_raster).transpose()?.map(|(i, _)| i);
    let ideal = match &args.ideal_edges {
        Some(p) => Some(EdgeMap::from_image(&read_raster(p)?.0)),
        None => None,
    };
    let report = metrics_report(&noisy, &despeckled, reference.as_ref(), ideal.as_ref(), tile)?;
    let label = args
        .despeckled
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "despeckled".into());
    for gap in &report.gaps {
        eprintln!("note: {}", gap.code());
    }
    write_report(&[(label, report)], &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

/// Benchmark rows: `original`, then every filter in [`FilterKind::ALL`] order
/// at its defaults. Filters run on scoped threads.
pub fn benchmark_rows(noisy: &Image, reference: Option<&Image>) -> CliResult<Vec<(String, MetricsReport)>> {
    if !noisy.rows().is_multiple_of(2) || !noisy.cols().is_multiple_of(2) {
        return Err(sarposa::Error::Dimension(format!(
            "benchmark needs even dimensions, got {}x{}",
            noisy.rows(),
            noisy.cols()
        ))
        .into());
    }
    let ideal = reference.map(edge_map);
    let opts = ReportOptions {
        ideal_edges: ideal.as_ref(),
        reference,
        ..Default::default()
    };
    let outputs: Vec<sarposa::Result<Image>> = std::thread::scope(|s| {
        let handles: Vec<_> = FilterKind::ALL
            .iter()
            .map(|&k| s.spawn(move || FilterSpec::new(k).apply(noisy)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("filter thread panicked"))
            .collect()
    });

    let mut original = full_report_with(noisy, noisy, &opts)?;
    original.msd = None;
    let mut rows = vec![("original".to_string(), original)];
    for (kind, out) in FilterKind::ALL.iter().zip(outputs) {
        rows.push((kind.name().to_string(), full_report_with(noisy, &out?, &opts)?));
    }
    Ok(rows)
}

fn cmd_benchmark(args: &BenchmarkArgs) -> CliResult<()> {
    let (noisy, _) = read_raster(&args.input)?;
    let reference = args.reference.as_ref().map(read_raster).transpose()?.map(|(i, _)| i);
    let rows = benchmark_rows(&noisy, reference.as_ref())?;
    write_report(&rows, &args.out)?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}
