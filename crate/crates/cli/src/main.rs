//! `escp`: entropy and compressibility of quantized sample streams.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use escp_core::gaussian::Discretization;
use escp_core::ingest::Packing;

#[derive(Parser, Debug)]
#[command(name = "escp", version, about = "Entropy and compressibility of quantized sample streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Histogram statistics, entropy and compressibility of raw sample files.
    Analyze(AnalyzeArgs),
    /// Entropy of a discretized Gaussian source over a range of σ.
    Model(ModelArgs),
    /// Fit C% = a·exp(−b·σ) to a model sweep.
    Fit(FitArgs),
    /// Binary entropy function H(p).
    Curve(CurveArgs),
    /// Write a synthetic Gaussian sample file plus a `.meta` sidecar.
    Gen(GenArgs),
    /// Compress a raw sample file into a codec container.
    Pack(PackArgs),
    /// Restore a raw sample file from a codec container.
    Unpack(UnpackArgs),
    /// Run external compressors and the built-in codec on a file.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
struct FormatArgs {
    /// Bits per sample.
    #[arg(long, default_value_t = 8)]
    bits: u32,
    /// Bytes to skip before the first sample [default: 16 for .lba files, else 0]
    #[arg(long, value_name = "BYTES")]
    header_skip: Option<u64>,
    /// Stop after this many samples.
    #[arg(long, value_name = "N")]
    max_samples: Option<u64>,
    /// Sample packing [default: byte at 8 bits, msb below]
    #[arg(long, value_enum)]
    packing: Option<PackingArg>,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Also write the report as CSV (`-` for stdout instead of the text table).
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
    /// Also estimate the conditional entropy H₂ from bigrams.
    #[arg(long)]
    bigrams: bool,
    /// Worker threads for the histogram pass.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct SweepArgs {
    #[arg(long, default_value_t = 8)]
    bits: u32,
    /// Source mean [default: half the alphabet size]
    #[arg(long)]
    mu: Option<f64>,
    /// Comma-separated σ values.
    #[arg(long, value_delimiter = ',', conflicts_with = "sigma_range")]
    sigma: Option<Vec<f64>>,
    /// σ grid as LO:HI:STEP.
    #[arg(long, value_name = "LO:HI:STEP", value_parser = parse_range3)]
    sigma_range: Option<(f64, f64, f64)>,
    #[arg(long, value_enum, default_value_t = ModeArg::Integral)]
    mode: ModeArg,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    #[command(flatten)]
    out: OutputArgs,
    /// Write SVG charts (bits to PATH, C% to a `_c_percent` sibling).
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// CSV with `sigma` and `c_percent` columns; omitted, the default sweep is fitted.
    input: Option<PathBuf>,
    /// Inclusive σ window used for the fit.
    #[arg(long, value_name = "LO:HI", value_parser = parse_range2, default_value = "5:60")]
    fit_range: (f64, f64),
    #[command(flatten)]
    sweep: SweepArgs,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    output: PathBuf,
    #[arg(long, default_value_t = 8)]
    bits: u32,
    /// [default: half the alphabet size]
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 1_000_000)]
    count: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum)]
    packing: Option<PackingArg>,
}

#[derive(Args, Debug)]
struct PackArgs {
    input: PathBuf,
    output: PathBuf,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args, Debug)]
struct UnpackArgs {
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    input: PathBuf,
    /// Comma-separated tool identifiers; `builtin` is the range coder.
    #[arg(long, value_delimiter = ',', default_value = "builtin,gzip,bzip2,lzma")]
    tools: Vec<String>,
    /// Adapter overrides, `id.compress = argv template` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Timed runs per tool; the median is reported.
    #[arg(long, default_value_t = escp_core::bench::DEFAULT_RUNS)]
    runs: usize,
    #[command(flatten)]
    format: FormatArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PackingArg {
    Byte,
    Msb,
    Lsb,
}

impl From<PackingArg> for Packing {
    fn from(p: PackingArg) -> Self {
        match p {
            PackingArg::Byte => Packing::OneBytePerSample,
            PackingArg::Msb => Packing::PackedMsbFirst,
            PackingArg::Lsb => Packing::PackedLsbFirst,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Integral,
    Sampled,
}

impl From<ModeArg> for Discretization {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Integral => Discretization::BinIntegral,
            ModeArg::Sampled => Discretization::PointSampled,
        }
    }
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != n {
        return Err(format!("expected {n} colon-separated numbers"));
    }
    parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn parse_range2(s: &str) -> Result<(f64, f64), String> {
    let v = parse_floats(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_range3(s: &str) -> Result<(f64, f64, f64), String> {
    let v = parse_floats(s, 3)?;
    Ok((v[0], v[1], v[2]))
}

/// Exit status 2: bad usage or unusable input.
pub const EXIT_USAGE: u8 = 2;
/// Exit status 3: a round trip did not reproduce its input.
pub const EXIT_VERIFY: u8 = 3;

/// An error paired with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: EXIT_USAGE,
            error: e.into(),
        }
    }
}

pub type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Model(a) => commands::model(a),
        Command::Fit(a) => commands::fit(a),
        Command::Curve(a) => commands::curve(a),
        Command::Gen(a) => commands::gen(a),
        Command::Pack(a) => commands::pack(a),
        Command::Unpack(a) => commands::unpack(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("escp: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
