use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use alphabrush_cli::commands::{self, MaximalKind, NormKind};
use alphabrush_cli::config::RunConfig;

#[derive(Parser)]
#[command(name = "alphabrush", version, about = "Brushlet analysis on structured frequency coverings")]
struct Cli {
    /// Configuration file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or validate covering files.
    Covering {
        #[command(subcommand)]
        action: CoveringAction,
    },
    /// Render bell profiles to CSV.
    Bells {
        #[command(subcommand)]
        action: BellsAction,
    },
    /// Expand a stored spectrum into coefficients.
    Analyze(AnalyzeArgs),
    /// Reconstruct a spectrum from coefficients.
    Synthesize(SynthesizeArgs),
    /// Orthonormality check of a basis subset.
    Gram(GramArgs),
    /// Norms of coefficients or spectra.
    Norm(NormArgs),
    /// m-term thresholding error report.
    Compress(CompressArgs),
    /// Maximal-operator diagnostics.
    Maximal(MaximalArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// End-to-end demonstration pipeline.
    Demo(DemoArgs),
}

#[derive(Subcommand)]
enum CoveringAction {
    /// Construct a covering and write it as JSON.
    Build {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        r1: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        jmin: Option<i32>,
        #[arg(long, allow_negative_numbers = true)]
        jmax: Option<i32>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Check a stored covering against its reconstruction and thresholds.
    Validate { file: PathBuf },
}

#[derive(Subcommand)]
enum BellsAction {
    /// Sample one bell (and optionally its time profile) to CSV.
    Render {
        /// lo,hi,eps_lo,eps_hi
        #[arg(long)]
        interval: String,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Also emit the transformed central bell magnitudes.
        #[arg(long)]
        time: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    covering: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    tail_tol: f64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[arg(long)]
    covering: PathBuf,
    #[arg(long)]
    coeffs: PathBuf,
    /// Samples per axis of the output grid.
    #[arg(long, default_value_t = 512)]
    grid_m: usize,
    /// Half-width of the output grid; zero derives it from the covering.
    #[arg(long, default_value_t = 0.0)]
    extent: f64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct GramArgs {
    #[arg(long)]
    covering: PathBuf,
    /// Minimum subset size.
    #[arg(long, default_value_t = 200)]
    subset: usize,
    /// Optional CSV dump of the full matrix.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Args)]
struct NormArgs {
    /// f (Triebel-Lizorkin), m (decomposition), seq, or sfunc.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    s: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Use "inf" for the supremum variant.
    #[arg(long, default_value = "2")]
    q: String,
    #[arg(long)]
    covering: PathBuf,
    #[arg(long)]
    coeffs: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct CompressArgs {
    #[arg(long)]
    covering: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated retention counts.
    #[arg(long, default_value = "10,100,1000")]
    m: String,
    /// l2 or fnorm.
    #[arg(long, default_value = "l2")]
    mode: String,
    /// Smoothness used by the fnorm ranking.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    s: f64,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct MaximalArgs {
    /// hl, peetre, or maxbound.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 65)]
    grid_m: usize,
    #[arg(long, default_value_t = 0.15)]
    step: f64,
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 5)]
    sets: usize,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    /// Input spectrum (.spg) or image (.pgm); synthetic bumps when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "10,100,1000")]
    m: String,
    #[arg(long, default_value = "l2")]
    mode: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    s: f64,
    #[arg(short, long)]
    out: PathBuf,
}

fn parse_mode(mode: &str, s: f64) -> Result<alphabrush::approx::WeightMode, alphabrush::Error> {
    match mode {
        "l2" => Ok(alphabrush::approx::WeightMode::L2),
        "fnorm" => Ok(alphabrush::approx::WeightMode::FNorm { s }),
        other => Err(alphabrush::Error::Format(format!("unknown mode {other}"))),
    }
}

fn run(cli: Cli) -> Result<u8, alphabrush::Error> {
    let mut cfg = RunConfig::load_or_default(cli.config.as_deref())?;
    match cli.command {
        Command::Covering { action } => match action {
            CoveringAction::Build { alpha, r1, jmin, jmax, out } => {
                if let Some(a) = alpha {
                    cfg.covering.alpha = a;
                }
                if let Some(r) = r1 {
                    cfg.covering.r1 = r;
                }
                if let Some(j) = jmin {
                    cfg.covering.j_min = j;
                }
                if let Some(j) = jmax {
                    cfg.covering.j_max = j;
                }
                commands::covering_build(&cfg, &out)?;
                commands::write_config_sidecar(&cfg, &out)?;
                Ok(0)
            }
            CoveringAction::Validate { file } => {
                Ok(if commands::covering_validate(&cfg, &file)? { 0 } else { 1 })
            }
        },
        Command::Bells { action } => match action {
            BellsAction::Render { interval, samples, time, out } => {
                let iv = commands::parse_interval(&interval)?;
                commands::bells_render(&cfg, &iv, samples, time, &out)?;
                Ok(0)
            }
        },
        Command::Analyze(args) => {
            let summary =
                commands::analyze(&cfg, &args.covering, &args.input, args.tail_tol, &args.out)?;
            commands::write_config_sidecar(&cfg, &args.out)?;
            commands::print_json(&summary);
            Ok(0)
        }
        Command::Synthesize(args) => {
            commands::synthesize(
                &cfg,
                &args.covering,
                &args.coeffs,
                args.grid_m,
                args.extent,
                &args.out,
            )?;
            Ok(0)
        }
        Command::Gram(args) => {
            let summary =
                commands::gram(&cfg, &args.covering, args.subset, args.matrix.as_deref())?;
            commands::print_json(&summary);
            Ok(0)
        }
        Command::Norm(args) => {
            let kind = NormKind::parse(&args.kind)?;
            let q = if args.q == "inf" {
                f64::INFINITY
            } else {
                args.q
                    .parse()
                    .map_err(|_| alphabrush::Error::Format(format!("bad q {}", args.q)))?
            };
            let out = commands::norm(
                &cfg,
                kind,
                args.s,
                args.p,
                q,
                &args.covering,
                args.coeffs.as_deref(),
                args.input.as_deref(),
            )?;
            commands::print_json(&out);
            Ok(0)
        }
        Command::Compress(args) => {
            let m = commands::parse_m_list(&args.m)?;
            let mode = parse_mode(&args.mode, args.s)?;
            commands::compress(&cfg, &args.covering, &args.input, &m, mode, &args.report)?;
            Ok(0)
        }
        Command::Maximal(args) => {
            let kind = match args.kind.as_str() {
                "hl" => MaximalKind::HardyLittlewood { r: args.r },
                "peetre" => MaximalKind::Peetre { a: args.a, big_r: args.scale },
                "maxbound" => MaximalKind::Maxbound { r: args.r, sets: args.sets },
                other => {
                    return Err(alphabrush::Error::Format(format!("unknown maximal kind {other}")))
                }
            };
            commands::maximal(&cfg, kind, args.grid_m, args.step, &args.out)?;
            Ok(0)
        }
        Command::Verify(args) => Ok(if commands::verify(&cfg, args.out.as_deref())? { 0 } else { 1 }),
        Command::Demo(args) => {
            let m = commands::parse_m_list(&args.m)?;
            let mode = parse_mode(&args.mode, args.s)?;
            let metrics = commands::demo(&cfg, args.input.as_deref(), &m, mode, &args.out)?;
            commands::print_json(&metrics);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
