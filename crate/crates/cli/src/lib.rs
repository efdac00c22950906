//! Argument handling for the `ronfa` binary.
//!
//! Exit codes: 0 on success, 1 on runtime failure (I/O, malformed data, an
//! episode that cannot be drawn), 2 on usage errors. Usage errors are reported
//! on a single stderr line that names the offending flag.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use ronfa_core::embedding::{
    generate_synthetic, load_embeddings, save_embeddings, validate_set, Format, SynthSpec,
};
use ronfa_core::episode::EpisodeSpec;
use ronfa_core::eval::{run_evaluation_with_workers, write_report, ReportFormat, RunConfig};
use ronfa_core::field::{ScaleMode, Sigma0Policy};
use ronfa_core::noise::{NoiseKind, NoiseSpec};
use ronfa_core::prototype::ClusterMode;
use ronfa_core::Error;

#[derive(Debug, Parser)]
#[command(name = "ronfa", version, about = "Noise-robust few-shot evaluation with neural-field prototypes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an episodic evaluation over an embedding file.
    Eval(EvalArgs),
    /// Write a synthetic Gaussian-blob embedding file.
    Synth(SynthArgs),
    /// Print size, dimension and class statistics of an embedding file.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DataFormat {
    Binary,
    Csv,
}

impl From<DataFormat> for Format {
    fn from(f: DataFormat) -> Format {
        match f {
            DataFormat::Binary => Format::Binary,
            DataFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    None,
    Sym,
    Pair,
    Outlier,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> NoiseKind {
        match n {
            NoiseArg::None => NoiseKind::None,
            NoiseArg::Sym => NoiseKind::Symmetric,
            NoiseArg::Pair => NoiseKind::Pair,
            NoiseArg::Outlier => NoiseKind::Outlier,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KmeansArg {
    Soft,
    Hard,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Adaptive,
    Fixed,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct EvalArgs {
    /// Embedding file (.emb binary or .csv).
    #[arg(long)]
    data: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<DataFormat>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(2..))]
    n_way: u32,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    k_shot: u32,
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u32).range(1..))]
    queries: u32,
    #[arg(long, value_enum, default_value = "none")]
    noise: NoiseArg,
    /// Fraction of each class's support set to corrupt, in [0, 1).
    #[arg(long, default_value_t = 0.0, value_parser = rate)]
    noise_rate: f64,
    #[arg(long, default_value_t = 600, value_parser = clap::value_parser!(u32).range(1..))]
    episodes: u32,
    /// Master seed; episode seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "soft")]
    kmeans: KmeansArg,
    #[arg(long, value_enum, default_value = "adaptive")]
    scale: ScaleArg,
    /// Initial field scale: `auto` (mean query–prototype distance) or a positive real.
    #[arg(long, default_value = "auto", value_parser = sigma0)]
    sigma0: Sigma0Policy,
    /// Bracket contraction factor, in (0, 1).
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    lambda: f64,
    /// Firing threshold, in (0, A - B) = (0, 1).
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    h_u: f64,
    /// Soft assignment temperature.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    temperature: f64,
    /// L2-normalise support and query features before clustering.
    #[arg(long)]
    normalize: bool,
    /// Convergence threshold on the summed center shift.
    #[arg(long, default_value_t = 1e-4, value_parser = positive)]
    epsilon: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    max_iters: u32,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    max_adapt_iters: u32,
    /// Also score the nearest-mean baseline on the same episodes.
    #[arg(long)]
    baseline: bool,
    /// Report path; `.csv` writes the summary table, anything else full JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads [default: available parallelism].
    #[arg(long, env = "RONFA_WORKERS", value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct SynthArgs {
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    classes: u32,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
    per_class: u32,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
    dim: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10.0, value_parser = positive)]
    center_radius: f64,
    #[arg(long, default_value_t = 0.5, value_parser = non_negative)]
    within_std: f64,
    /// Output format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<DataFormat>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    file: PathBuf,
    #[arg(long, value_enum)]
    format: Option<DataFormat>,
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn rate(s: &str) -> Result<f64, String> {
    let v = parse_real(s)?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1)"))
    }
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v = parse_real(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1)"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = parse_real(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not positive"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v = parse_real(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is negative"))
    }
}

fn sigma0(s: &str) -> Result<Sigma0Policy, String> {
    if s == "auto" {
        Ok(Sigma0Policy::MeanDistance)
    } else {
        positive(s).map(Sigma0Policy::Fixed).map_err(|e| format!("{e}; expected `auto` or a positive real"))
    }
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(flag: &str, e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("error: {flag}: {e}"))
}

/// Parse `argv` (including the program name), run the command and return the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprint!("{e}");
                return 2;
            }
            let rendered = e.to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("error: invalid arguments"));
            return 2;
        }
    };
    let outcome = match cli.command {
        Command::Eval(args) => eval(args),
        Command::Synth(args) => synth(args),
        Command::Inspect(args) => inspect(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("{msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn data_format(explicit: Option<DataFormat>, path: &Path) -> Format {
    explicit.map(Format::from).unwrap_or_else(|| Format::from_path(path))
}

fn build_config(args: &EvalArgs) -> Result<RunConfig, Failure> {
    let episode = EpisodeSpec::new(args.n_way as usize, args.k_shot as usize, args.queries as usize)
        .map_err(|e| usage("--n-way/--k-shot/--queries", e))?;
    let noise = NoiseSpec::new(args.noise.into(), args.noise_rate).map_err(|e| usage("--noise-rate", e))?;
    noise
        .check_quota(episode.k_shot)
        .map_err(|e| usage("--noise-rate", e))?;

    let mut config = RunConfig::new(episode, noise);
    config.episodes = args.episodes as usize;
    config.master_seed = args.seed;
    config.baseline_enabled = args.baseline;
    config.cluster.mode = match args.kmeans {
        KmeansArg::Soft => ClusterMode::Soft,
        KmeansArg::Hard => ClusterMode::Hard,
    };
    config.cluster.temperature = args.temperature;
    config.cluster.epsilon = args.epsilon;
    config.cluster.max_iters = args.max_iters as usize;
    config.cluster.normalize_inputs = args.normalize;
    config.field.scale_mode = match args.scale {
        ScaleArg::Adaptive => ScaleMode::Adaptive,
        ScaleArg::Fixed => ScaleMode::Fixed,
    };
    config.field.sigma0 = args.sigma0;
    config.field.lambda = args.lambda;
    config.field.h_u = args.h_u;
    config.field.max_adapt_iters = args.max_adapt_iters as usize;
    // flag parsers already enforce the ranges; this catches cross-field constraints
    config.validate().map_err(|e| usage("eval", e))?;
    Ok(config)
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    let config = build_config(&args)?;
    let workers = args.workers.map(|w| w as usize).unwrap_or_else(|| {
        std::thread::available_parallelism().map(usize::from).unwrap_or(1)
    });

    let set = load_embeddings(&args.data, data_format(args.format, &args.data))?;
    eprintln!(
        "loaded {}: n={} d={} classes={}",
        args.data.display(),
        set.len(),
        set.dim(),
        set.n_classes()
    );
    if config.noise.kind == NoiseKind::Outlier && set.n_classes() <= config.episode.n_way {
        return Err(usage(
            "--noise outlier",
            format!(
                "needs more than --n-way {} classes in {}, found {}",
                config.episode.n_way,
                args.data.display(),
                set.n_classes()
            ),
        ));
    }
    config.validate_against(&set).map_err(|e| usage("eval", e))?;

    eprintln!(
        "running {} episodes ({}) on {workers} worker(s)",
        config.episodes,
        config.noise.condition_label()
    );
    let report = run_evaluation_with_workers(&set, &config, workers)?;
    if report.summary.fallback_total > 0 {
        eprintln!(
            "note: {} queries fell back to the nearest prototype",
            report.summary.fallback_total
        );
    }

    if let Some(path) = &args.report {
        write_report(&report, path, ReportFormat::from_path(path))?;
        eprintln!("wrote {}", path.display());
    }
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{:<12} accuracy % ± 95% CI", "condition");
    let _ = writeln!(out, "{}", report.summary_line());
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    let spec = SynthSpec {
        n_classes: args.classes as usize,
        per_class: args.per_class as usize,
        dim: args.dim as usize,
        center_radius: args.center_radius,
        within_std: args.within_std,
    };
    spec.validate().map_err(|e| usage("synth", e))?;
    let set = generate_synthetic(&spec, args.seed)?;
    save_embeddings(&set, &args.out, data_format(args.format, &args.out))?;
    eprintln!(
        "wrote {}: n={} d={} classes={}",
        args.out.display(),
        set.len(),
        set.dim(),
        set.n_classes()
    );
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<(), Failure> {
    let set = load_embeddings(&args.file, data_format(args.format, &args.file))?;
    let diag = validate_set(&set);
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "n={}", diag.n_items);
    let _ = writeln!(out, "d={}", diag.dim);
    let _ = writeln!(out, "classes={}", set.n_classes());
    let (lo, hi) = diag
        .class_counts
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    if !diag.class_counts.is_empty() {
        let _ = writeln!(out, "per_class min={lo} max={hi}");
    }
    let _ = writeln!(
        out,
        "norm min={:.4} mean={:.4} max={:.4}",
        diag.norm_min, diag.norm_mean, diag.norm_max
    );
    if diag.has_duplicates() {
        eprintln!(
            "warning: {} groups of duplicate feature vectors",
            diag.duplicate_groups.len()
        );
    }
    Ok(())
}
