//! Command-line front end: argument parsing, configuration layering and the
//! `interp`, `eval`, `flow` and `selftest` commands.

mod commands;
mod selftest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flowinterp::control::{LoopKind, RunConfig};
use flowinterp::io::ImageFormat;
use flowinterp::transport::Scheme;

pub use commands::{cmd_eval, cmd_flow, cmd_interp, EvalOutput, FlowOutput, FrameRecord, InterpMetadata, TruthReport};
pub use selftest::{cmd_selftest, corrupted_limiter, CheckResult, SelftestOptions};

/// Failure classes with distinct process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Solver(String),
    #[error("{failed} of {total} self-test checks failed")]
    SelftestFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SelftestFailed { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

impl From<flowinterp::Error> for CliError {
    fn from(e: flowinterp::Error) -> Self {
        use flowinterp::Error as E;
        let msg = e.to_string();
        match e {
            E::Io(_) | E::Format { .. } => CliError::Io(msg),
            E::NonConvergence { .. } | E::NonFinite(_) | E::CflViolation { .. } | E::DegenerateTriangle { .. } => {
                CliError::Solver(msg)
            }
            E::DimensionTooSmall { .. }
            | E::DimensionMismatch { .. }
            | E::AspectMismatch { .. }
            | E::BufferLength { .. }
            | E::InvalidConfig(_)
            | E::InvalidTime { .. } => CliError::Usage(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "flowinterp", version, about = "Optimal-control optical flow and frame interpolation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize intermediate frames between two images.
    Interp(InterpArgs),
    /// Interpolation error of one image against a reference.
    Eval(EvalArgs),
    /// Estimate the forward flow between two images.
    Flow(FlowArgs),
    /// Run the built-in synthetic checks.
    Selftest(SelftestArgs),
}

/// Knobs shared by the commands that run the solver. Precedence: built-in
/// defaults, then `--config`, then `--set`, then the dedicated flags.
#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    /// Segregation loop (1 or 2).
    #[arg(long = "loop", value_name = "1|2")]
    pub loop_kind: Option<LoopKind>,
    /// Number of coarser pyramid levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Regularization weight on the coarsest level.
    #[arg(long)]
    pub lambda_star: Option<f64>,
    /// Ratio of the geometric weight schedule of loop I.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Iterations per level.
    #[arg(long)]
    pub n_loop: Option<usize>,
    /// Transport discretization.
    #[arg(long, value_name = "char|tvd")]
    pub scheme: Option<Scheme>,
    /// Number of piecewise-constant flow samples in time.
    #[arg(long)]
    pub nt: Option<usize>,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` override (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl SolverArgs {
    pub fn loop_kind(&self) -> LoopKind {
        self.loop_kind.unwrap_or_default()
    }

    pub fn run_config(&self) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{item}`")))?;
            cfg.set(k, v)?;
        }
        if let Some(v) = self.levels {
            cfg.pyramid_levels = v;
        }
        if let Some(v) = self.lambda_star {
            cfg.lambda_star = v;
        }
        if let Some(v) = self.kappa {
            cfg.set("kappa", &v.to_string())?;
        }
        if let Some(v) = self.n_loop {
            cfg.n_loop = v;
        }
        if let Some(v) = self.scheme {
            cfg.scheme = v;
        }
        if let Some(v) = self.nt {
            cfg.n_t = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Png,
    Pgm,
}

#[derive(Debug, Clone, Args)]
pub struct InterpArgs {
    /// First frame (t = 0).
    pub frame0: PathBuf,
    /// Last frame (t = T).
    pub frame_t: PathBuf,
    /// Output directory (created if missing).
    #[arg(short, long)]
    pub out: PathBuf,
    /// Comma-separated times in [0, T]; defaults to T/2.
    #[arg(long, value_delimiter = ',', conflicts_with = "frames")]
    pub times: Vec<f64>,
    /// Number of uniformly spaced interior frames.
    #[arg(long)]
    pub frames: Option<usize>,
    /// One-sided interpolation from the first frame only.
    #[arg(long)]
    pub no_average: bool,
    /// Image format of the 8-bit frames.
    #[arg(long, value_enum, default_value_t = OutputFormat::Png)]
    pub format: OutputFormat,
    /// Write loss-free PFM frames instead.
    #[arg(long)]
    pub float_out: bool,
    /// Reference frame; its IE and the static-average baseline go into the metadata.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Time of the reference frame (defaults to T/2).
    #[arg(long, requires = "truth")]
    pub truth_time: Option<f64>,
    /// Pixels ignored at each edge when evaluating against `--truth`.
    #[arg(long, default_value_t = 0)]
    pub crop_border: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

impl InterpArgs {
    pub fn new(frame0: impl Into<PathBuf>, frame_t: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            frame0: frame0.into(),
            frame_t: frame_t.into(),
            out: out.into(),
            times: Vec::new(),
            frames: None,
            no_average: false,
            format: OutputFormat::Png,
            float_out: false,
            truth: None,
            truth_time: None,
            crop_border: 0,
            solver: SolverArgs::default(),
        }
    }

    pub(crate) fn image_format(&self) -> ImageFormat {
        match (self.float_out, self.format) {
            (true, _) => ImageFormat::Pfm,
            (false, OutputFormat::Png) => ImageFormat::Png,
            (false, OutputFormat::Pgm) => ImageFormat::Pgm,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Interpolated frame.
    pub interp: PathBuf,
    /// Ground-truth frame.
    pub truth: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub crop_border: usize,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Print the JSON report instead of the one-line summary.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    pub frame0: PathBuf,
    pub frame_t: PathBuf,
    /// Destination `.flo` file (time-averaged forward flow).
    #[arg(short, long)]
    pub out: PathBuf,
    /// Optional JSON file with the configuration and iteration histories.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    /// Skip the convergence studies.
    #[arg(long)]
    pub quick: bool,
    /// Negative control: swap in a broken limiter, which must make the suite fail.
    #[arg(long, hide = true)]
    pub corrupt_limiter: bool,
}

/// Runs one parsed invocation; returns the text to print on success.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Interp(args) => {
            let meta = cmd_interp(&args)?;
            let mut text = format!(
                "wrote {} frame(s) and {} to {}",
                meta.frames.len(),
                meta.flows.join(", "),
                args.out.display()
            );
            if let Some(t) = &meta.evaluation {
                text.push_str(&format!(
                    "\nIE at t = {}: {:.3} (static average {:.3})",
                    t.time, t.ie, t.baseline_ie
                ));
            }
            Ok(text)
        }
        Command::Eval(args) => {
            let out = cmd_eval(&args)?;
            if args.json {
                serde_json::to_string_pretty(&out).map_err(|e| CliError::Io(e.to_string()))
            } else {
                Ok(format!("IE: {:.3}", out.ie))
            }
        }
        Command::Flow(args) => {
            let out = cmd_flow(&args)?;
            Ok(format!(
                "wrote {} (max speed {:.3} px, terminal mismatch {:.3})",
                args.out.display(),
                out.max_speed,
                out.final_mismatch
            ))
        }
        Command::Selftest(args) => {
            let opts = SelftestOptions {
                quick: args.quick,
                limiter: if args.corrupt_limiter {
                    corrupted_limiter
                } else {
                    flowinterp::transport::superbee::<f64>
                },
            };
            let results = cmd_selftest(&opts);
            let mut text = String::new();
            for r in &results {
                text.push_str(&format!("{} {}: {}\n", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail));
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                eprint!("{text}");
                return Err(CliError::SelftestFailed {
                    failed,
                    total: results.len(),
                });
            }
            text.push_str(&format!("all {} checks passed", results.len()));
            Ok(text)
        }
    }
}
