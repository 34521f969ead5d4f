//! Batch command-line surface.
//!
//! Exit codes: 0 every check passed, 1 input or usage error, 2 a verification
//! check failed.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::family::{
    self, FamilyFormat, Field, GeneratorKind, GeneratorSpec, TailMode, VectorFamily,
};
use crate::linalg::DEFAULT_RANK_TOL;
use crate::pipeline::{self, Method, Mode, PipelineConfig};
use crate::report::{self, CertificateDoc, Source, StoredCertificate, SweepRow};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "lowerframe",
    version,
    about = "Certified lower-frame weights for total vector families"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated family as JSON (or CSV for real, zero-tail families).
    Generate(GenerateArgs),
    /// Run the construction and write a certificate.
    Analyze(AnalyzeArgs),
    /// Re-check the weights of a stored certificate against a family.
    Verify(VerifyArgs),
    /// Analyze generated families over a list of dimensions.
    #[command(
        after_help = "CSV columns: d,N,mode,T_norm,min_frame_eig,max_lambda,status \
        (plus runtime_ms with --timing). status is ok, failed, overflow or error."
    )]
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    /// Generator kind.
    #[arg(long = "gen", value_enum)]
    pub kind: Option<GeneratorKind>,
    /// Ambient dimension d.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Number of stored vectors N.
    #[arg(long)]
    pub count: Option<usize>,
    /// Tail rule past N (defaults to the generator's own).
    #[arg(long, value_enum)]
    pub tail: Option<TailMode>,
    /// Damping factor for damped_tail.
    #[arg(long, default_value_t = family::DEFAULT_DAMPING)]
    pub damping: f64,
    /// Scalar field for random_gaussian.
    #[arg(long, value_enum, default_value_t = Field::Complex)]
    pub field: Field,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Method::Direct)]
    pub method: Method,
    #[arg(long = "rank-tol", default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    #[arg(long = "lambda-floor", default_value_t = 0.0)]
    pub lambda_floor: f64,
    /// Random unit vectors per sampled check.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            mode: self.mode,
            method: self.method,
            rank_tol: self.rank_tol,
            lambda_floor: self.lambda_floor,
            samples: self.samples,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Family file (.csv is read as CSV, anything else as JSON).
    #[arg(long, conflicts_with = "kind")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Certificate destination; without it the certificate goes to stdout
    /// and the summary to stderr.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json: full certificate; csv: the k,value,log2 weight table.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Certificate written by `analyze`.
    #[arg(long)]
    pub cert: PathBuf,
    /// Family the certificate was computed for.
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to the certificate's own sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Defaults to the certificate's own seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Optional JSON report destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long = "gen", value_enum)]
    pub kind: GeneratorKind,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub tail: Option<TailMode>,
    #[arg(long, default_value_t = family::DEFAULT_DAMPING)]
    pub damping: f64,
    #[arg(long, value_enum, default_value_t = Field::Complex)]
    pub field: Field,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Append a wall-clock runtime_ms column (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Generate(a) => cmd_generate(a, stdout),
        Command::Analyze(a) => cmd_analyze(a, stdout, stderr),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn spec_from(g: &GeneratorArgs, seed: u64) -> Result<GeneratorSpec> {
    let kind = g
        .kind
        .ok_or_else(|| Error::Input("either --gen KIND or --input PATH is required".into()))?;
    let dim = g
        .dim
        .ok_or_else(|| Error::Input("--dim is required with --gen".into()))?;
    let mut spec = GeneratorSpec::new(kind, dim)
        .with_seed(seed)
        .with_damping(g.damping)
        .with_field(g.field);
    spec.count = g.count;
    spec.tail = g.tail;
    Ok(spec)
}

fn input_format(path: &Path) -> FamilyFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => FamilyFormat::Csv,
        _ => FamilyFormat::Json,
    }
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

pub fn cmd_generate(args: &GenerateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let spec = spec_from(&args.generator, args.seed)?;
    let family = family::generate_family(&spec)?;
    let text = match args.format {
        OutputFormat::Json => family.to_json_string(),
        OutputFormat::Csv => family.to_csv_string()?,
    };
    write_output(args.out.as_deref(), &text, stdout)?;
    Ok(EXIT_OK)
}

fn load_source(args: &AnalyzeArgs) -> Result<(VectorFamily, Source)> {
    match &args.input {
        Some(path) => {
            let family = family::load_family(path, input_format(path))?;
            Ok((
                family,
                Source::Input {
                    path: path.display().to_string(),
                },
            ))
        }
        None => {
            let spec = spec_from(&args.generator, args.pipeline.seed)?;
            let family = family::generate_family(&spec)?;
            Ok((family, Source::Generator(spec)))
        }
    }
}

pub fn cmd_analyze(
    args: &AnalyzeArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    let (family, source) = load_source(args)?;
    let run = pipeline::run_pipeline(&family, &args.pipeline.config())?;
    let doc = CertificateDoc::from_run(&family, &run, source);
    let text = match args.format {
        OutputFormat::Json => doc.to_json_string(),
        OutputFormat::Csv => doc.lambda_csv(),
    };
    write_output(args.out.as_deref(), &text, stdout)?;
    let summary: &mut dyn Write = if args.out.is_some() { stdout } else { stderr };
    let _ = summary.write_all(doc.summary().as_bytes());
    Ok(if doc.passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let text = fs::read_to_string(&args.cert).map_err(|source| Error::Io {
        path: args.cert.display().to_string(),
        source,
    })?;
    let stored = StoredCertificate::parse(&text)?;
    let family = family::load_family(&args.input, input_format(&args.input))?;
    if stored.dim != family.dim() {
        return Err(Error::Input(format!(
            "certificate is for dimension {}, family has dimension {}",
            stored.dim,
            family.dim()
        )));
    }
    if family.tail() == TailMode::Zero {
        if let Some(&k) = stored.lambda.keys().find(|&&k| k > family.len()) {
            return Err(Error::Input(format!(
                "certificate weights index {k}, family has only {} vectors",
                family.len()
            )));
        }
    }
    let samples = args.samples.or(stored.sample_count).unwrap_or(1000);
    if samples == 0 {
        return Err(Error::Input("samples must be at least 1".into()));
    }
    let seed = args.seed.or(stored.seed).unwrap_or(0);
    let lambda_eff = pipeline::effective_weights(&stored.lambda, &family);
    let report = verify::check_lower_frame(&family, &lambda_eff, samples, seed);
    if let Some(out) = &args.out {
        let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
        json.push('\n');
        write_output(Some(out), &json, stdout)?;
    }
    let min_eig = report
        .get("lower_frame.min_eig")
        .map(|c| c.rhs)
        .unwrap_or(f64::NAN);
    let _ = writeln!(stdout, "min_frame_eig = {}", report::fmt_f64(min_eig));
    let _ = stdout.write_all(report::check_tally(&report.checks).as_bytes());
    Ok(if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

pub fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<i32> {
    if let Some(bad) = args.dims.iter().find(|&&d| d == 0) {
        return Err(Error::Input(format!(
            "sweep dimensions must be at least 1, got {bad}"
        )));
    }
    let config = args.pipeline.config();
    config.validate()?;
    let mut rows = Vec::with_capacity(args.dims.len());
    let mut any_failed = false;
    let mut any_error = false;
    for &d in &args.dims {
        let mut spec = GeneratorSpec::new(args.kind, d)
            .with_seed(config.seed)
            .with_damping(args.damping)
            .with_field(args.field);
        spec.count = args.count;
        spec.tail = args.tail;
        let started = Instant::now();
        let family = family::generate_family(&spec);
        let n = family
            .as_ref()
            .map(|f| f.len())
            .unwrap_or(args.count.unwrap_or(d));
        let outcome = family.and_then(|f| pipeline::run_pipeline(&f, &config));
        let runtime_ms = args.timing.then(|| started.elapsed().as_secs_f64() * 1e3);
        let row = match outcome {
            Ok(run) => {
                let cert = &run.certificate;
                let passed = cert.passed();
                any_failed |= !passed;
                SweepRow {
                    d,
                    n,
                    mode: config.mode,
                    t_norm: Some(cert.diagnostics.t_norm),
                    min_frame_eig: Some(cert.diagnostics.min_frame_eig),
                    max_lambda: cert.lambda.values().copied().reduce(f64::max),
                    status: if passed { "ok" } else { "failed" }.into(),
                    runtime_ms,
                }
            }
            Err(e) => {
                let overflow = matches!(e.root(), Error::Overflow { .. });
                any_error |= !overflow;
                SweepRow {
                    d,
                    n,
                    mode: config.mode,
                    t_norm: None,
                    min_frame_eig: None,
                    max_lambda: None,
                    status: if overflow { "overflow" } else { "error" }.into(),
                    runtime_ms,
                }
            }
        };
        rows.push(row);
    }
    let text = match args.format {
        OutputFormat::Csv => report::sweep_csv(&rows, args.timing),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
            s.push('\n');
            s
        }
    };
    write_output(args.out.as_deref(), &text, stdout)?;
    Ok(if any_failed {
        EXIT_CHECK_FAILED
    } else if any_error {
        EXIT_INPUT
    } else {
        EXIT_OK
    })
}
