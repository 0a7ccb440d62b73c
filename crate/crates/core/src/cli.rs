//! `memfold` command line: `generate`, `validate` and `analyze`.
//!
//! Exit status is 0 on success, 2 for usage or workload errors and 3 when
//! the input trace is malformed or inconsistent.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use crate::analysis::{analyze, AnalysisConfig, SamplingPeriods};
use crate::folding::{fold_region, FoldConfig, DEFAULT_BINS, DEFAULT_MIN_PHASE_WIDTH, DEFAULT_TOLERANCE};
use crate::object_map::{build_object_map, MapConfig, DEFAULT_THRESHOLD};
use crate::report::{write_report, ReportConfig, DEFAULT_GAP_THRESHOLD};
use crate::synthgen::{emit_ground_truth, generate, preset, WorkloadSpec};
use crate::trace::{emit_trace, parse_trace, validate_trace, Diagnostic, ParseError, Severity, Trace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

/// Name of the trace written by `generate`.
pub const TRACE_FILE: &str = "trace.mtf";

#[derive(Debug, Parser)]
#[command(name = "memfold", version, about = "Folded memory-access analysis of sampled traces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emulate a sampled run and write the trace plus its ground truth.
    Generate(GenerateArgs),
    /// Check a trace and print its diagnostics.
    Validate(ValidateArgs),
    /// Fold a region and write the report, tables and folded trace.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum DiagFormat {
    #[default]
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Workload description file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub spec: Option<PathBuf>,
    /// Bundled workload: stream, hpcg or lulesh.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the workload's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub trace: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub diag_format: DiagFormat,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub trace: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub region: u32,
    /// Smallest tracked allocation in bytes.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u64,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_PHASE_WIDTH)]
    pub min_phase_width: f64,
    #[arg(long, default_value_t = DEFAULT_GAP_THRESHOLD)]
    pub gap_threshold: u64,
    /// Lowest stack address, decimal or 0x-prefixed hex.
    #[arg(long, value_parser = parse_address)]
    pub stack_floor: Option<u64>,
    /// Loads per load sample; enables count extrapolation.
    #[arg(long, requires = "store_period")]
    pub load_period: Option<u64>,
    #[arg(long, requires = "load_period")]
    pub store_period: Option<u64>,
    #[arg(long, value_enum, default_value_t)]
    pub diag_format: DiagFormat,
}

pub fn parse_address(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|_| format!("invalid address `{s}`"))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Analyze(a) => cmd_analyze(&a),
    }
}

fn load_spec(a: &GenerateArgs) -> Result<WorkloadSpec, String> {
    if let Some(name) = &a.preset {
        return preset(name).ok_or_else(|| format!("unknown preset `{name}`"));
    }
    let path = a.spec.as_ref().expect("clap requires spec or preset");
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    WorkloadSpec::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn cmd_generate(a: &GenerateArgs) -> i32 {
    let spec = match load_spec(a) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let seed = a.seed.unwrap_or(spec.seed);
    let (trace, truth) = match generate(&spec, seed) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let written = fs::create_dir_all(&a.out)
        .and_then(|_| {
            let f = fs::File::create(a.out.join(TRACE_FILE))?;
            emit_trace(&trace, io::BufWriter::new(f))
        })
        .and_then(|_| emit_ground_truth(&truth, &a.out));
    if let Err(e) = written {
        eprintln!("error: cannot write to {}: {e}", a.out.display());
        return EXIT_USAGE;
    }
    info!(
        "wrote {} events ({} load / {} store samples) to {}",
        trace.events.len(),
        truth.totals.load_samples,
        truth.totals.store_samples,
        a.out.join(TRACE_FILE).display()
    );
    EXIT_OK
}

fn print_diagnostics<W: Write>(mut w: W, diags: &[Diagnostic], format: DiagFormat) -> io::Result<()> {
    match format {
        DiagFormat::Text => {
            for d in diags {
                writeln!(w, "{d}")?;
            }
        }
        DiagFormat::Csv => {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["severity", "line", "event", "message"])?;
            for d in diags {
                let event = d.event_index.map(|i| i.to_string()).unwrap_or_default();
                c.write_record([d.severity.to_string().as_str(), "", &event, &d.message])?;
            }
            c.flush()?;
        }
    }
    Ok(())
}

fn print_parse_error<W: Write>(mut w: W, e: &ParseError, format: DiagFormat) -> io::Result<()> {
    match format {
        DiagFormat::Text => writeln!(w, "error: {e}"),
        DiagFormat::Csv => {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["severity", "line", "event", "message"])?;
            let line = e.line().map(|l| l.to_string()).unwrap_or_default();
            c.write_record(["error", line.as_str(), "", &e.to_string()])?;
            c.flush()
        }
    }
}

fn read_trace(path: &Path) -> Result<Trace, ParseError> {
    let f = fs::File::open(path)?;
    parse_trace(BufReader::new(f))
}

pub fn cmd_validate(a: &ValidateArgs) -> i32 {
    let trace = match read_trace(&a.trace) {
        Ok(t) => t,
        Err(e) => {
            let _ = print_parse_error(io::stdout().lock(), &e, a.diag_format);
            return EXIT_DATA;
        }
    };
    let diags = validate_trace(&trace);
    let _ = print_diagnostics(io::stdout().lock(), &diags, a.diag_format);
    if diags.iter().any(|d| d.severity == Severity::Error) {
        EXIT_DATA
    } else {
        EXIT_OK
    }
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> i32 {
    let fold_cfg = FoldConfig {
        bins: a.bins,
        tolerance: a.tolerance,
        min_phase_width: a.min_phase_width,
        ..FoldConfig::default()
    };
    if let Err(e) = fold_cfg.validate() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    if a.threshold == 0 || a.gap_threshold == 0 {
        eprintln!("error: --threshold and --gap-threshold must be positive");
        return EXIT_USAGE;
    }
    if a.load_period == Some(0) || a.store_period == Some(0) {
        eprintln!("error: sampling periods must be positive");
        return EXIT_USAGE;
    }

    let trace = match read_trace(&a.trace) {
        Ok(t) => t,
        Err(e) => {
            let _ = print_parse_error(io::stderr().lock(), &e, a.diag_format);
            return EXIT_DATA;
        }
    };
    let diags = validate_trace(&trace);
    if diags.iter().any(|d| d.severity == Severity::Error) {
        let _ = print_diagnostics(io::stderr().lock(), &diags, a.diag_format);
        return EXIT_DATA;
    }
    for d in &diags {
        warn!("{d}");
    }

    let map_cfg = MapConfig {
        threshold: a.threshold,
        stack_floor: a.stack_floor,
    };
    let map = match build_object_map(&trace, map_cfg) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_DATA;
        }
    };
    let folded = match fold_region(&trace, a.region, &fold_cfg) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_DATA;
        }
    };
    if folded.access_samples().next().is_none() {
        warn!("region {} contains no memory samples", a.region);
    }
    let analysis_cfg = AnalysisConfig {
        periods: a.load_period.zip(a.store_period).map(|(load, store)| SamplingPeriods { load, store }),
        ..AnalysisConfig::default()
    };
    let analysis = match analyze(&trace, &map, &folded, &analysis_cfg) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_DATA;
        }
    };
    for w in &analysis.access.warnings {
        warn!("{w}");
    }
    let report_cfg = ReportConfig {
        gap_threshold: a.gap_threshold,
    };
    match write_report(&folded, &map, &analysis, &a.out, &report_cfg) {
        Ok(bundle) => {
            info!(
                "folded {} of {} instances, {} phases; report in {}",
                folded.instances.len(),
                folded.detected_instances,
                folded.phases.len(),
                bundle.plot_script.parent().unwrap_or(Path::new(".")).display()
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
