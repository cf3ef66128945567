//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration or validation
//! error, 3 runtime or numerical error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analysis::{classify, window_metrics};
use crate::checks::run_checks;
use crate::config::{preset, ConfigDocument, OutputFormat, RunConfig, Span, PRESETS};
use crate::error::Error;
use crate::fit::{fit_parameters, FitParameter, FitProblem, ModelSetup, ObjectiveDomain};
use crate::io::{read_observed_csv, render, RunMetadata};
use crate::sweep::{intensity_scan, scan, Quantity, SweepResult};

#[derive(Debug, Parser)]
#[command(name = "crit", version, about = "Coupled-cavity transparency and squeezed-noise spectra")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML (or JSON) run configuration; its fields override the preset's.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Named parameter set (see `crit presets`).
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// Write results here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Number of scan points.
    #[arg(long, global = true, value_name = "N")]
    points: Option<usize>,

    /// Full scan span: Hz for frequency scans, meters for mirror scans.
    #[arg(long, global = true, value_name = "VALUE")]
    span: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DomainArg {
    Linear,
    Decibel,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classical reflected intensity across the scan.
    Reflectivity,
    /// Quadrature-noise spectra across the scan.
    Spectrum,
    /// Line-shape labels and window metrics, printed as JSON.
    Classify,
    /// Fit model parameters to a measured spectrum in the output CSV schema.
    Fit {
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        /// Comma-separated free parameters, e.g. r1_sq,var_x_in.
        #[arg(long, value_delimiter = ',', required = true)]
        free: Vec<String>,
        /// Comma-separated starting values; defaults to the configured ones.
        #[arg(long, value_delimiter = ',')]
        guess: Option<Vec<f64>>,
        #[arg(long, default_value_t = crate::fit::DEFAULT_MAX_EVALS)]
        max_evals: usize,
        #[arg(long, value_enum, default_value = "decibel")]
        domain: DomainArg,
    },
    /// List the built-in presets.
    Presets,
    /// Run the invariant suite and report pass/fail counts.
    Validate {
        #[arg(long, default_value_t = 20240601)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        cases: usize,
    },
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `argv` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "usage error: {msg}");
            1
        }
        Err(Failure::Run(e)) => {
            let category = match e.exit_code() {
                2 => "config error",
                _ => "runtime error",
            };
            let _ = writeln!(stderr, "{category}: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    match &cli.command {
        Command::Presets => {
            let mut text = String::new();
            for p in PRESETS {
                text.push_str(&format!("{:<14} {}  [{}]\n", p.name, p.description, p.assumptions));
            }
            emit(&cli.global, stdout, &text)?;
            Ok(0)
        }
        Command::Validate { seed, cases } => {
            reject_scan_flags(&cli.global, "validate")?;
            let report = run_checks(*seed, *cases);
            let mut text = String::new();
            for c in &report.checks {
                text.push_str(&format!(
                    "{} {:<32} cases={:<6} worst={:e} tol={:e}\n",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.cases,
                    c.worst,
                    c.tolerance
                ));
            }
            text.push_str(&format!("{} passed, {} failed\n", report.passed(), report.failed()));
            emit(&cli.global, stdout, &text)?;
            Ok(if report.all_passed() { 0 } else { 3 })
        }
        Command::Reflectivity => {
            let (run, name) = resolve_run(&cli.global)?;
            let result = intensity_scan(&run.cavity_config(), &run.scan_spec())?;
            write_sweep(stdout, &run, name.as_deref(), &result)
        }
        Command::Spectrum => {
            let (run, name) = resolve_run(&cli.global)?;
            let result = run_spectrum(&run)?;
            write_sweep(stdout, &run, name.as_deref(), &result)
        }
        Command::Classify => {
            let (run, name) = resolve_run(&cli.global)?;
            let result = run_spectrum(&run)?;
            let mut quantities = serde_json::Map::new();
            for (key, q) in [
                ("intensity", Quantity::Intensity),
                ("var_x", Quantity::VarX),
                ("var_y", Quantity::VarY),
            ] {
                let series = result.series(q);
                let label = classify(&series)?;
                let metrics = window_metrics(&series).ok();
                quantities.insert(
                    key.to_string(),
                    json!({
                        "label": label.label.to_string(),
                        "signature": label.signature,
                        "extrema": label.extrema,
                        "window_metrics": metrics,
                    }),
                );
            }
            let doc = json!({
                "metadata": RunMetadata::new(&run, name.as_deref()),
                "quantities": quantities,
            });
            emit(&cli.global, stdout, &pretty(&doc))?;
            Ok(0)
        }
        Command::Fit {
            data,
            free,
            guess,
            max_evals,
            domain,
        } => {
            let (run, _) = resolve_run(&cli.global)?;
            let params = free
                .iter()
                .map(|s| s.trim().parse::<FitParameter>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let observed = read_observed_csv(data)?;
            let domain = match domain {
                DomainArg::Linear => ObjectiveDomain::Linear,
                DomainArg::Decibel => ObjectiveDomain::Decibel,
            };
            let problem =
                FitProblem::new(observed, ModelSetup::from_run(&run)?, &params)?.with_domain(domain);
            let guess = match guess {
                Some(g) if g.len() != params.len() => {
                    return Err(Failure::Usage(format!(
                        "--guess has {} values for {} free parameters",
                        g.len(),
                        params.len()
                    )))
                }
                Some(g) => g.clone(),
                None => problem.current_values(),
            };
            let result = fit_parameters(&problem, &guess, *max_evals)?;
            let estimates: serde_json::Map<String, serde_json::Value> = result
                .parameters
                .iter()
                .zip(&result.estimates)
                .map(|(p, v)| (p.name().to_string(), json!(v)))
                .collect();
            let doc = json!({
                "estimates": estimates,
                "residual": result.residual,
                "initial_residual": result.initial_residual,
                "evaluations": result.evaluations,
                "iterations": result.iterations,
                "converged": result.converged,
                "domain": domain,
            });
            emit(&cli.global, stdout, &pretty(&doc))?;
            Ok(0)
        }
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON serializes");
    text.push('\n');
    text
}

fn reject_scan_flags(global: &GlobalArgs, command: &str) -> CliResult<()> {
    if global.config.is_some() || global.preset.is_some() || global.points.is_some() || global.span.is_some() {
        return Err(Failure::Usage(format!(
            "{command} takes no --config, --preset, --points or --span"
        )));
    }
    Ok(())
}

fn resolve_run(global: &GlobalArgs) -> CliResult<(RunConfig, Option<String>)> {
    if global.config.is_none() && global.preset.is_none() {
        return Err(Failure::Usage("give --preset NAME and/or --config PATH".into()));
    }
    let mut doc = match &global.preset {
        Some(name) => preset(name)?.to_document(),
        None => ConfigDocument::default(),
    };
    if let Some(path) = &global.config {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Input(format!("cannot read config {}: {e}", path.display()))
        })?;
        doc = doc.overlay(&ConfigDocument::parse(&text)?);
    }
    let mut run = RunConfig::from_document(&doc)?;
    if let Some(points) = global.points {
        if points < 3 {
            return Err(Error::field("scan.points", format!("{points} < 3")).into());
        }
        run.scan.points = points;
    }
    if let Some(span) = global.span {
        if !(span >= 0.0 && span.is_finite()) {
            return Err(Error::field("scan.span", format!("{span} must be >= 0")).into());
        }
        run.scan.span = Span::Absolute(span);
    }
    if let Some(format) = global.format {
        run.output.format = match format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    if let Some(path) = &global.output {
        run.output.path = Some(path.display().to_string());
    }
    Ok((run, global.preset.clone()))
}

fn run_spectrum(run: &RunConfig) -> crate::Result<SweepResult> {
    scan(
        &run.cavity_config(),
        &run.input_state()?,
        run.omega(),
        &run.detection_model()?,
        &run.scan_spec(),
    )
}

fn write_sweep(
    stdout: &mut dyn Write,
    run: &RunConfig,
    preset_name: Option<&str>,
    result: &SweepResult,
) -> CliResult<i32> {
    let meta = RunMetadata::new(run, preset_name);
    let text = render(result, run.output.format, Some(&meta), Some(run));
    match &run.output.path {
        Some(path) => fs::write(Path::new(path), text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn emit(global: &GlobalArgs, stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    match &global.output {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}
