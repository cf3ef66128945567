//! CSV and JSON serialization of sweep results, and ingestion of observed
//! spectra for fitting.
//!
//! Floats are written in the shortest decimal form that parses back to the
//! same bits, so identical runs give identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ConfigDocument, OutputFormat, RunConfig, Span};
use crate::error::{Error, Result};
use crate::fit::ObservedSpectrum;
use crate::quantum::variance_to_db;
use crate::sweep::{ScanMode, SweepRecord, SweepResult};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 13] = [
    "detuning_hz",
    "detuning_fsr",
    "phi1_rad",
    "phi2_rad",
    "rho_plus",
    "theta_plus_rad",
    "rho_minus",
    "theta_minus_rad",
    "intensity",
    "var_x",
    "var_y",
    "var_x_db",
    "var_y_db",
];

/// Shortest round-trip decimal.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// One output row; field names match the CSV header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub detuning_hz: f64,
    pub detuning_fsr: f64,
    pub phi1_rad: f64,
    pub phi2_rad: f64,
    pub rho_plus: f64,
    pub theta_plus_rad: f64,
    pub rho_minus: f64,
    pub theta_minus_rad: f64,
    pub intensity: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub var_x_db: f64,
    pub var_y_db: f64,
}

impl OutputRecord {
    pub fn new(r: &SweepRecord, fsr: f64) -> Self {
        OutputRecord {
            detuning_hz: r.detuning,
            detuning_fsr: r.detuning / fsr,
            phi1_rad: r.phi1,
            phi2_rad: r.phi2,
            rho_plus: r.rho_plus,
            theta_plus_rad: r.theta_plus,
            rho_minus: r.rho_minus,
            theta_minus_rad: r.theta_minus,
            intensity: r.intensity,
            var_x: r.var_x,
            var_y: r.var_y,
            var_x_db: variance_to_db(r.var_x),
            var_y_db: variance_to_db(r.var_y),
        }
    }

    pub fn to_sweep_record(&self) -> SweepRecord {
        SweepRecord {
            detuning: self.detuning_hz,
            phi1: self.phi1_rad,
            phi2: self.phi2_rad,
            rho_plus: self.rho_plus,
            theta_plus: self.theta_plus_rad,
            rho_minus: self.rho_minus,
            theta_minus: self.theta_minus_rad,
            intensity: self.intensity,
            var_x: self.var_x,
            var_y: self.var_y,
        }
    }

    fn fields(&self) -> [f64; 13] {
        [
            self.detuning_hz,
            self.detuning_fsr,
            self.phi1_rad,
            self.phi2_rad,
            self.rho_plus,
            self.theta_plus_rad,
            self.rho_minus,
            self.theta_minus_rad,
            self.intensity,
            self.var_x,
            self.var_y,
            self.var_x_db,
            self.var_y_db,
        ]
    }
}

/// Run description echoed into JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub generator: String,
    pub preset: Option<String>,
    pub assumptions: Option<String>,
    pub scan_mode: ScanMode,
    /// Hz for frequency scans, meters of M1 travel for mirror scans.
    pub span: f64,
    pub span_fsr: Option<f64>,
    pub points: usize,
    pub omega_hz: f64,
    pub fsr_hz: f64,
}

impl RunMetadata {
    pub fn new(run: &RunConfig, preset: Option<&str>) -> Self {
        let spec = run.scan_spec();
        RunMetadata {
            generator: concat!("crit ", env!("CARGO_PKG_VERSION")).to_string(),
            preset: preset.map(str::to_string),
            assumptions: preset
                .and_then(crate::config::preset_info)
                .map(|p| p.assumptions.to_string()),
            scan_mode: spec.mode,
            span: spec.span,
            span_fsr: match run.scan.span {
                Span::Fsr(f) => Some(f),
                Span::Absolute(_) => None,
            },
            points: spec.points,
            omega_hz: run.omega(),
            fsr_hz: run.cavity_config().fsr2(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonOutput {
    pub schema_version: u32,
    pub metadata: Option<RunMetadata>,
    pub config: Option<ConfigDocument>,
    pub records: Vec<OutputRecord>,
}

pub fn output_records(result: &SweepResult) -> Vec<OutputRecord> {
    let fsr = result.fsr();
    result
        .records
        .iter()
        .map(|r| OutputRecord::new(r, fsr))
        .collect()
}

pub fn render_csv(result: &SweepResult) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for rec in output_records(result) {
        let row: Vec<String> = rec.fields().iter().map(|&v| format_float(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn render_json(result: &SweepResult, metadata: Option<&RunMetadata>, run: Option<&RunConfig>) -> String {
    let doc = JsonOutput {
        schema_version: SCHEMA_VERSION,
        metadata: metadata.cloned(),
        config: run.map(RunConfig::to_document),
        records: output_records(result),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("output serializes");
    text.push('\n');
    text
}

pub fn render(
    result: &SweepResult,
    format: OutputFormat,
    metadata: Option<&RunMetadata>,
    run: Option<&RunConfig>,
) -> String {
    match format {
        OutputFormat::Csv => render_csv(result),
        OutputFormat::Json => render_json(result, metadata, run),
    }
}

pub fn write_result(
    result: &SweepResult,
    format: OutputFormat,
    path: &Path,
    metadata: Option<&RunMetadata>,
    run: Option<&RunConfig>,
) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(render(result, format, metadata, run).as_bytes())?;
    Ok(())
}

pub fn read_json_result(text: &str) -> Result<JsonOutput> {
    let doc: JsonOutput =
        serde_json::from_str(text).map_err(|e| Error::Data(format!("result JSON: {e}")))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::Data(format!(
            "unsupported schema_version {}",
            doc.schema_version
        )));
    }
    Ok(doc)
}

/// Reads a spectrum in the output CSV schema. Only `detuning_hz` is
/// required; `var_x`, `var_y` and `intensity` are picked up when present.
pub fn parse_observed_csv(text: &str) -> Result<ObservedSpectrum> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("CSV header: {e}")))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let detuning_col =
        column("detuning_hz").ok_or_else(|| Error::Data("CSV lacks a detuning_hz column".into()))?;
    let optional = [column("var_x"), column("var_y"), column("intensity")];

    let mut detuning = Vec::new();
    let mut series: [Vec<f64>; 3] = Default::default();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("CSV row {}: {e}", row + 2)))?;
        let cell = |idx: usize| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            raw.parse::<f64>().map_err(|_| {
                Error::Data(format!("CSV row {}: `{raw}` is not a number", row + 2))
            })
        };
        detuning.push(cell(detuning_col)?);
        for (col, values) in optional.iter().zip(series.iter_mut()) {
            if let Some(idx) = col {
                values.push(cell(*idx)?);
            }
        }
    }
    let [var_x, var_y, intensity] = series;
    let pick = |col: Option<usize>, v: Vec<f64>| col.map(|_| v);
    let observed = ObservedSpectrum {
        detuning,
        var_x: pick(optional[0], var_x),
        var_y: pick(optional[1], var_y),
        intensity: pick(optional[2], intensity),
    };
    observed.validate()?;
    Ok(observed)
}

pub fn read_observed_csv(path: &Path) -> Result<ObservedSpectrum> {
    parse_observed_csv(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;
    use crate::sweep::scan;

    fn small_run() -> (RunConfig, SweepResult) {
        let mut run = preset("figS2").unwrap();
        run.scan.points = 5;
        let result = scan(
            &run.cavity_config(),
            &run.input_state().unwrap(),
            run.omega(),
            &run.detection_model().unwrap(),
            &run.scan_spec(),
        )
        .unwrap();
        (run, result)
    }

    #[test]
    fn csv_shape() {
        let (_, result) = small_run();
        let text = render_csv(&result);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 13));
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 5.081228101694916e9, -0.0, 123456789.125] {
            let back: f64 = format_float(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn csv_parses_back_for_fitting() {
        let (_, result) = small_run();
        let observed = parse_observed_csv(&render_csv(&result)).unwrap();
        assert_eq!(observed.detuning, result.detunings());
        let vx: Vec<f64> = result.records.iter().map(|r| r.var_x).collect();
        assert_eq!(observed.var_x.unwrap(), vx);
    }

    #[test]
    fn json_round_trip_exact() {
        let (run, result) = small_run();
        let meta = RunMetadata::new(&run, Some("figS2"));
        let doc = read_json_result(&render_json(&result, Some(&meta), Some(&run))).unwrap();
        assert_eq!(doc.metadata.as_ref(), Some(&meta));
        let back: Vec<SweepRecord> = doc.records.iter().map(OutputRecord::to_sweep_record).collect();
        assert_eq!(back, result.records);
        let echoed = RunConfig::from_document(doc.config.as_ref().unwrap()).unwrap();
        assert_eq!(echoed, run);
    }

    #[test]
    fn bad_csv_cell_is_data_error() {
        let err = parse_observed_csv("detuning_hz,var_x\n0.0,abc\n").unwrap_err();
        assert!(matches!(err, Error::Data(_)));
        assert!(parse_observed_csv("var_x\n1.0\n").is_err());
    }
}
