//! Run configuration: the human-editable document, its validated form, and
//! the named presets.
//!
//! Documents are TOML with sections `cavity`, `input`, `sideband`,
//! `detection`, `scan` and `output`; the same structure as a JSON object is
//! also accepted. Mirror reflectivities are given as power fractions and
//! converted to amplitudes here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{CoupledCavityConfig, ModelVariant, Topology};
use crate::quantum::{DetectionModel, InputGaussianState};
use crate::sweep::{ScanMode, ScanSpec};

pub const DEFAULT_LENGTH: f64 = 0.0295;
pub const DEFAULT_WAVELENGTH: f64 = 1064e-9;
pub const DEFAULT_POINTS: usize = 2001;
/// Full span, in FSR, for transparency-window studies (±0.02 FSR).
pub const WINDOW_SPAN_FSR: f64 = 0.04;
/// Full span, in FSR, for mode-splitting studies (±0.1 FSR).
pub const SPLITTING_SPAN_FSR: f64 = 0.2;
pub const DEFAULT_OMEGA_FSR_FRACTION: f64 = 0.0005;

// ---------------------------------------------------------------------------
// document form

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sideband: Option<SidebandDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputDocument>,
}

macro_rules! overlay_fields {
    ($base:expr, $top:expr, $($field:ident),+) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )+
    };
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r1_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2_sq: Option<f64>,
    /// Round-trip power loss of C1; amplitude transmission is √(1 − loss).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<ModelVariant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_offset1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_offset2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squeeze_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antisqueeze_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var_y: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidebandDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_fsr_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo_phase: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ScanMode>,
    /// Hz for frequency scans, meters of M1 travel for mirror scans.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span_fsr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

impl ConfigDocument {
    /// Fields set in `top` replace those in `self`. Setting any key of a
    /// mutually exclusive group (input style, sideband style, efficiency
    /// style, span style) replaces the whole group.
    pub fn overlay(mut self, top: &ConfigDocument) -> ConfigDocument {
        if let Some(t) = &top.cavity {
            let b = self.cavity.get_or_insert_with(Default::default);
            overlay_fields!(b, t, r0_sq, r1_sq, r2_sq, loss1, loss2, length1, length2, index1,
                index2, variant, topology, phase_offset1, phase_offset2);
        }
        if let Some(t) = &top.input {
            if *t != InputDocument::default() {
                self.input = Some(t.clone());
            }
        }
        if let Some(t) = &top.sideband {
            if *t != SidebandDocument::default() {
                self.sideband = Some(t.clone());
            }
        }
        if let Some(t) = &top.detection {
            let b = self.detection.get_or_insert_with(Default::default);
            if t.eta.is_some() || t.visibility.is_some() {
                b.eta = t.eta;
                b.visibility = t.visibility;
            }
            overlay_fields!(b, t, lo_phase);
        }
        if let Some(t) = &top.scan {
            let b = self.scan.get_or_insert_with(Default::default);
            if t.span.is_some() || t.span_fsr.is_some() {
                b.span = t.span;
                b.span_fsr = t.span_fsr;
            }
            overlay_fields!(b, t, mode, points, gain_ratio, wavelength);
        }
        if let Some(t) = &top.output {
            let b = self.output.get_or_insert_with(Default::default);
            overlay_fields!(b, t, path, format);
        }
        self
    }

    pub fn parse(text: &str) -> Result<ConfigDocument> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })
        } else {
            toml::from_str(text).map_err(|e| {
                let (line, column) = e
                    .span()
                    .map(|s| line_and_column(text, s.start))
                    .unwrap_or((0, 0));
                Error::Syntax {
                    line,
                    column,
                    message: e.message().to_string(),
                }
            })
        }
    }
}

fn line_and_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

// ---------------------------------------------------------------------------
// validated form

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySettings {
    pub r0_sq: f64,
    pub r1_sq: f64,
    pub r2_sq: f64,
    pub loss1: f64,
    pub loss2: f64,
    pub length1: f64,
    pub length2: f64,
    pub index1: f64,
    pub index2: f64,
    pub variant: ModelVariant,
    pub topology: Topology,
    pub phase_offset1: f64,
    pub phase_offset2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InputSpec {
    SqueezeFactor(f64),
    Decibel { squeeze_db: f64, antisqueeze_db: f64 },
    Variances { var_x: f64, var_y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SidebandSpec {
    Hz(f64),
    FsrFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Efficiency {
    Eta(f64),
    Visibility(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionSettings {
    pub efficiency: Efficiency,
    pub lo_phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Span {
    /// Hz (frequency scans) or meters of M1 travel (mirror scans).
    Absolute(f64),
    /// Multiples of the C2 free spectral range.
    Fsr(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub mode: ScanMode,
    pub span: Span,
    pub points: usize,
    pub gain_ratio: f64,
    pub wavelength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSettings {
    pub path: Option<String>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub cavity: CavitySettings,
    pub input: InputSpec,
    pub sideband: SidebandSpec,
    pub detection: DetectionSettings,
    pub scan: ScanSettings,
    pub output: OutputSettings,
}

fn unit_interval(field: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::field(field, format!("{v} outside [0, 1]")))
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::field(field, format!("{v} must be positive")))
    }
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::field(field, format!("{v} must be finite")))
    }
}

fn required(field: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::field(field, "missing required value"))
}

impl RunConfig {
    pub fn from_document(doc: &ConfigDocument) -> Result<RunConfig> {
        let c = doc.cavity.clone().unwrap_or_default();
        let cavity = CavitySettings {
            r0_sq: unit_interval("cavity.r0_sq", required("cavity.r0_sq", c.r0_sq)?)?,
            r1_sq: unit_interval("cavity.r1_sq", required("cavity.r1_sq", c.r1_sq)?)?,
            r2_sq: unit_interval("cavity.r2_sq", required("cavity.r2_sq", c.r2_sq)?)?,
            loss1: loss("cavity.loss1", c.loss1.unwrap_or(0.0))?,
            loss2: loss("cavity.loss2", c.loss2.unwrap_or(0.0))?,
            length1: positive("cavity.length1", c.length1.unwrap_or(DEFAULT_LENGTH))?,
            length2: positive("cavity.length2", c.length2.unwrap_or(DEFAULT_LENGTH))?,
            index1: index("cavity.index1", c.index1.unwrap_or(1.0))?,
            index2: index("cavity.index2", c.index2.unwrap_or(1.0))?,
            variant: c.variant.unwrap_or_default(),
            topology: c.topology.unwrap_or_default(),
            phase_offset1: finite("cavity.phase_offset1", c.phase_offset1.unwrap_or(0.0))?,
            phase_offset2: finite("cavity.phase_offset2", c.phase_offset2.unwrap_or(0.0))?,
        };

        let i = doc.input.clone().unwrap_or_default();
        let input = match (i.s, i.squeeze_db.or(i.antisqueeze_db), i.var_x.or(i.var_y)) {
            (None, None, None) => InputSpec::SqueezeFactor(0.0),
            (Some(s), None, None) => InputSpec::SqueezeFactor(finite("input.s", s)?),
            (None, Some(_), None) => InputSpec::Decibel {
                squeeze_db: required("input.squeeze_db", i.squeeze_db)?,
                antisqueeze_db: required("input.antisqueeze_db", i.antisqueeze_db)?,
            },
            (None, None, Some(_)) => InputSpec::Variances {
                var_x: required("input.var_x", i.var_x)?,
                var_y: required("input.var_y", i.var_y)?,
            },
            _ => {
                return Err(Error::field(
                    "input",
                    "give exactly one of s, squeeze_db/antisqueeze_db, var_x/var_y",
                ))
            }
        };

        let s = doc.sideband.clone().unwrap_or_default();
        let sideband = match (s.omega_hz, s.omega_fsr_fraction) {
            (None, None) => SidebandSpec::FsrFraction(DEFAULT_OMEGA_FSR_FRACTION),
            (Some(hz), None) => SidebandSpec::Hz(non_negative("sideband.omega_hz", hz)?),
            (None, Some(f)) => {
                SidebandSpec::FsrFraction(non_negative("sideband.omega_fsr_fraction", f)?)
            }
            _ => {
                return Err(Error::field(
                    "sideband",
                    "give exactly one of omega_hz, omega_fsr_fraction",
                ))
            }
        };

        let d = doc.detection.clone().unwrap_or_default();
        let efficiency = match (d.eta, d.visibility) {
            (None, None) => Efficiency::Eta(1.0),
            (Some(eta), None) => Efficiency::Eta(efficiency("detection.eta", eta)?),
            (None, Some(v)) => Efficiency::Visibility(efficiency("detection.visibility", v)?),
            _ => return Err(Error::field("detection", "give at most one of eta, visibility")),
        };
        let detection = DetectionSettings {
            efficiency,
            lo_phase: finite("detection.lo_phase", d.lo_phase.unwrap_or(0.0))?,
        };

        let sc = doc.scan.clone().unwrap_or_default();
        let span = match (sc.span, sc.span_fsr) {
            (None, None) => Span::Fsr(WINDOW_SPAN_FSR),
            (Some(v), None) => Span::Absolute(non_negative("scan.span", v)?),
            (None, Some(v)) => Span::Fsr(non_negative("scan.span_fsr", v)?),
            _ => return Err(Error::field("scan", "give at most one of span, span_fsr")),
        };
        let points = sc.points.unwrap_or(DEFAULT_POINTS);
        if points < 3 {
            return Err(Error::field("scan.points", format!("{points} < 3")));
        }
        let scan = ScanSettings {
            mode: sc.mode.unwrap_or_default(),
            span,
            points,
            gain_ratio: finite("scan.gain_ratio", sc.gain_ratio.unwrap_or(2.0))?,
            wavelength: positive("scan.wavelength", sc.wavelength.unwrap_or(DEFAULT_WAVELENGTH))?,
        };

        let o = doc.output.clone().unwrap_or_default();
        let output = OutputSettings {
            path: o.path,
            format: o.format.unwrap_or_default(),
        };

        let run = RunConfig {
            cavity,
            input,
            sideband,
            detection,
            scan,
            output,
        };
        run.input_state()
            .map_err(|e| Error::field("input", e.to_string()))?;
        Ok(run)
    }

    pub fn to_document(&self) -> ConfigDocument {
        let c = &self.cavity;
        let cavity = CavityDocument {
            r0_sq: Some(c.r0_sq),
            r1_sq: Some(c.r1_sq),
            r2_sq: Some(c.r2_sq),
            loss1: Some(c.loss1),
            loss2: Some(c.loss2),
            length1: Some(c.length1),
            length2: Some(c.length2),
            index1: Some(c.index1),
            index2: Some(c.index2),
            variant: Some(c.variant),
            topology: Some(c.topology),
            phase_offset1: Some(c.phase_offset1),
            phase_offset2: Some(c.phase_offset2),
        };
        let input = match self.input {
            InputSpec::SqueezeFactor(s) => InputDocument { s: Some(s), ..Default::default() },
            InputSpec::Decibel {
                squeeze_db,
                antisqueeze_db,
            } => InputDocument {
                squeeze_db: Some(squeeze_db),
                antisqueeze_db: Some(antisqueeze_db),
                ..Default::default()
            },
            InputSpec::Variances { var_x, var_y } => InputDocument {
                var_x: Some(var_x),
                var_y: Some(var_y),
                ..Default::default()
            },
        };
        let sideband = match self.sideband {
            SidebandSpec::Hz(hz) => SidebandDocument {
                omega_hz: Some(hz),
                omega_fsr_fraction: None,
            },
            SidebandSpec::FsrFraction(f) => SidebandDocument {
                omega_hz: None,
                omega_fsr_fraction: Some(f),
            },
        };
        let detection = match self.detection.efficiency {
            Efficiency::Eta(eta) => DetectionDocument {
                eta: Some(eta),
                visibility: None,
                lo_phase: Some(self.detection.lo_phase),
            },
            Efficiency::Visibility(v) => DetectionDocument {
                eta: None,
                visibility: Some(v),
                lo_phase: Some(self.detection.lo_phase),
            },
        };
        let (span, span_fsr) = match self.scan.span {
            Span::Absolute(v) => (Some(v), None),
            Span::Fsr(v) => (None, Some(v)),
        };
        ConfigDocument {
            cavity: Some(cavity),
            input: Some(input),
            sideband: Some(sideband),
            detection: Some(detection),
            scan: Some(ScanDocument {
                mode: Some(self.scan.mode),
                span,
                span_fsr,
                points: Some(self.scan.points),
                gain_ratio: Some(self.scan.gain_ratio),
                wavelength: Some(self.scan.wavelength),
            }),
            output: Some(OutputDocument {
                path: self.output.path.clone(),
                format: Some(self.output.format),
            }),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_document()).expect("config document serializes")
    }

    pub fn cavity_config(&self) -> CoupledCavityConfig {
        let c = &self.cavity;
        CoupledCavityConfig {
            r0: c.r0_sq.sqrt(),
            r1: c.r1_sq.sqrt(),
            r2: c.r2_sq.sqrt(),
            t1: (1.0 - c.loss1).sqrt(),
            t2: (1.0 - c.loss2).sqrt(),
            length1: c.length1,
            length2: c.length2,
            index1: c.index1,
            index2: c.index2,
            variant: c.variant,
            topology: c.topology,
            phase_offset1: c.phase_offset1,
            phase_offset2: c.phase_offset2,
        }
    }

    pub fn input_state(&self) -> Result<InputGaussianState> {
        match self.input {
            InputSpec::SqueezeFactor(s) => InputGaussianState::from_squeeze_factor(s),
            InputSpec::Decibel {
                squeeze_db,
                antisqueeze_db,
            } => InputGaussianState::from_db(squeeze_db, antisqueeze_db),
            InputSpec::Variances { var_x, var_y } => InputGaussianState::new(var_x, var_y),
        }
    }

    /// Sideband frequency Ω in Hz.
    pub fn omega(&self) -> f64 {
        match self.sideband {
            SidebandSpec::Hz(hz) => hz,
            SidebandSpec::FsrFraction(f) => f * self.cavity_config().fsr2(),
        }
    }

    pub fn detection_model(&self) -> Result<DetectionModel> {
        match self.detection.efficiency {
            Efficiency::Eta(eta) => DetectionModel::new(eta, self.detection.lo_phase),
            Efficiency::Visibility(v) => DetectionModel::from_visibility(v, self.detection.lo_phase),
        }
    }

    pub fn scan_spec(&self) -> ScanSpec {
        let s = &self.scan;
        let span = match (s.span, s.mode) {
            (Span::Absolute(v), _) => v,
            (Span::Fsr(f), ScanMode::Frequency) => f * self.cavity_config().fsr2(),
            // one FSR of laser detuning ↔ λ/(2 n2) of M1 travel
            (Span::Fsr(f), ScanMode::Mirror) => f * s.wavelength / (2.0 * self.cavity.index2),
        };
        ScanSpec {
            mode: s.mode,
            span,
            points: s.points,
            gain_ratio: s.gain_ratio,
            wavelength: s.wavelength,
        }
    }
}

fn loss(field: &str, v: f64) -> Result<f64> {
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::field(field, format!("{v} outside [0, 1)")))
    }
}

fn index(field: &str, v: f64) -> Result<f64> {
    if v >= 1.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::field(field, format!("{v} must be >= 1")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::field(field, format!("{v} must be >= 0")))
    }
}

fn efficiency(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(Error::field(field, format!("{v} outside (0, 1]")))
    }
}

pub fn load_config(text: &str) -> Result<RunConfig> {
    RunConfig::from_document(&ConfigDocument::parse(text)?)
}

// ---------------------------------------------------------------------------
// presets

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// Choices not fixed by the source parameters (spans, assumed mirrors).
    pub assumptions: &'static str,
}

const FIG_S1_R1_SQ: [(&str, f64); 6] = [
    ("a", 0.999995),
    ("b", 0.99995),
    ("c", 0.9997),
    ("d", 0.999),
    ("e", 0.99),
    ("f", 0.85),
];

pub const PRESETS: &[Preset] = &[
    Preset { name: "figS1_a", description: "r1^2 = 0.999995, r2^2 = 0.958, r0^2 = 0.99, lossless", assumptions: "span ±0.02 FSR" },
    Preset { name: "figS1_b", description: "r1^2 = 0.99995, r2^2 = 0.958, r0^2 = 0.99, lossless", assumptions: "span ±0.02 FSR" },
    Preset { name: "figS1_c", description: "r1^2 = 0.9997, r2^2 = 0.958, r0^2 = 0.99, lossless", assumptions: "span ±0.02 FSR" },
    Preset { name: "figS1_d", description: "r1^2 = 0.999, r2^2 = 0.958, r0^2 = 0.99, lossless", assumptions: "span ±0.02 FSR" },
    Preset { name: "figS1_e", description: "r1^2 = 0.99, r2^2 = 0.958, r0^2 = 0.99, lossless", assumptions: "span ±0.02 FSR" },
    Preset { name: "figS1_f", description: "r1^2 = 0.85, r2^2 = 0.958, r0^2 = 0.99, lossless", assumptions: "span ±0.1 FSR" },
    Preset { name: "figS2", description: "figS1_d cavity, Omega = 0.0005 FSR, s = 0.5", assumptions: "span ±0.02 FSR" },
    Preset { name: "figS2_a", description: "figS1_a cavity, Omega = 0.0005 FSR, s = 0.5", assumptions: "span ±0.02 FSR" },
    Preset { name: "figS2_b", description: "figS1_b cavity, Omega = 0.0005 FSR, s = 0.5", assumptions: "span ±0.02 FSR" },
    Preset { name: "figS2_c", description: "figS1_c cavity, Omega = 0.0005 FSR, s = 0.5", assumptions: "span ±0.02 FSR" },
    Preset { name: "figS2_d", description: "figS1_d cavity, Omega = 0.0005 FSR, s = 0.5", assumptions: "span ±0.02 FSR" },
    Preset { name: "figS2_e", description: "figS1_e cavity, Omega = 0.0005 FSR, s = 0.5", assumptions: "span ±0.02 FSR" },
    Preset { name: "figS2_f", description: "figS1_f cavity, Omega = 0.0005 FSR, s = 0.5", assumptions: "span ±0.1 FSR" },
    Preset { name: "case1_single", description: "C2 alone: M2 96.8%, M1 99.8%; 1.6/4.0 dB input at 2.5 MHz", assumptions: "span ±0.02 FSR" },
    Preset { name: "case1_coupled", description: "M2 96.8%, M1 99.8%, M0 99.8%; 1.6/4.0 dB input at 2.5 MHz", assumptions: "M0 power reflectivity 0.998 assumed; span ±0.02 FSR" },
    Preset { name: "case2_single", description: "C2 alone: M2 96.8%, M1 96.7%; 1.6/4.0 dB input at 2.5 MHz", assumptions: "span ±0.02 FSR" },
    Preset { name: "case2_coupled", description: "M2 96.8%, M1 96.7%, M0 99.8%; 1.6/4.0 dB input at 2.5 MHz", assumptions: "M0 power reflectivity 0.998 assumed; span ±0.1 FSR" },
];

fn base_config(r0_sq: f64, r1_sq: f64, r2_sq: f64) -> RunConfig {
    RunConfig {
        cavity: CavitySettings {
            r0_sq,
            r1_sq,
            r2_sq,
            loss1: 0.0,
            loss2: 0.0,
            length1: DEFAULT_LENGTH,
            length2: DEFAULT_LENGTH,
            index1: 1.0,
            index2: 1.0,
            variant: ModelVariant::SymmetricNumerator,
            topology: Topology::Coupled,
            phase_offset1: 0.0,
            phase_offset2: 0.0,
        },
        input: InputSpec::SqueezeFactor(0.0),
        sideband: SidebandSpec::FsrFraction(DEFAULT_OMEGA_FSR_FRACTION),
        detection: DetectionSettings {
            efficiency: Efficiency::Eta(1.0),
            lo_phase: 0.0,
        },
        scan: ScanSettings {
            mode: ScanMode::Frequency,
            span: Span::Fsr(WINDOW_SPAN_FSR),
            points: DEFAULT_POINTS,
            gain_ratio: 2.0,
            wavelength: DEFAULT_WAVELENGTH,
        },
        output: OutputSettings {
            path: None,
            format: OutputFormat::Csv,
        },
    }
}

fn fig_s1(letter: &str) -> Option<RunConfig> {
    let (_, r1_sq) = FIG_S1_R1_SQ.iter().find(|(l, _)| *l == letter)?;
    let mut cfg = base_config(0.99, *r1_sq, 0.958);
    if letter == "f" {
        cfg.scan.span = Span::Fsr(SPLITTING_SPAN_FSR);
    }
    Some(cfg)
}

fn experiment(r1_sq: f64, topology: Topology, span_fsr: f64) -> RunConfig {
    let mut cfg = base_config(0.998, r1_sq, 0.968);
    cfg.cavity.topology = topology;
    cfg.input = InputSpec::Decibel {
        squeeze_db: 1.6,
        antisqueeze_db: 4.0,
    };
    cfg.sideband = SidebandSpec::Hz(2.5e6);
    cfg.scan.span = Span::Fsr(span_fsr);
    cfg
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let unknown = || Error::UnknownPreset(name.to_string());
    if let Some(letter) = name.strip_prefix("figS1_") {
        return fig_s1(letter).ok_or_else(unknown);
    }
    if let Some(rest) = name.strip_prefix("figS2") {
        let letter = match rest {
            "" => "d",
            _ => rest.strip_prefix('_').ok_or_else(unknown)?,
        };
        let mut cfg = fig_s1(letter).ok_or_else(unknown)?;
        cfg.input = InputSpec::SqueezeFactor(0.5);
        return Ok(cfg);
    }
    match name {
        "case1_single" => Ok(experiment(0.998, Topology::SingleCavity, WINDOW_SPAN_FSR)),
        "case1_coupled" => Ok(experiment(0.998, Topology::Coupled, WINDOW_SPAN_FSR)),
        "case2_single" => Ok(experiment(0.967, Topology::SingleCavity, WINDOW_SPAN_FSR)),
        "case2_coupled" => Ok(experiment(0.967, Topology::Coupled, SPLITTING_SPAN_FSR)),
        _ => Err(unknown()),
    }
}

pub fn preset_info(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const MINIMAL: &str = "[cavity]\nr0_sq = 0.99\nr1_sq = 0.999\nr2_sq = 0.958\n";

    #[test]
    fn minimal_document_defaults() {
        let cfg = load_config(MINIMAL).unwrap();
        assert_eq!(cfg.cavity.variant, ModelVariant::SymmetricNumerator);
        assert_eq!(cfg.detection_model().unwrap(), DetectionModel::default());
        assert_eq!(cfg.input_state().unwrap(), InputGaussianState::vacuum());
        assert_eq!(cfg.scan.points, 2001);
    }

    #[test]
    fn out_of_range_reflectivity_names_field() {
        let err = load_config("[cavity]\nr0_sq = 0.99\nr1_sq = 1.2\nr2_sq = 0.958\n").unwrap_err();
        match err {
            Error::Field { field, .. } => assert_eq!(field, "cavity.r1_sq"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_line() {
        let err = load_config("[cavity]\nr0_sq = 0.99\nr1_sq = = 3\n").unwrap_err();
        match err {
            Error::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let err = load_config("{\n\"cavity\": {\n\"r0_sq\": 0.9,,\n}}").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = load_config(&format!("{MINIMAL}r3_sq = 0.5\n")).unwrap_err();
        assert!(err.to_string().contains("r3_sq"), "{err}");
        assert!(load_config(&format!("{MINIMAL}[extras]\nx = 1\n")).is_err());
    }

    #[test]
    fn case_two_amplitudes() {
        let cfg = load_config("[cavity]\nr0_sq = 0.998\nr1_sq = 0.967\nr2_sq = 0.968\n").unwrap();
        let c = cfg.cavity_config();
        assert_abs_diff_eq!(c.r1, 0.983_361_581_515_161_7, epsilon = 1e-12);
        assert_abs_diff_eq!(c.r2, 0.983_869_910_099_907_4, epsilon = 1e-12);
    }

    #[test]
    fn conflicting_styles() {
        let doc = format!("{MINIMAL}[input]\ns = 0.5\nsqueeze_db = 1.0\nantisqueeze_db = 2.0\n");
        assert!(matches!(load_config(&doc), Err(Error::Field { .. })));
        let doc = format!("{MINIMAL}[sideband]\nomega_hz = 1e6\nomega_fsr_fraction = 0.001\n");
        assert!(matches!(load_config(&doc), Err(Error::Field { .. })));
        let doc = format!("{MINIMAL}[input]\nsqueeze_db = 4.0\nantisqueeze_db = 1.0\n");
        assert!(matches!(load_config(&doc), Err(Error::Field { .. })));
    }

    #[test]
    fn json_equivalent() {
        let json = r#"{"cavity": {"r0_sq": 0.99, "r1_sq": 0.999, "r2_sq": 0.958}, "input": {"s": 0.5}}"#;
        let cfg = load_config(json).unwrap();
        assert_eq!(cfg.input, InputSpec::SqueezeFactor(0.5));
    }

    #[test]
    fn presets_match_published_values() {
        assert_eq!(preset("figS2").unwrap().input, InputSpec::SqueezeFactor(0.5));
        assert_eq!(preset("case1_coupled").unwrap().cavity.r1_sq, 0.998);
        assert_eq!(preset("figS1_f").unwrap().cavity.r1_sq, 0.85);
        let expected = [0.999995, 0.99995, 0.9997, 0.999, 0.99, 0.85];
        for (letter, r1_sq) in ["a", "b", "c", "d", "e", "f"].iter().zip(expected) {
            let cfg = preset(&format!("figS1_{letter}")).unwrap();
            assert_eq!(cfg.cavity.r1_sq, r1_sq);
            assert_eq!(cfg.cavity.r2_sq, 0.958);
            assert_eq!(cfg.cavity.r0_sq, 0.99);
        }
        assert!(matches!(preset("figS3"), Err(Error::UnknownPreset(_))));
        assert!(preset("figS1_g").is_err());
        assert!(preset("figS2x").is_err());
    }

    #[test]
    fn every_listed_preset_validates_and_round_trips() {
        for p in PRESETS {
            let cfg = preset(p.name).unwrap();
            cfg.cavity_config().validate().unwrap();
            cfg.scan_spec().validate().unwrap();
            let again = load_config(&cfg.to_toml()).unwrap();
            assert_eq!(again, cfg, "{}", p.name);
        }
    }

    #[test]
    fn overlay_replaces_groups() {
        let base = preset("figS2").unwrap().to_document();
        let top = ConfigDocument::parse("[input]\nsqueeze_db = 1.6\nantisqueeze_db = 4.0\n[scan]\npoints = 11\n").unwrap();
        let merged = RunConfig::from_document(&base.overlay(&top)).unwrap();
        assert_eq!(
            merged.input,
            InputSpec::Decibel {
                squeeze_db: 1.6,
                antisqueeze_db: 4.0
            }
        );
        assert_eq!(merged.scan.points, 11);
        assert_eq!(merged.cavity.r1_sq, 0.999);
    }

    #[test]
    fn mirror_span_from_fsr() {
        let mut cfg = preset("figS1_d").unwrap();
        cfg.scan.mode = ScanMode::Mirror;
        let spec = cfg.scan_spec();
        assert_abs_diff_eq!(spec.span, 0.04 * 1064e-9 / 2.0, epsilon = 1e-20);
    }
}
