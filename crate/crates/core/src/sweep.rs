//! Detuning grids, classical reflection sweeps and quadrature-noise spectra.
//!
//! Two scan schemes are supported. `FrequencyScan` tunes the laser, which
//! advances both round-trip phases together. `MirrorScan` holds the laser
//! fixed and moves M1 by `d1` and M0 by `gain_ratio * d1`; with a ratio of 2
//! and equal cavity lengths this is the same as tuning the laser.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{round_trip_phase, to_polar, CoupledCavityConfig, PhasePair, SPEED_OF_LIGHT};
use crate::quantum::{detected_variances, DetectionModel, InputGaussianState, SidebandResponsePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    #[default]
    Frequency,
    Mirror,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub mode: ScanMode,
    /// Full width of the grid: Hz for frequency scans, meters of M1 travel for mirror scans.
    pub span: f64,
    pub points: usize,
    /// M0-to-M1 displacement ratio (mirror scans).
    pub gain_ratio: f64,
    /// Laser wavelength in meters (mirror scans).
    pub wavelength: f64,
}

impl ScanSpec {
    pub fn frequency(span: f64, points: usize) -> Self {
        ScanSpec {
            mode: ScanMode::Frequency,
            span,
            points,
            gain_ratio: 2.0,
            wavelength: 1064e-9,
        }
    }

    pub fn mirror(span: f64, points: usize, gain_ratio: f64, wavelength: f64) -> Self {
        ScanSpec {
            mode: ScanMode::Mirror,
            span,
            points,
            gain_ratio,
            wavelength,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 3 {
            return Err(Error::Input(format!("scan needs >= 3 points, got {}", self.points)));
        }
        if !(self.span >= 0.0 && self.span.is_finite()) {
            return Err(Error::Input(format!("scan span {} must be >= 0", self.span)));
        }
        if self.mode == ScanMode::Mirror {
            if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
                return Err(Error::Input("wavelength must be positive".into()));
            }
            if !self.gain_ratio.is_finite() {
                return Err(Error::Input("gain ratio must be finite".into()));
            }
        }
        Ok(())
    }

    /// Uniform grid symmetric about zero. Mirrored points are exact negatives
    /// and an odd grid contains 0 exactly.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        let denom = 2.0 * (n - 1) as f64;
        (0..n)
            .map(|k| self.span * (2 * k as i64 - (n as i64 - 1)) as f64 / denom)
            .collect()
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// Carrier detuning from co-resonance, Hz (equivalent laser detuning for mirror scans).
    pub detuning: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub rho_plus: f64,
    pub theta_plus: f64,
    pub rho_minus: f64,
    pub theta_minus: f64,
    /// |R|² at the carrier.
    pub intensity: f64,
    pub var_x: f64,
    pub var_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub config: CoupledCavityConfig,
    pub input: InputGaussianState,
    pub detection: DetectionModel,
    /// Sideband frequency Ω, Hz.
    pub omega: f64,
}

impl SweepResult {
    /// Detunings are reported in units of the input cavity's FSR.
    pub fn fsr(&self) -> f64 {
        self.config.fsr2()
    }

    pub fn detunings(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.detuning).collect()
    }

    pub fn series(&self, quantity: Quantity) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .map(|r| (r.detuning, quantity.of(r)))
            .collect()
    }
}

/// Selects one recorded column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Intensity,
    VarX,
    VarY,
}

impl Quantity {
    pub fn of(self, record: &SweepRecord) -> f64 {
        match self {
            Quantity::Intensity => record.intensity,
            Quantity::VarX => record.var_x,
            Quantity::VarY => record.var_y,
        }
    }
}

/// Evaluates one grid point given the carrier phases.
pub fn evaluate_point(
    config: &CoupledCavityConfig,
    input: &InputGaussianState,
    omega: f64,
    detection: &DetectionModel,
    detuning: f64,
    carrier: PhasePair,
) -> Result<SweepRecord> {
    let offset = round_trip_phase(config, omega)?;
    let centre = config.response(carrier)?;
    let plus = to_polar(config.response(carrier + offset)?);
    let minus = to_polar(config.response(PhasePair {
        phi1: carrier.phi1 - offset.phi1,
        phi2: carrier.phi2 - offset.phi2,
    })?);
    let pair = SidebandResponsePair {
        plus,
        minus,
        omega,
        detuning,
    };
    let v = detected_variances(&pair, input, detection);
    Ok(SweepRecord {
        detuning,
        phi1: carrier.phi1,
        phi2: carrier.phi2,
        rho_plus: plus.rho,
        theta_plus: plus.theta,
        rho_minus: minus.rho,
        theta_minus: minus.theta,
        intensity: centre.norm_sqr(),
        var_x: v.var_x,
        var_y: v.var_y,
    })
}

fn check_setup(config: &CoupledCavityConfig, omega: f64, spec: &ScanSpec) -> Result<()> {
    config.validate()?;
    spec.validate()?;
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::Input(format!("sideband frequency {omega} must be >= 0")));
    }
    Ok(())
}

pub fn frequency_scan(
    config: &CoupledCavityConfig,
    input: &InputGaussianState,
    omega: f64,
    spec: &ScanSpec,
) -> Result<SweepResult> {
    frequency_scan_detected(config, input, omega, &DetectionModel::default(), spec)
}

pub fn frequency_scan_detected(
    config: &CoupledCavityConfig,
    input: &InputGaussianState,
    omega: f64,
    detection: &DetectionModel,
    spec: &ScanSpec,
) -> Result<SweepResult> {
    check_setup(config, omega, spec)?;
    if spec.mode != ScanMode::Frequency {
        return Err(Error::Input("frequency_scan needs a frequency-mode scan".into()));
    }
    let records = spec
        .grid()
        .par_iter()
        .map(|&detuning| {
            let carrier = round_trip_phase(config, detuning)?;
            evaluate_point(config, input, omega, detection, detuning, carrier)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        records,
        config: *config,
        input: *input,
        detection: *detection,
        omega,
    })
}

/// Round-trip phase increments for mirror displacements `d0` (M0) and `d1`
/// (M1), positive along the beam from M0 towards M2.
pub fn displacement_to_phase(d0: f64, d1: f64, wavelength: f64, indices: (f64, f64)) -> PhasePair {
    let k = 4.0 * PI / wavelength;
    PhasePair {
        phi1: k * (d1 - d0) * indices.0,
        phi2: -k * d1 * indices.1,
    }
}

/// Laser detuning that produces the same C2 phase as an M1 displacement.
pub fn displacement_to_detuning(config: &CoupledCavityConfig, d1: f64, wavelength: f64) -> f64 {
    -d1 * SPEED_OF_LIGHT / (wavelength * config.length2)
}

pub fn mirror_scan(
    config: &CoupledCavityConfig,
    input: &InputGaussianState,
    omega: f64,
    spec: &ScanSpec,
) -> Result<SweepResult> {
    mirror_scan_detected(config, input, omega, &DetectionModel::default(), spec)
}

pub fn mirror_scan_detected(
    config: &CoupledCavityConfig,
    input: &InputGaussianState,
    omega: f64,
    detection: &DetectionModel,
    spec: &ScanSpec,
) -> Result<SweepResult> {
    check_setup(config, omega, spec)?;
    if spec.mode != ScanMode::Mirror {
        return Err(Error::Input("mirror_scan needs a mirror-mode scan".into()));
    }
    let indices = (config.index1, config.index2);
    let mut records = spec
        .grid()
        .par_iter()
        .map(|&d1| {
            let carrier = displacement_to_phase(spec.gain_ratio * d1, d1, spec.wavelength, indices);
            let detuning = displacement_to_detuning(config, d1, spec.wavelength);
            evaluate_point(config, input, omega, detection, detuning, carrier)
        })
        .collect::<Result<Vec<_>>>()?;
    // the detuning label falls as d1 grows
    records.reverse();
    Ok(SweepResult {
        records,
        config: *config,
        input: *input,
        detection: *detection,
        omega,
    })
}

/// Classical reflected intensity across the grid. Variances are the vacuum
/// values (exactly 1) and both sidebands sit on the carrier.
pub fn intensity_scan(config: &CoupledCavityConfig, spec: &ScanSpec) -> Result<SweepResult> {
    let vacuum = InputGaussianState::vacuum();
    let mut result = match spec.mode {
        ScanMode::Frequency => frequency_scan(config, &vacuum, 0.0, spec)?,
        ScanMode::Mirror => mirror_scan(config, &vacuum, 0.0, spec)?,
    };
    for r in &mut result.records {
        r.var_x = 1.0;
        r.var_y = 1.0;
    }
    Ok(result)
}

/// Runs whichever scan the spec asks for.
pub fn scan(
    config: &CoupledCavityConfig,
    input: &InputGaussianState,
    omega: f64,
    detection: &DetectionModel,
    spec: &ScanSpec,
) -> Result<SweepResult> {
    match spec.mode {
        ScanMode::Frequency => frequency_scan_detected(config, input, omega, detection, spec),
        ScanMode::Mirror => mirror_scan_detected(config, input, omega, detection, spec),
    }
}
