//! Quadrature noise of the reflected field.
//!
//! The cavity acts independently on the upper (ω0+Ω) and lower (ω0−Ω)
//! sidebands: each is scaled by ρ e^{iθ} and topped up with vacuum through
//! √(1−ρ²). The measured quadratures mix the two sidebands, so the output
//! variances depend on both responses. Variances are in shot-noise units
//! (vacuum = 1); input X/Y are taken uncorrelated.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{to_polar, CoupledCavityConfig, PolarResponse};

const UNCERTAINTY_SLACK: f64 = 1e-9;

/// Quadrature variances of the injected field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputGaussianState {
    pub var_x: f64,
    pub var_y: f64,
}

impl InputGaussianState {
    pub fn new(var_x: f64, var_y: f64) -> Result<Self> {
        if !(var_x > 0.0 && var_y > 0.0 && var_x.is_finite() && var_y.is_finite()) {
            return Err(Error::Input(format!(
                "input variances must be positive and finite, got ({var_x}, {var_y})"
            )));
        }
        if var_x * var_y < 1.0 - UNCERTAINTY_SLACK {
            return Err(Error::Input(format!(
                "input variances ({var_x}, {var_y}) violate the uncertainty bound"
            )));
        }
        Ok(InputGaussianState { var_x, var_y })
    }

    pub fn vacuum() -> Self {
        InputGaussianState { var_x: 1.0, var_y: 1.0 }
    }

    /// Pure squeezed vacuum, amplitude quadrature squeezed: (e^{−2s}, e^{2s}).
    pub fn from_squeeze_factor(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::Input(format!("squeeze factor {s} is not finite")));
        }
        Ok(InputGaussianState {
            var_x: (-2.0 * s).exp(),
            var_y: (2.0 * s).exp(),
        })
    }

    /// Possibly impure state from measured squeezing and antisqueezing levels.
    pub fn from_db(squeeze_db: f64, antisqueeze_db: f64) -> Result<Self> {
        if !(squeeze_db >= 0.0 && antisqueeze_db >= 0.0) {
            return Err(Error::Input(format!(
                "squeeze/antisqueeze levels must be >= 0 dB, got ({squeeze_db}, {antisqueeze_db})"
            )));
        }
        Self::new(db_to_variance(-squeeze_db), db_to_variance(antisqueeze_db))
    }

    pub fn is_vacuum(&self) -> bool {
        self.var_x == 1.0 && self.var_y == 1.0
    }
}

/// Cavity response at the two sidebands around one carrier detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandResponsePair {
    pub plus: PolarResponse,
    pub minus: PolarResponse,
    /// Sideband (analysis) frequency Ω, Hz.
    pub omega: f64,
    /// Carrier offset from co-resonance, Hz.
    pub detuning: f64,
}

impl SidebandResponsePair {
    pub fn from_responses(plus: PolarResponse, minus: PolarResponse) -> Self {
        SidebandResponsePair {
            plus,
            minus,
            omega: 0.0,
            detuning: 0.0,
        }
    }

    /// Sideband coefficients: upper ρ₊e^{iθ₊}, conjugated lower ρ₋e^{−iθ₋},
    /// and the two vacuum admixtures.
    fn coefficients(&self) -> (Complex64, Complex64, f64, f64) {
        let upper = Complex64::from_polar(self.plus.rho, self.plus.theta);
        let lower = Complex64::from_polar(self.minus.rho, -self.minus.theta);
        (upper, lower, leak(self.plus.rho), leak(self.minus.rho))
    }
}

fn leak(rho: f64) -> f64 {
    let rho = rho.min(1.0);
    (1.0 - rho * rho).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureVariances {
    pub var_x: f64,
    pub var_y: f64,
}

/// Homodyne efficiency and local-oscillator phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    pub eta: f64,
    pub lo_phase: f64,
}

impl Default for DetectionModel {
    fn default() -> Self {
        DetectionModel {
            eta: 1.0,
            lo_phase: 0.0,
        }
    }
}

impl DetectionModel {
    pub fn new(eta: f64, lo_phase: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Input(format!("efficiency {eta} outside (0, 1]")));
        }
        if !lo_phase.is_finite() {
            return Err(Error::Input("local-oscillator phase must be finite".into()));
        }
        Ok(DetectionModel { eta, lo_phase })
    }

    /// Mode-matching efficiency from fringe visibility: η = V².
    pub fn from_visibility(visibility: f64, lo_phase: f64) -> Result<Self> {
        if !(visibility > 0.0 && visibility <= 1.0) {
            return Err(Error::Input(format!("visibility {visibility} outside (0, 1]")));
        }
        Self::new(visibility * visibility, lo_phase)
    }

    pub fn is_ideal(&self) -> bool {
        self.eta == 1.0 && self.lo_phase == 0.0
    }
}

/// Sideband responses at `detuning ± omega`, co-scanned (φ1 = φ2 at equal lengths).
pub fn sideband_pair(
    config: &CoupledCavityConfig,
    detuning: f64,
    omega: f64,
) -> Result<SidebandResponsePair> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::Input(format!("sideband frequency {omega} must be >= 0")));
    }
    let plus = to_polar(config.response_at(detuning + omega)?);
    let minus = to_polar(config.response_at(detuning - omega)?);
    Ok(SidebandResponsePair {
        plus,
        minus,
        omega,
        detuning,
    })
}

/// Amplitude-quadrature variance of the reflected field.
pub fn variance_x(pair: &SidebandResponsePair, input: &InputGaussianState) -> f64 {
    let (a, b, u, v) = pair.coefficients();
    0.25 * (a + b).norm_sqr() * input.var_x
        + 0.25 * (a - b).norm_sqr() * input.var_y
        + 0.25 * (u + v).powi(2)
        + 0.25 * (u - v).powi(2)
}

/// Phase-quadrature variance of the reflected field.
pub fn variance_y(pair: &SidebandResponsePair, input: &InputGaussianState) -> f64 {
    let (a, b, u, v) = pair.coefficients();
    0.25 * (-a + b).norm_sqr() * input.var_x
        + 0.25 * (a + b).norm_sqr() * input.var_y
        + 0.25 * (-u + v).powi(2)
        + 0.25 * (u + v).powi(2)
}

/// Variance of the rotated quadrature `X cos φ + Y sin φ` selected by the
/// local-oscillator phase φ.
pub fn variance_at_angle(
    pair: &SidebandResponsePair,
    input: &InputGaussianState,
    lo_phase: f64,
) -> f64 {
    let (a, b, u, v) = pair.coefficients();
    let (sin, cos) = lo_phase.sin_cos();
    let down = Complex64::new(cos, -sin);
    let up = down.conj();
    let i = Complex64::i();
    let x_in = 0.5 * (a * down + b * up);
    let y_in = 0.5 * i * (a * down - b * up);
    let x_vac = 0.5 * (u * down + v * up);
    let y_vac = 0.5 * i * (u * down - v * up);
    x_in.norm_sqr() * input.var_x
        + y_in.norm_sqr() * input.var_y
        + x_vac.norm_sqr()
        + y_vac.norm_sqr()
}

/// Measured quadrature at `det.lo_phase` and its conjugate, after efficiency.
pub fn detected_variances(
    pair: &SidebandResponsePair,
    input: &InputGaussianState,
    det: &DetectionModel,
) -> QuadratureVariances {
    let (var_x, var_y) = if det.lo_phase == 0.0 {
        (variance_x(pair, input), variance_y(pair, input))
    } else {
        (
            variance_at_angle(pair, input, det.lo_phase),
            variance_at_angle(pair, input, det.lo_phase + std::f64::consts::FRAC_PI_2),
        )
    };
    QuadratureVariances {
        var_x: apply_detection(var_x, det),
        var_y: apply_detection(var_y, det),
    }
}

/// Finite efficiency mixes in vacuum: `η v + (1 − η)`.
pub fn apply_detection(v: f64, det: &DetectionModel) -> f64 {
    if det.eta == 1.0 {
        return v;
    }
    det.eta * v + (1.0 - det.eta)
}

pub fn variance_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

pub fn db_to_variance(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, FRAC_PI_2, FRAC_PI_4, PI};

    fn uniform(rho: f64, theta: f64) -> SidebandResponsePair {
        let p = PolarResponse { rho, theta };
        SidebandResponsePair::from_responses(p, p)
    }

    fn squeezed() -> InputGaussianState {
        InputGaussianState::from_squeeze_factor(0.5).unwrap()
    }

    #[test]
    fn identity_channel() {
        let input = InputGaussianState::from_db(1.6, 4.0).unwrap();
        let pair = uniform(1.0, 0.0);
        assert_eq!(variance_x(&pair, &input), input.var_x);
        assert_eq!(variance_y(&pair, &input), input.var_y);
    }

    #[test]
    fn full_replacement_gives_vacuum() {
        let pair = uniform(0.0, 1.3);
        assert_eq!(variance_x(&pair, &squeezed()), 1.0);
        assert_eq!(variance_y(&pair, &squeezed()), 1.0);
    }

    #[test]
    fn quarter_wave_swaps_quadratures() {
        let pair = SidebandResponsePair::from_responses(
            PolarResponse { rho: 1.0, theta: FRAC_PI_2 },
            PolarResponse { rho: 1.0, theta: FRAC_PI_2 },
        );
        assert_abs_diff_eq!(variance_x(&pair, &squeezed()), E, epsilon = 1e-12);
        assert_abs_diff_eq!(variance_y(&pair, &squeezed()), (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn rotated_quadrature() {
        let pair = uniform(0.8, 0.4);
        let input = squeezed();
        assert_abs_diff_eq!(
            variance_at_angle(&pair, &input, 0.0),
            variance_x(&pair, &input),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            variance_at_angle(&pair, &input, FRAC_PI_2),
            variance_y(&pair, &input),
            epsilon = 1e-15
        );
        let mid = variance_at_angle(&uniform(1.0, 0.0), &input, FRAC_PI_4);
        assert_abs_diff_eq!(mid, ((-1.0f64).exp() + E) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mid, 1.543_080_634_815_243_7, epsilon = 1e-12);
    }

    #[test]
    fn detection_efficiency() {
        let ideal = DetectionModel::default();
        assert_eq!(apply_detection(0.5, &ideal), 0.5);
        let lossy = DetectionModel::from_visibility(0.94, 0.0).unwrap();
        assert_abs_diff_eq!(lossy.eta, 0.8836, epsilon = 1e-15);
        assert_abs_diff_eq!(apply_detection(1.0, &lossy), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            apply_detection((-1.0f64).exp(), &lossy),
            0.441_458_274_219_086_46,
            epsilon = 1e-12
        );
        assert!(DetectionModel::new(0.0, 0.0).is_err());
        assert!(DetectionModel::new(1.2, 0.0).is_err());
    }

    #[test]
    fn input_constructors() {
        assert_eq!(InputGaussianState::from_squeeze_factor(0.0).unwrap(), InputGaussianState::vacuum());
        let s = squeezed();
        assert_abs_diff_eq!(s.var_x, (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.var_y, std::f64::consts::E, epsilon = 1e-12);
        let weak = InputGaussianState::from_squeeze_factor(0.184).unwrap();
        assert_abs_diff_eq!(weak.var_x, 0.692_117_181_688_730_4, epsilon = 1e-12);
        assert_abs_diff_eq!(weak.var_y, 1.444_842_038_973_879, epsilon = 1e-12);

        assert_eq!(InputGaussianState::from_db(0.0, 0.0).unwrap(), InputGaussianState::vacuum());
        let measured = InputGaussianState::from_db(1.6, 4.0).unwrap();
        assert_abs_diff_eq!(measured.var_x, 0.691_830_970_918_936_5, epsilon = 1e-12);
        assert_abs_diff_eq!(measured.var_y, 2.511_886_431_509_58, epsilon = 1e-12);
        let round = InputGaussianState::from_db(3.0103, 3.0103).unwrap();
        assert_abs_diff_eq!(round.var_x, 0.5, epsilon = 1e-5);
        assert_abs_diff_eq!(round.var_y, 2.0, epsilon = 1e-5);

        assert!(InputGaussianState::from_db(4.0, 1.6).is_err());
        assert!(InputGaussianState::from_db(-1.0, 1.0).is_err());
        assert!(InputGaussianState::new(0.5, 1.5).is_err());
        assert!(InputGaussianState::new(0.0, 1.0).is_err());
    }

    #[test]
    fn decibels() {
        assert_eq!(variance_to_db(1.0), 0.0);
        assert_abs_diff_eq!(variance_to_db(E), 4.342_944_819_032_518, epsilon = 1e-12);
        assert_abs_diff_eq!(variance_to_db(0.691_83), -1.6, epsilon = 1e-4);
        assert_abs_diff_eq!(db_to_variance(variance_to_db(0.37)), 0.37, epsilon = 1e-15);
    }

    #[test]
    fn sideband_pair_symmetry() {
        let cfg = CoupledCavityConfig::from_power(0.99, 0.999, 0.958);
        let p = sideband_pair(&cfg, 1.234e7, 0.0).unwrap();
        assert_eq!(p.plus, p.minus);
        let fsr = cfg.fsr2();
        let p = sideband_pair(&cfg, 0.0, 0.0005 * fsr).unwrap();
        assert_abs_diff_eq!(p.plus.rho, p.minus.rho, epsilon = 1e-12);
        assert_abs_diff_eq!(p.plus.theta, -p.minus.theta, epsilon = 1e-12);
        assert!(sideband_pair(&cfg, 0.0, -1.0).is_err());
    }

    #[test]
    fn sideband_pair_matches_direct_arithmetic() {
        let cfg = CoupledCavityConfig::from_power(0.99, 0.999, 0.958);
        let omega = 0.0005 * cfg.fsr2();
        let detuning = 0.002 * cfg.fsr2();
        let p = sideband_pair(&cfg, detuning, omega).unwrap();
        // Direct evaluation of the nested cavity fractions at φ = 2π·0.0025 and 2π·0.0015.
        let direct = |phi: f64| {
            let e = Complex64::cis(phi);
            let (r0, r1, r2) = (0.99f64.sqrt(), 0.999f64.sqrt(), 0.958f64.sqrt());
            let inner = (r1 - r0 * e) / (1.0 - r1 * r0 * e);
            (r2 - inner * e) / (1.0 - r2 * inner * e)
        };
        let up = direct(2.0 * PI * 0.0025);
        let down = direct(2.0 * PI * 0.0015);
        assert_abs_diff_eq!(p.plus.rho, up.norm(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.plus.theta, up.arg(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.minus.rho, down.norm(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.minus.theta, down.arg(), epsilon = 1e-12);
        assert!((p.plus.theta - p.minus.theta).abs() > 1e-3);
    }

    #[test]
    fn clamps_slightly_superunit_magnitudes() {
        let pair = uniform(1.0 + 1e-13, 0.0);
        let v = variance_x(&pair, &InputGaussianState::vacuum());
        assert!(v.is_finite());
    }
}
