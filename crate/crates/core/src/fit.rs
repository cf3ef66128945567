//! Least-squares fitting of model spectra to observed ones.
//!
//! Each free parameter lives on an open interval and is searched through a
//! logistic reparameterization, so the simplex moves on an unbounded space
//! and every trial point respects the bounds.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::optics::{round_trip_phase, CoupledCavityConfig};
use crate::quantum::{DetectionModel, InputGaussianState};
use crate::sweep::{evaluate_point, SweepRecord, SweepResult};

pub const DEFAULT_MAX_EVALS: usize = 10_000;
const SIMPLEX_TOLERANCE: f64 = 1e-10;
const INITIAL_STEP: f64 = 0.5;
/// Floor applied before taking decibels of a reflected intensity.
const INTENSITY_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParameter {
    R0Sq,
    R1Sq,
    R2Sq,
    T1,
    T2,
    VarXIn,
    VarYIn,
    Eta,
    /// Hz; the model is evaluated at `observed detuning − offset`.
    DetuningOffset,
    /// Multiplies every modeled series.
    Scale,
}

impl FitParameter {
    pub const ALL: [FitParameter; 10] = [
        FitParameter::R0Sq,
        FitParameter::R1Sq,
        FitParameter::R2Sq,
        FitParameter::T1,
        FitParameter::T2,
        FitParameter::VarXIn,
        FitParameter::VarYIn,
        FitParameter::Eta,
        FitParameter::DetuningOffset,
        FitParameter::Scale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitParameter::R0Sq => "r0_sq",
            FitParameter::R1Sq => "r1_sq",
            FitParameter::R2Sq => "r2_sq",
            FitParameter::T1 => "t1",
            FitParameter::T2 => "t2",
            FitParameter::VarXIn => "var_x_in",
            FitParameter::VarYIn => "var_y_in",
            FitParameter::Eta => "eta",
            FitParameter::DetuningOffset => "detuning_offset",
            FitParameter::Scale => "scale",
        }
    }

    pub fn get(self, setup: &ModelSetup) -> f64 {
        let c = &setup.config;
        match self {
            FitParameter::R0Sq => c.r0 * c.r0,
            FitParameter::R1Sq => c.r1 * c.r1,
            FitParameter::R2Sq => c.r2 * c.r2,
            FitParameter::T1 => c.t1,
            FitParameter::T2 => c.t2,
            FitParameter::VarXIn => setup.input.var_x,
            FitParameter::VarYIn => setup.input.var_y,
            FitParameter::Eta => setup.detection.eta,
            FitParameter::DetuningOffset => setup.detuning_offset,
            FitParameter::Scale => setup.scale,
        }
    }

    /// Writes the value without validation; `ModelSetup::evaluate` checks.
    pub fn set(self, setup: &mut ModelSetup, value: f64) {
        let c = &mut setup.config;
        match self {
            FitParameter::R0Sq => c.r0 = value.sqrt(),
            FitParameter::R1Sq => c.r1 = value.sqrt(),
            FitParameter::R2Sq => c.r2 = value.sqrt(),
            FitParameter::T1 => c.t1 = value,
            FitParameter::T2 => c.t2 = value,
            FitParameter::VarXIn => setup.input.var_x = value,
            FitParameter::VarYIn => setup.input.var_y = value,
            FitParameter::Eta => setup.detection.eta = value,
            FitParameter::DetuningOffset => setup.detuning_offset = value,
            FitParameter::Scale => setup.scale = value,
        }
    }

    /// Default search interval. The detuning offset range is the observed span.
    pub fn default_bounds(self, observed: &ObservedSpectrum) -> (f64, f64) {
        match self {
            FitParameter::R0Sq | FitParameter::R1Sq | FitParameter::R2Sq => (0.0, 1.0),
            FitParameter::T1 | FitParameter::T2 | FitParameter::Eta => (0.0, 1.0),
            FitParameter::VarXIn | FitParameter::VarYIn => (1e-2, 1e2),
            FitParameter::DetuningOffset => {
                let span = observed.span().max(f64::MIN_POSITIVE);
                (-span, span)
            }
            FitParameter::Scale => (0.1, 10.0),
        }
    }
}

impl fmt::Display for FitParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FitParameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = FitParameter::ALL.iter().map(|p| p.name()).collect();
                Error::Input(format!("unknown fit parameter `{s}` (known: {})", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveDomain {
    Linear,
    #[default]
    Decibel,
}

/// Measured (or synthetic) spectrum on a sorted detuning grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedSpectrum {
    pub detuning: Vec<f64>,
    pub var_x: Option<Vec<f64>>,
    pub var_y: Option<Vec<f64>>,
    pub intensity: Option<Vec<f64>>,
}

impl ObservedSpectrum {
    /// Takes every series from a sweep.
    pub fn from_result(result: &SweepResult) -> Self {
        let col = |f: fn(&SweepRecord) -> f64| Some(result.records.iter().map(f).collect());
        ObservedSpectrum {
            detuning: result.detunings(),
            var_x: col(|r| r.var_x),
            var_y: col(|r| r.var_y),
            intensity: col(|r| r.intensity),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.detuning.len();
        if n == 0 {
            return Err(Error::Data("observed spectrum is empty".into()));
        }
        if self.detuning.iter().any(|d| !d.is_finite()) {
            return Err(Error::Data("observed detunings must be finite".into()));
        }
        if self.detuning.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Data("observed detunings must be sorted ascending".into()));
        }
        let series = [&self.var_x, &self.var_y, &self.intensity];
        if series.iter().all(|s| s.is_none()) {
            return Err(Error::Data("observed spectrum has no var_x, var_y or intensity".into()));
        }
        for s in series.into_iter().flatten() {
            if s.len() != n {
                return Err(Error::Data("observed series lengths differ from the grid".into()));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data("observed values must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        match (self.detuning.first(), self.detuning.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

/// Everything the model needs besides the detuning grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSetup {
    pub config: CoupledCavityConfig,
    pub input: InputGaussianState,
    pub omega: f64,
    pub detection: DetectionModel,
    pub detuning_offset: f64,
    pub scale: f64,
}

impl ModelSetup {
    pub fn new(
        config: CoupledCavityConfig,
        input: InputGaussianState,
        omega: f64,
        detection: DetectionModel,
    ) -> Self {
        ModelSetup {
            config,
            input,
            omega,
            detection,
            detuning_offset: 0.0,
            scale: 1.0,
        }
    }

    pub fn from_run(run: &RunConfig) -> Result<Self> {
        Ok(Self::new(
            run.cavity_config(),
            run.input_state()?,
            run.omega(),
            run.detection_model()?,
        ))
    }

    /// Model records at the given detunings (offset applied, scale not).
    pub fn evaluate(&self, detunings: &[f64]) -> Result<Vec<SweepRecord>> {
        self.config.validate()?;
        let input = InputGaussianState::new(self.input.var_x, self.input.var_y)?;
        let detection = DetectionModel::new(self.detection.eta, self.detection.lo_phase)?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Input(format!("scale {} must be positive", self.scale)));
        }
        detunings
            .par_iter()
            .map(|&d| {
                let shifted = d - self.detuning_offset;
                let carrier = round_trip_phase(&self.config, shifted)?;
                evaluate_point(&self.config, &input, self.omega, &detection, d, carrier)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeParameter {
    pub parameter: FitParameter,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitProblem {
    pub observed: ObservedSpectrum,
    pub setup: ModelSetup,
    pub free: Vec<FreeParameter>,
    pub domain: ObjectiveDomain,
}

impl FitProblem {
    /// Free parameters get their default bounds; the domain is decibels.
    pub fn new(observed: ObservedSpectrum, setup: ModelSetup, free: &[FitParameter]) -> Result<Self> {
        observed.validate()?;
        if free.is_empty() {
            return Err(Error::Fit("no free parameters".into()));
        }
        for (i, p) in free.iter().enumerate() {
            if free[..i].contains(p) {
                return Err(Error::Fit(format!("parameter {p} listed twice")));
            }
        }
        let free = free
            .iter()
            .map(|&parameter| {
                let (lower, upper) = parameter.default_bounds(&observed);
                FreeParameter {
                    parameter,
                    lower,
                    upper,
                }
            })
            .collect();
        Ok(FitProblem {
            observed,
            setup,
            free,
            domain: ObjectiveDomain::default(),
        })
    }

    pub fn with_domain(mut self, domain: ObjectiveDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_bounds(mut self, parameter: FitParameter, lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper && lower.is_finite() && upper.is_finite()) {
            return Err(Error::Fit(format!("bounds for {parameter} must satisfy lower < upper")));
        }
        let slot = self
            .free
            .iter_mut()
            .find(|f| f.parameter == parameter)
            .ok_or_else(|| Error::Fit(format!("{parameter} is not a free parameter")))?;
        slot.lower = lower;
        slot.upper = upper;
        Ok(self)
    }

    /// Current setup values of the free parameters.
    pub fn current_values(&self) -> Vec<f64> {
        self.free.iter().map(|f| f.parameter.get(&self.setup)).collect()
    }

    pub fn setup_with(&self, params: &[f64]) -> ModelSetup {
        let mut setup = self.setup;
        for (f, &v) in self.free.iter().zip(params) {
            f.parameter.set(&mut setup, v);
        }
        setup
    }

    fn transform(&self, v: f64) -> f64 {
        match self.domain {
            ObjectiveDomain::Linear => v,
            ObjectiveDomain::Decibel => 10.0 * v.max(INTENSITY_FLOOR).log10(),
        }
    }
}

type Series<'a> = (&'a Option<Vec<f64>>, fn(&SweepRecord) -> f64);

/// RMS difference between model and observation over every observed series.
pub fn residual(params: &[f64], problem: &FitProblem) -> Result<f64> {
    if params.len() != problem.free.len() {
        return Err(Error::Fit(format!(
            "expected {} parameter values, got {}",
            problem.free.len(),
            params.len()
        )));
    }
    let setup = problem.setup_with(params);
    let records = setup.evaluate(&problem.observed.detuning)?;
    let obs = &problem.observed;
    let series: [Series<'_>; 3] = [
        (&obs.var_x, |r| r.var_x),
        (&obs.var_y, |r| r.var_y),
        (&obs.intensity, |r| r.intensity),
    ];
    let mut sum = 0.0;
    let mut count = 0usize;
    for (observed, pick) in series {
        if let Some(values) = observed {
            for (rec, &o) in records.iter().zip(values) {
                let m = setup.scale * pick(rec);
                let d = problem.transform(m) - problem.transform(o);
                sum += d * d;
                count += 1;
            }
        }
    }
    Ok((sum / count as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameters: Vec<FitParameter>,
    pub estimates: Vec<f64>,
    pub residual: f64,
    pub initial_residual: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best residual after each iteration.
    pub history: Vec<f64>,
    pub setup: ModelSetup,
}

impl FitResult {
    pub fn estimate(&self, parameter: FitParameter) -> Option<f64> {
        self.parameters
            .iter()
            .position(|&p| p == parameter)
            .map(|i| self.estimates[i])
    }
}

fn to_unbounded(x: f64, lo: f64, hi: f64) -> f64 {
    let p = (x - lo) / (hi - lo);
    (p / (1.0 - p)).ln()
}

fn to_bounded(u: f64, lo: f64, hi: f64) -> f64 {
    let p = 1.0 / (1.0 + (-u).exp());
    lo + (hi - lo) * p
}

/// Nelder-Mead search from `guess` (one value per free parameter).
pub fn fit_parameters(problem: &FitProblem, guess: &[f64], max_evals: usize) -> Result<FitResult> {
    let n = problem.free.len();
    if n == 0 {
        return Err(Error::Fit("no free parameters".into()));
    }
    if guess.len() != n {
        return Err(Error::Fit(format!("expected {n} initial values, got {}", guess.len())));
    }
    for (f, &g) in problem.free.iter().zip(guess) {
        if !(g >= f.lower && g <= f.upper) {
            return Err(Error::Fit(format!(
                "initial {} = {g} outside [{}, {}]",
                f.parameter, f.lower, f.upper
            )));
        }
    }
    let start: Vec<f64> = problem
        .free
        .iter()
        .zip(guess)
        .map(|(f, &g)| to_unbounded(g, f.lower, f.upper))
        .collect();
    if start.iter().any(|u| !u.is_finite()) {
        return Err(Error::Fit(
            "degenerate initial simplex: initial guess sits on a bound".into(),
        ));
    }

    let to_params = |u: &[f64]| -> Vec<f64> {
        problem
            .free
            .iter()
            .zip(u)
            .map(|(f, &ui)| to_bounded(ui, f.lower, f.upper))
            .collect()
    };
    let evaluations = std::cell::Cell::new(0usize);
    let objective = |u: &[f64]| -> f64 {
        evaluations.set(evaluations.get() + 1);
        residual(&to_params(u), problem).unwrap_or(f64::INFINITY)
    };

    let initial_residual = objective(&start);
    if !initial_residual.is_finite() {
        return Err(Error::Fit("model cannot be evaluated at the initial guess".into()));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.clone(), initial_residual)];
    for i in 0..n {
        let mut vertex = start.clone();
        vertex[i] += INITIAL_STEP;
        let value = objective(&vertex);
        simplex.push((vertex, value));
    }

    let mut iterations = 0usize;
    let mut history = Vec::new();
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let scale = best.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| v.iter().zip(best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diameter < SIMPLEX_TOLERANCE * scale {
            converged = true;
            break;
        }
        if evaluations.get() >= max_evals {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let fr = objective(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(2.0);
            let fe = objective(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let outside = fr < worst.1;
            let contracted = along(if outside { 0.5 } else { -0.5 });
            let fc = objective(&contracted);
            let accept = if outside { fc <= fr } else { fc < worst.1 };
            if accept {
                simplex[n] = (contracted, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = anchor
                        .iter()
                        .zip(&vertex.0)
                        .map(|(a, v)| a + 0.5 * (v - a))
                        .collect();
                    let f = objective(&shrunk);
                    *vertex = (shrunk, f);
                }
            }
        }
        let best_now = simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        history.push(best_now);
    }

    let (best_u, best_value) = simplex[0].clone();
    let estimates = to_params(&best_u);
    Ok(FitResult {
        parameters: problem.free.iter().map(|f| f.parameter).collect(),
        setup: problem.setup_with(&estimates),
        estimates,
        residual: best_value,
        initial_residual,
        evaluations: evaluations.get(),
        iterations,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    fn synthetic(name: &str, points: usize) -> (ModelSetup, ObservedSpectrum) {
        let run = preset(name).unwrap();
        let setup = ModelSetup::from_run(&run).unwrap();
        let mut spec = run.scan_spec();
        spec.points = points;
        let records = setup.evaluate(&spec.grid()).unwrap();
        let result = SweepResult {
            records,
            config: setup.config,
            input: setup.input,
            detection: setup.detection,
            omega: setup.omega,
        };
        (setup, ObservedSpectrum::from_result(&result))
    }

    #[test]
    fn zero_residual_on_own_synthetic() {
        let (setup, observed) = synthetic("figS2", 101);
        let p = FitProblem::new(observed, setup, &[FitParameter::R1Sq]).unwrap();
        assert!(residual(&p.current_values(), &p).unwrap() < 1e-12);
    }

    #[test]
    fn constant_offset_linear() {
        let (setup, mut observed) = synthetic("figS2", 101);
        observed.intensity = None;
        observed.var_y = None;
        for v in observed.var_x.as_mut().unwrap() {
            *v += 0.1;
        }
        let p = FitProblem::new(observed, setup, &[FitParameter::R1Sq])
            .unwrap()
            .with_domain(ObjectiveDomain::Linear);
        let r = residual(&p.current_values(), &p).unwrap();
        assert!((r - 0.1).abs() < 1e-12, "{r}");
    }

    #[test]
    fn errors() {
        let (setup, observed) = synthetic("figS2", 11);
        assert!(matches!(
            FitProblem::new(observed.clone(), setup, &[]),
            Err(Error::Fit(_))
        ));
        let p = FitProblem::new(observed, setup, &[FitParameter::R1Sq]).unwrap();
        assert!(matches!(fit_parameters(&p, &[1.0], 100), Err(Error::Fit(_))));
        assert!(matches!(fit_parameters(&p, &[1.5], 100), Err(Error::Fit(_))));
        assert!("r9_sq".parse::<FitParameter>().is_err());
        assert_eq!("var_x_in".parse::<FitParameter>().unwrap(), FitParameter::VarXIn);
    }

    #[test]
    fn recovers_r1_and_is_deterministic() {
        let (setup, observed) = synthetic("figS2", 201);
        let p = FitProblem::new(observed, setup, &[FitParameter::R1Sq]).unwrap();
        let a = fit_parameters(&p, &[0.995], DEFAULT_MAX_EVALS).unwrap();
        assert!(a.converged);
        assert!((a.estimates[0] - 0.999).abs() < 1e-5, "{:?}", a.estimates);
        assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
        let b = fit_parameters(&p, &[0.995], DEFAULT_MAX_EVALS).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn optimal_start_stays_put() {
        let (setup, observed) = synthetic("figS2", 51);
        let p = FitProblem::new(observed, setup, &[FitParameter::R1Sq]).unwrap();
        let r = fit_parameters(&p, &p.current_values(), DEFAULT_MAX_EVALS).unwrap();
        assert!(r.converged);
        assert_eq!(r.residual, r.initial_residual);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn unevaluable_region_is_avoided() {
        // var_x_in * var_y_in < 1 is rejected by the model and scores infinity
        let (setup, observed) = synthetic("case1_single", 101);
        let p = FitProblem::new(observed, setup, &[FitParameter::VarXIn]).unwrap();
        let r = fit_parameters(&p, &[0.9], DEFAULT_MAX_EVALS).unwrap();
        assert!(r.residual.is_finite());
    }
}
