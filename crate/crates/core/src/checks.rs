//! Invariant suite and an independent covariance-matrix model of the
//! two-sideband reflection channel.
//!
//! The oracle tracks the real quadratures (q₊, p₊, q₋, p₋) of the upper and
//! lower sideband modes, with vacuum variance 1. Each mode passes through its
//! own attenuated rotation plus the vacuum noise that keeps it physical; the
//! homodyne readout combines the two modes into one complex quadrature whose
//! spectrum is Var(real part) + Var(imaginary part).

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::preset;
use crate::optics::{
    coupled_reflectivity, single_cavity_reflectivity, to_polar, CoupledCavityConfig, PhasePair,
    PolarResponse, Topology,
};
use crate::quantum::{
    variance_at_angle, variance_x, variance_y, InputGaussianState, SidebandResponsePair,
};
use crate::sweep::{frequency_scan, mirror_scan, ScanMode, ScanSpec};

type Mat4 = [[f64; 4]; 4];

/// Two-mode covariance of a two-sideband squeezed input.
pub fn input_covariance(input: &InputGaussianState) -> Mat4 {
    let d = 0.5 * (input.var_x + input.var_y);
    let c = 0.5 * (input.var_x - input.var_y);
    [
        [d, 0.0, c, 0.0],
        [0.0, d, 0.0, -c],
        [c, 0.0, d, 0.0],
        [0.0, -c, 0.0, d],
    ]
}

/// Propagates `v` through independent attenuated rotations of both modes.
pub fn propagate(v: &Mat4, plus: PolarResponse, minus: PolarResponse) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (k, r) in [plus, minus].into_iter().enumerate() {
        let (s, c) = r.theta.sin_cos();
        let o = 2 * k;
        m[o][o] = r.rho * c;
        m[o][o + 1] = -r.rho * s;
        m[o + 1][o] = r.rho * s;
        m[o + 1][o + 1] = r.rho * c;
    }
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    acc += m[i][a] * v[a][b] * m[j][b];
                }
            }
            out[i][j] = acc;
        }
    }
    for (k, r) in [plus, minus].into_iter().enumerate() {
        let noise = 1.0 - r.rho * r.rho;
        out[2 * k][2 * k] += noise;
        out[2 * k + 1][2 * k + 1] += noise;
    }
    out
}

fn quadratic(v: &Mat4, w: &[f64; 4]) -> f64 {
    (0..4)
        .map(|i| (0..4).map(|j| w[i] * v[i][j] * w[j]).sum::<f64>())
        .sum()
}

/// Quadrature-noise spectrum at local-oscillator angle `angle`.
pub fn readout_variance(v: &Mat4, angle: f64) -> f64 {
    let (s, c) = angle.sin_cos();
    let real = [0.5 * c, 0.5 * s, 0.5 * c, 0.5 * s];
    let imag = [-0.5 * s, 0.5 * c, 0.5 * s, -0.5 * c];
    quadratic(v, &real) + quadratic(v, &imag)
}

/// (var_x, var_y) computed through covariance propagation.
pub fn oracle_variances(pair: &SidebandResponsePair, input: &InputGaussianState) -> (f64, f64) {
    let out = propagate(&input_covariance(input), pair.plus, pair.minus);
    (readout_variance(&out, 0.0), readout_variance(&out, FRAC_PI_2))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// Largest violation seen, in the check's own measure.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }
}

fn random_config(rng: &mut ChaCha8Rng) -> CoupledCavityConfig {
    let mut cfg = CoupledCavityConfig::from_power(
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.0),
    );
    cfg.t1 = rng.gen_range(0.5..=1.0);
    cfg.t2 = rng.gen_range(0.5..=1.0);
    cfg
}

fn random_phases(rng: &mut ChaCha8Rng) -> PhasePair {
    PhasePair::new(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI))
}

fn random_pair(rng: &mut ChaCha8Rng) -> SidebandResponsePair {
    let mut polar = || PolarResponse {
        rho: rng.gen_range(0.0..=1.0),
        theta: rng.gen_range(-PI..=PI),
    };
    SidebandResponsePair::from_responses(polar(), polar())
}

/// A physical input: var_x in (0.05, 20), var_y at or above the bound.
pub fn random_input(rng: &mut ChaCha8Rng) -> InputGaussianState {
    let var_x = 10f64.powf(rng.gen_range(-1.3..1.3));
    let var_y = (1.0 / var_x) * 10f64.powf(rng.gen_range(0.0..1.0));
    InputGaussianState { var_x, var_y }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally {
            name,
            tolerance,
            cases: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, violation: f64) {
        self.cases += 1;
        // NaN counts as a failure
        if violation.is_nan() || violation > self.worst {
            self.worst = if violation.is_nan() { f64::INFINITY } else { violation };
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name,
            passed: self.worst <= self.tolerance,
            cases: self.cases,
            worst: self.worst,
            tolerance: self.tolerance,
        }
    }
}

/// Runs every invariant on `cases` random draws each.
pub fn run_checks(seed: u64, cases: usize) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut t = Tally::new("passivity", 1e-12);
    for _ in 0..cases {
        let cfg = random_config(&mut rng);
        if let Ok(r) = cfg.response(random_phases(&mut rng)) {
            t.record(r.norm() - 1.0);
        }
    }
    checks.push(t.finish());

    let mut t = Tally::new("lossless_unitarity", 1e-12);
    for _ in 0..cases {
        let mut cfg = random_config(&mut rng);
        cfg.r0 = 1.0;
        cfg.t1 = 1.0;
        cfg.t2 = 1.0;
        if let Ok(r) = cfg.response(random_phases(&mut rng)) {
            t.record((r.norm() - 1.0).abs());
        }
    }
    checks.push(t.finish());

    let mut t = Tally::new("conjugate_symmetry", 1e-12);
    for _ in 0..cases {
        let cfg = random_config(&mut rng);
        let p = random_phases(&mut rng);
        if let (Ok(a), Ok(b)) = (
            cfg.response(p),
            cfg.response(PhasePair::new(-p.phi1, -p.phi2)),
        ) {
            t.record((a - b.conj()).norm());
        }
    }
    checks.push(t.finish());

    let mut t = Tally::new("phase_periodicity", 1e-9);
    for _ in 0..cases {
        let cfg = random_config(&mut rng);
        let p = random_phases(&mut rng);
        let shifted = PhasePair::new(p.phi1 + 2.0 * PI, p.phi2 - 2.0 * PI);
        if let (Ok(a), Ok(b)) = (cfg.response(p), cfg.response(shifted)) {
            t.record((a - b).norm());
        }
    }
    checks.push(t.finish());

    let mut t = Tally::new("decoupling_limit", 1e-12);
    for _ in 0..cases {
        let mut cfg = random_config(&mut rng);
        cfg.r1 = 1.0;
        let p = random_phases(&mut rng);
        let coupled = coupled_reflectivity(&cfg, p);
        let single = single_cavity_reflectivity(cfg.r2, 1.0, cfg.t2, p.phi2);
        let single_topology = cfg.with_topology(Topology::SingleCavity).response(p);
        if let (Ok(a), Ok(b), Ok(c)) = (coupled, single, single_topology) {
            t.record((a - b).norm().max((b - c).norm()));
        }
    }
    checks.push(t.finish());

    let mut t = Tally::new("vacuum_preservation", 1e-12);
    for _ in 0..cases {
        let pair = random_pair(&mut rng);
        let vac = InputGaussianState::vacuum();
        t.record((variance_x(&pair, &vac) - 1.0).abs().max((variance_y(&pair, &vac) - 1.0).abs()));
    }
    checks.push(t.finish());

    let mut t = Tally::new("uncertainty_bound", 1e-9);
    for _ in 0..cases {
        let pair = random_pair(&mut rng);
        let input = random_input(&mut rng);
        t.record(1.0 - variance_x(&pair, &input) * variance_y(&pair, &input));
    }
    checks.push(t.finish());

    let mut t = Tally::new("oracle_equivalence", 1e-10);
    for _ in 0..cases {
        let pair = random_pair(&mut rng);
        let input = random_input(&mut rng);
        let (ox, oy) = oracle_variances(&pair, &input);
        t.record((variance_x(&pair, &input) - ox).abs().max((variance_y(&pair, &input) - oy).abs()));
    }
    checks.push(t.finish());

    let mut t = Tally::new("rotated_quadrature_consistency", 1e-10);
    for _ in 0..cases {
        let pair = random_pair(&mut rng);
        let input = random_input(&mut rng);
        let angle = rng.gen_range(-PI..PI);
        let out = propagate(&input_covariance(&input), pair.plus, pair.minus);
        let d0 = (variance_at_angle(&pair, &input, 0.0) - variance_x(&pair, &input)).abs();
        let d1 = (variance_at_angle(&pair, &input, FRAC_PI_2) - variance_y(&pair, &input)).abs();
        let d2 = (variance_at_angle(&pair, &input, angle) - readout_variance(&out, angle)).abs();
        t.record(d0.max(d1).max(d2));
    }
    checks.push(t.finish());

    let mut t = Tally::new("beam_splitter_reduction", 1e-12);
    for _ in 0..cases {
        let r = PolarResponse {
            rho: rng.gen_range(0.0..=1.0),
            theta: rng.gen_range(-PI..=PI),
        };
        let input = random_input(&mut rng);
        let pair = SidebandResponsePair::from_responses(r, r);
        let (s, c) = r.theta.sin_cos();
        let rho2 = r.rho * r.rho;
        let expect_x = rho2 * c * c * input.var_x + rho2 * s * s * input.var_y + 1.0 - rho2;
        let expect_y = rho2 * s * s * input.var_x + rho2 * c * c * input.var_y + 1.0 - rho2;
        t.record(
            (variance_x(&pair, &input) - expect_x)
                .abs()
                .max((variance_y(&pair, &input) - expect_y).abs()),
        );
    }
    checks.push(t.finish());

    checks.push(scan_checks());

    let mut t = Tally::new("detuning_mirror_symmetry", 1e-10);
    for _ in 0..cases.min(200) {
        let cfg = random_config(&mut rng);
        let input = random_input(&mut rng);
        let delta = rng.gen_range(-0.5..0.5) * cfg.fsr2();
        let omega = rng.gen_range(0.0..0.1) * cfg.fsr2();
        let at = |d: f64| -> Option<(f64, f64)> {
            let phase = |x: f64| crate::optics::round_trip_phase(&cfg, x).ok();
            let plus = to_polar(cfg.response(phase(d + omega)?).ok()?);
            let minus = to_polar(cfg.response(phase(d - omega)?).ok()?);
            let pair = SidebandResponsePair::from_responses(plus, minus);
            Some((variance_x(&pair, &input), variance_y(&pair, &input)))
        };
        if let (Some(a), Some(b)) = (at(delta), at(-delta)) {
            t.record((a.0 - b.0).abs().max((a.1 - b.1).abs()) / a.0.max(a.1).max(1.0));
        }
    }
    checks.push(t.finish());

    CheckReport { seed, checks }
}

fn scan_checks() -> CheckOutcome {
    let mut t = Tally::new("mirror_frequency_equivalence", 1e-10);
    for name in ["figS2", "case1_coupled"] {
        let run = preset(name).expect("preset exists");
        let cfg = run.cavity_config();
        let input = run.input_state().expect("preset input valid");
        let omega = run.omega();
        let mut spec = run.scan_spec();
        spec.points = 201;
        let mirror_spec = ScanSpec {
            mode: ScanMode::Mirror,
            span: spec.span * spec.wavelength * cfg.length2 / crate::optics::SPEED_OF_LIGHT,
            ..spec
        };
        match (
            frequency_scan(&cfg, &input, omega, &spec),
            mirror_scan(&cfg, &input, omega, &mirror_spec),
        ) {
            (Ok(f), Ok(m)) => {
                for (a, b) in f.records.iter().zip(&m.records) {
                    let scale = a.detuning.abs().max(1.0);
                    t.record(
                        ((a.detuning - b.detuning).abs() / scale)
                            .max((a.var_x - b.var_x).abs())
                            .max((a.var_y - b.var_y).abs())
                            .max((a.intensity - b.intensity).abs()),
                    );
                }
            }
            _ => t.record(f64::INFINITY),
        }
    }
    t.finish()
}
