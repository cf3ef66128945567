//! Complex reflection response of a single Fabry-Perot cavity and of two
//! cavities coupled through a shared middle mirror.
//!
//! Light enters through the input mirror M2. Cavity C2 sits between M2 and
//! the middle mirror M1, cavity C1 between M1 and the end mirror M0. C1 is
//! seen from C2 as a frequency-dependent back mirror with reflectivity
//! [`inner_reflectivity`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Denominators smaller than this are treated as a perfect-mirror singularity.
const DEGENERATE_DENOMINATOR: f64 = 1e-15;

pub type ComplexAmplitude = Complex64;

/// Which algebraic form is used for the back-cavity reflectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// `(r1 - t1 e^{iφ}) / (1 - r1 r0 t1 e^{iφ})`, kept for literal reproduction.
    /// Not passive: `|R1|` can exceed one.
    AsPrinted,
    /// `(r1 - r0 t1 e^{iφ}) / (1 - r1 r0 t1 e^{iφ})`.
    #[default]
    SymmetricNumerator,
}

/// Whether the back cavity C1 takes part in the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    #[default]
    Coupled,
    /// C1 blocked: C2 alone, with M1 as a plain back mirror.
    SingleCavity,
}

/// Mirror amplitude reflectivities, round-trip amplitude transmissions and
/// geometry of the two-cavity system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledCavityConfig {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    /// Round-trip amplitude transmission of C1; 1 is lossless.
    pub t1: f64,
    pub t2: f64,
    /// Cavity lengths in meters.
    pub length1: f64,
    pub length2: f64,
    pub index1: f64,
    pub index2: f64,
    pub variant: ModelVariant,
    pub topology: Topology,
    /// Static round-trip phase offsets (cavity mis-tuning), radians.
    pub phase_offset1: f64,
    pub phase_offset2: f64,
}

impl CoupledCavityConfig {
    /// Lossless, equal-length (29.5 mm) cavities from power reflectivities.
    pub fn from_power(r0_sq: f64, r1_sq: f64, r2_sq: f64) -> Self {
        CoupledCavityConfig {
            r0: r0_sq.sqrt(),
            r1: r1_sq.sqrt(),
            r2: r2_sq.sqrt(),
            t1: 1.0,
            t2: 1.0,
            length1: 0.0295,
            length2: 0.0295,
            index1: 1.0,
            index2: 1.0,
            variant: ModelVariant::SymmetricNumerator,
            topology: Topology::Coupled,
            phase_offset1: 0.0,
            phase_offset2: 0.0,
        }
    }

    pub fn with_variant(mut self, variant: ModelVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_topology(mut self, topology: Topology) -> Self {
        self.topology = topology;
        self
    }

    pub fn with_transmissions(mut self, t1: f64, t2: f64) -> Self {
        self.t1 = t1;
        self.t2 = t2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("r0", self.r0), ("r1", self.r1), ("r2", self.r2)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Input(format!("{name} = {r} outside [0, 1]")));
            }
        }
        for (name, t) in [("t1", self.t1), ("t2", self.t2)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Input(format!("{name} = {t} outside (0, 1]")));
            }
        }
        for (name, l) in [("length1", self.length1), ("length2", self.length2)] {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Input(format!("{name} = {l} must be positive")));
            }
        }
        for (name, n) in [("index1", self.index1), ("index2", self.index2)] {
            if !(n >= 1.0 && n.is_finite()) {
                return Err(Error::Input(format!("{name} = {n} must be >= 1")));
            }
        }
        if !self.phase_offset1.is_finite() || !self.phase_offset2.is_finite() {
            return Err(Error::Input("phase offsets must be finite".into()));
        }
        Ok(())
    }

    /// Free spectral range of C1 in Hz.
    pub fn fsr1(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.length1 * self.index1)
    }

    /// Free spectral range of C2 in Hz.
    pub fn fsr2(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.length2 * self.index2)
    }

    /// Reflection coefficient at a pair of round-trip phases, including the
    /// static offsets and the topology switch.
    pub fn response(&self, phases: PhasePair) -> Result<ComplexAmplitude> {
        let phases = PhasePair {
            phi1: phases.phi1 + self.phase_offset1,
            phi2: phases.phi2 + self.phase_offset2,
        };
        match self.topology {
            Topology::Coupled => coupled_reflectivity(self, phases),
            Topology::SingleCavity => {
                single_cavity_reflectivity(self.r2, self.r1, self.t2, phases.phi2)
            }
        }
    }

    /// Reflection coefficient at an optical detuning (Hz) from co-resonance.
    pub fn response_at(&self, detuning: f64) -> Result<ComplexAmplitude> {
        self.response(round_trip_phase(self, detuning)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePair {
    pub phi1: f64,
    pub phi2: f64,
}

impl PhasePair {
    pub fn new(phi1: f64, phi2: f64) -> Self {
        PhasePair { phi1, phi2 }
    }

    pub fn equal(phi: f64) -> Self {
        PhasePair { phi1: phi, phi2: phi }
    }
}

impl std::ops::Add for PhasePair {
    type Output = PhasePair;

    fn add(self, rhs: PhasePair) -> PhasePair {
        PhasePair {
            phi1: self.phi1 + rhs.phi1,
            phi2: self.phi2 + rhs.phi2,
        }
    }
}

/// Magnitude and principal-branch phase of a reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarResponse {
    pub rho: f64,
    pub theta: f64,
}

impl PolarResponse {
    pub fn to_complex(self) -> ComplexAmplitude {
        Complex64::from_polar(self.rho, self.theta)
    }
}

/// Round-trip phases relative to co-resonance: one FSR of detuning is 2π.
pub fn round_trip_phase(config: &CoupledCavityConfig, detuning: f64) -> Result<PhasePair> {
    if !detuning.is_finite() {
        return Err(Error::Input(format!("detuning {detuning} is not finite")));
    }
    Ok(PhasePair {
        phi1: 2.0 * PI * detuning / config.fsr1(),
        phi2: 2.0 * PI * detuning / config.fsr2(),
    })
}

fn checked_ratio(num: Complex64, den: Complex64, what: &str) -> Result<Complex64> {
    if den.norm() < DEGENERATE_DENOMINATOR {
        return Err(Error::Degenerate(format!(
            "{what} denominator vanishes (perfect mirrors on resonance)"
        )));
    }
    Ok(num / den)
}

/// Reflectivity of C1 seen from inside C2, through M1.
pub fn inner_reflectivity(config: &CoupledCavityConfig, phi1: f64) -> Result<ComplexAmplitude> {
    let round_trip = config.t1 * Complex64::cis(phi1);
    let numerator = match config.variant {
        ModelVariant::AsPrinted => config.r1 - round_trip,
        ModelVariant::SymmetricNumerator => config.r1 - config.r0 * round_trip,
    };
    let denominator = 1.0 - config.r1 * config.r0 * round_trip;
    checked_ratio(numerator, denominator, "inner cavity")
}

/// Reflectivity of the coupled system seen through the input mirror M2.
pub fn coupled_reflectivity(
    config: &CoupledCavityConfig,
    phases: PhasePair,
) -> Result<ComplexAmplitude> {
    let back = inner_reflectivity(config, phases.phi1)?;
    let round_trip = back * config.t2 * Complex64::cis(phases.phi2);
    checked_ratio(
        config.r2 - round_trip,
        1.0 - config.r2 * round_trip,
        "coupled cavity",
    )
}

/// Reflectivity of one Fabry-Perot cavity with a constant back mirror.
pub fn single_cavity_reflectivity(
    r_in: f64,
    r_back: f64,
    t_rt: f64,
    phi: f64,
) -> Result<ComplexAmplitude> {
    let round_trip = r_back * t_rt * Complex64::cis(phi);
    checked_ratio(r_in - round_trip, 1.0 - r_in * round_trip, "single cavity")
}

/// `to_polar(0)` has phase 0.
pub fn to_polar(z: ComplexAmplitude) -> PolarResponse {
    let rho = z.norm();
    if rho == 0.0 {
        return PolarResponse { rho: 0.0, theta: 0.0 };
    }
    let mut theta = z.arg();
    // atan2 gives -π for (-x, -0.0); keep the branch (-π, π].
    if theta <= -PI {
        theta = PI;
    }
    PolarResponse { rho, theta }
}
