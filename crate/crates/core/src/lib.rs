//! Coupled-resonator-induced transparency: reflection response of two
//! coupled optical cavities, squeezed-vacuum quadrature noise of the
//! reflected field, line-shape analysis and parameter fitting.

pub mod analysis;
pub mod checks;
pub mod cli;
pub mod config;
pub mod error;
pub mod fit;
pub mod io;
pub mod optics;
pub mod quantum;
pub mod sweep;

pub use error::{Error, Result};
pub use optics::{CoupledCavityConfig, ModelVariant, PhasePair, PolarResponse, Topology};
pub use quantum::{DetectionModel, InputGaussianState, QuadratureVariances, SidebandResponsePair};
pub use sweep::{ScanMode, ScanSpec, SweepRecord, SweepResult};
