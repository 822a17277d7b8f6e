//! Quantum-limited absorption and refractive-index sensing with an all-pass
//! ring resonator probed by Gaussian light.
//!
//! Lengths are in cm, absorption coefficients in cm⁻¹ and phases in radians.

pub mod error;
pub mod estimator;
pub mod gaussian;
pub mod optimizer;
pub mod qfi;
pub mod resonator;
pub mod roots;
pub mod strategies;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use estimator::{McReport, McSetup, Sampling};
pub use gaussian::{GaussianState, ProbeSpec, StateDerivative};
pub use optimizer::{OptimumParams, OptimumReport, RobustnessRow, SearchBounds, SearchSpec};
pub use qfi::QfiResult;
pub use resonator::{Analyte, Attenuation, ChannelPoint, MziCoupler, Parameter, RingParams};
pub use strategies::{ComparisonRow, SinglePassSetup, Strategy};
