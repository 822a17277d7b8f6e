//! Pure single-mode Gaussian probes in the phase-space picture.
//!
//! Quadratures are normalised so that the vacuum covariance is the identity.
//! A phase shift `e^{iθ}` on the mode acts on phase space as
//! `R(θ) = [[cos θ, sin θ], [−sin θ, cos θ]]`, and a squeezed probe's
//! covariance orientation after the ring is `Θ = 2θ_R + 2ϕ_rot − χ`.
//!
//! The ring channel is a beam-splitter loss followed by a phase shift, so
//! with `M = √η R(θ)` it maps `d ↦ M d` and `Σ ↦ M Σ Mᵀ + (1 − η) I`.
//! `M` is linear in the complex field transmission `t`, which is how state
//! derivatives are taken.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{check, Error, Result};
use crate::resonator::{ChannelPoint, Parameter};

/// Parameters of the probe `R(ϕ_rot) D(β) S(ξ) |0⟩`, `ξ = s e^{iχ}`, with `β`
/// real and non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    /// `|β|`.
    pub displacement: f64,
    /// Squeezing magnitude `s`.
    pub squeezing: f64,
    /// Squeezing phase `χ`.
    pub squeeze_phase: f64,
    /// Rotation `ϕ_rot`.
    pub rotation: f64,
}

impl ProbeSpec {
    pub fn new(displacement: f64, squeezing: f64, squeeze_phase: f64, rotation: f64) -> Result<Self> {
        let probe = Self {
            displacement,
            squeezing,
            squeeze_phase,
            rotation,
        };
        probe.validate()?;
        Ok(probe)
    }

    /// A coherent state with `|β|² = mean_photons`.
    pub fn coherent(mean_photons: f64) -> Result<Self> {
        check(mean_photons >= 0.0, "mean_photons", mean_photons, "must be non-negative")?;
        Self::new(mean_photons.sqrt(), 0.0, 0.0, 0.0)
    }

    /// Splits a photon budget so that `sinh² s = fraction · budget` and
    /// `|β|² = (1 − fraction) · budget`.
    pub fn from_budget(budget: f64, squeeze_fraction: f64, squeeze_phase: f64, rotation: f64) -> Result<Self> {
        check(budget >= 0.0, "photon_budget", budget, "must be non-negative")?;
        check(
            (0.0..=1.0).contains(&squeeze_fraction),
            "squeeze_fraction",
            squeeze_fraction,
            "must lie in [0, 1]",
        )?;
        let squeezing = (squeeze_fraction * budget).sqrt().asinh();
        let displacement = ((1.0 - squeeze_fraction) * budget).sqrt();
        Self::new(displacement, squeezing, squeeze_phase, rotation)
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.displacement >= 0.0 && self.displacement.is_finite(),
            "displacement",
            self.displacement,
            "must be non-negative",
        )?;
        check(
            self.squeezing >= 0.0 && self.squeezing.is_finite(),
            "squeezing",
            self.squeezing,
            "must be non-negative",
        )?;
        check(self.squeeze_phase.is_finite(), "squeeze_phase", self.squeeze_phase, "must be finite")?;
        check(self.rotation.is_finite(), "rotation", self.rotation, "must be finite")
    }
}

/// First and second moments of a single-mode Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl GaussianState {
    pub fn vacuum() -> Self {
        Self {
            mean: Vector2::zeros(),
            cov: Matrix2::identity(),
        }
    }
}

/// Derivative of the channel output with respect to one analyte parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub d_cov: Matrix2<f64>,
    pub d_mean: Vector2<f64>,
    pub d_purity: f64,
}

pub fn mean_photons(probe: &ProbeSpec) -> f64 {
    probe.displacement.powi(2) + probe.squeezing.sinh().powi(2)
}

/// Phase-space rotation for a mode phase shift `e^{iθ}`.
pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, s, -s, c)
}

/// `√|t|² R(arg t)` written directly in terms of `t`.
fn amplitude_matrix(t: Complex64) -> Matrix2<f64> {
    Matrix2::new(t.re, t.im, -t.im, t.re)
}

/// Moments of the probe before it enters the ring.
pub fn probe_state(probe: &ProbeSpec) -> GaussianState {
    let s = probe.squeezing;
    let (sh, ch) = (s.sinh(), s.cosh());
    let orient = 2.0 * probe.rotation - probe.squeeze_phase;
    let (so, co) = orient.sin_cos();
    let diag = 1.0 + 2.0 * sh * sh;
    let off = 2.0 * sh * ch;
    let cov = Matrix2::new(diag - off * co, off * so, off * so, diag + off * co);
    let mean = rotation(probe.rotation) * Vector2::new(2.0 * probe.displacement, 0.0);
    GaussianState { mean, cov }
}

/// Loss with transmission `eta` followed by a phase shift `theta`.
pub fn apply_loss_phase(state: &GaussianState, eta: f64, theta: f64) -> Result<GaussianState> {
    check((0.0..=1.0).contains(&eta), "eta", eta, "must lie in [0, 1]")?;
    let m = eta.sqrt() * rotation(theta);
    Ok(through(state, &m, eta))
}

fn through(state: &GaussianState, m: &Matrix2<f64>, eta: f64) -> GaussianState {
    GaussianState {
        mean: m * state.mean,
        cov: m * state.cov * m.transpose() + Matrix2::identity() * (1.0 - eta),
    }
}

/// The probe after the ring channel described by `channel`.
pub fn output_state(probe: &ProbeSpec, channel: &ChannelPoint) -> GaussianState {
    let t = channel.amplitude;
    through(&probe_state(probe), &amplitude_matrix(t), t.norm_sqr())
}

/// `P = det(Σ)^{-1/2}`.
pub fn purity(state: &GaussianState) -> Result<f64> {
    let det = state.cov.determinant();
    if state.cov[(0, 0)] > 0.0 && det > 0.0 && det.is_finite() {
        Ok(det.powf(-0.5))
    } else {
        Err(Error::NotPositiveDefinite)
    }
}

/// Derivatives of the output covariance, mean and purity.
pub fn state_derivative(probe: &ProbeSpec, channel: &ChannelPoint, wrt: Parameter) -> StateDerivative {
    let input = probe_state(probe);
    let t = channel.amplitude;
    let dt = channel.d_amplitude(wrt);
    let m = amplitude_matrix(t);
    let dm = amplitude_matrix(dt);
    let d_eta = 2.0 * (t.conj() * dt).re;

    let cross = dm * input.cov * m.transpose();
    let d_cov = cross + cross.transpose() - Matrix2::identity() * d_eta;
    let d_mean = dm * input.mean;

    let cov = m * input.cov * m.transpose() + Matrix2::identity() * (1.0 - t.norm_sqr());
    let det = cov.determinant();
    let d_det = cov[(1, 1)] * d_cov[(0, 0)] + cov[(0, 0)] * d_cov[(1, 1)]
        - cov[(0, 1)] * d_cov[(1, 0)]
        - cov[(1, 0)] * d_cov[(0, 1)];
    let d_purity = -0.5 * det.powf(-1.5) * d_det;

    StateDerivative {
        d_cov,
        d_mean,
        d_purity,
    }
}
