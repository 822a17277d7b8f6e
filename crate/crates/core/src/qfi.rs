//! Quantum Fisher information of pure single-mode Gaussian probes sent
//! through the ring.
//!
//! [`qfi_gaussian_general`] evaluates the three-term Gaussian formula
//!
//! ```text
//! Q = Tr[(Σ⁻¹Σ′)²] / (2(1 + P²)) + 2P′² / (1 − P⁴) + d′ᵀ Σ⁻¹ d′
//! ```
//!
//! numerically from the output moments. The `qfi_term_*` functions are the
//! closed forms of each term for this channel and serve as an independent
//! route to the same numbers. The remaining functions are the specialisations
//! at critical coupling and on resonance.

use std::f64::consts::PI;

use crate::error::{check, Error, Result};
use crate::gaussian::{mean_photons, output_state, purity, state_derivative, ProbeSpec};
use crate::resonator::{attenuation, channel_point, round_trip_phase, Analyte, ChannelPoint, Parameter, RingParams};

/// `det Σ − 1` below this is treated as a pure state, where the purity term
/// is evaluated from its closed-form limit.
const PURE_EXCESS: f64 = 1e-10;

/// Tolerance on `|r − a|` and on `φ mod 2π` for the critical-point formulas.
pub const CRITICAL_TOL: f64 = 1e-9;

/// Quantum Fisher information and its decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiResult {
    pub total: f64,
    /// Change of the noise ellipse.
    pub term_noise: f64,
    /// Change of purity.
    pub term_purity: f64,
    /// Change of the displacement.
    pub term_displacement: f64,
    /// `total` divided by the mean input photon number.
    pub per_photon: f64,
}

impl QfiResult {
    fn from_terms(term_noise: f64, term_purity: f64, term_displacement: f64, photons: f64) -> Self {
        let total = term_noise + term_purity + term_displacement;
        let per_photon = if photons > 0.0 { total / photons } else { 0.0 };
        Self {
            total,
            term_noise,
            term_purity,
            term_displacement,
            per_photon,
        }
    }

    /// Single-shot standard deviation bound per mean input photon, `1/√Q₁`.
    pub fn std_per_photon(&self) -> f64 {
        self.per_photon.sqrt().recip()
    }
}

/// The three-term Gaussian QFI evaluated from the output state.
pub fn qfi_gaussian_general(probe: &ProbeSpec, channel: &ChannelPoint, wrt: Parameter) -> Result<QfiResult> {
    probe.validate()?;
    let state = output_state(probe, channel);
    let deriv = state_derivative(probe, channel, wrt);
    let inv = state.cov.try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let p = purity(&state)?;

    let m = inv * deriv.d_cov;
    let term_noise = (m * m).trace() / (2.0 * (1.0 + p * p));

    let excess = state.cov.determinant() - 1.0;
    let term_purity = if probe.squeezing == 0.0 {
        0.0
    } else if excess > PURE_EXCESS {
        let det = excess + 1.0;
        let one_minus_p4 = excess * (det + 1.0) / (det * det);
        2.0 * deriv.d_purity * deriv.d_purity / one_minus_p4
    } else {
        qfi_term_purity(probe, channel, wrt)?
    };

    let term_displacement = deriv.d_mean.dot(&(inv * deriv.d_mean));
    Ok(QfiResult::from_terms(term_noise, term_purity, term_displacement, mean_photons(probe)))
}

/// Closed form of the noise term. Finite for every `η ∈ [0, 1]`.
pub fn qfi_term_noise(probe: &ProbeSpec, channel: &ChannelPoint, wrt: Parameter) -> f64 {
    let s = probe.squeezing;
    if s == 0.0 {
        return 0.0;
    }
    let eta = channel.eta;
    let g = eta * (eta - 1.0);
    let (c2, c4) = ((2.0 * s).cosh(), (4.0 * s).cosh());
    let pref = 2.0 * s.sinh().powi(2) / ((g * c2 - g - 1.0) * (2.0 * g * c2 - 2.0 * g - 1.0));
    let d_eta = channel.d_eta(wrt);
    let eta_d_theta = channel.eta_d_theta(wrt);
    pref * (((1.0 + 2.0 * g) * c2 - 2.0 * g) * d_eta * d_eta
        + 2.0 * (1.0 + g + c2 - g * c4) * eta_d_theta * eta_d_theta)
}

/// Closed form of the purity term,
/// `(1 − 2η)² sinh²s η′² / (γ (1 + γ − γ cosh 2s)(2γ cosh 2s − 2γ − 1))`
/// with `γ = η(η − 1)`.
///
/// `η′²/γ` is taken through `(∂|t|)²` so the value stays finite as `η → 0`.
/// At `η = 1` the term diverges unless `η′ = 0`.
pub fn qfi_term_purity(probe: &ProbeSpec, channel: &ChannelPoint, wrt: Parameter) -> Result<f64> {
    let s = probe.squeezing;
    if s == 0.0 {
        return Ok(0.0);
    }
    let eta = channel.eta;
    let rate_over_g = if eta < 1.0 {
        channel.loss_rate_sq(wrt) / (1.0 - eta)
    } else if channel.d_eta(wrt) == 0.0 {
        0.0
    } else {
        return Err(Error::Divergent("squeezed probe through a lossless channel"));
    };
    let g = eta * (1.0 - eta);
    let sh2 = s.sinh().powi(2);
    Ok((1.0 - 2.0 * eta).powi(2) * sh2 * rate_over_g / ((1.0 + 2.0 * g * sh2) * (1.0 + 4.0 * g * sh2)))
}

/// Closed form of the displacement term, `κ₁(κ₂ ± κ₃) / (τ²(κ₄ + κ₅ + κ₆))`.
///
/// For the refractive index `∂t/∂n_A = −i(4π/λ) ∂t/∂α_A`, which scales the
/// term by `(4π/λ)²` and flips the sign of `κ₃`.
pub fn qfi_term_displacement(probe: &ProbeSpec, channel: &ChannelPoint, wrt: Parameter) -> Result<f64> {
    let beta = probe.displacement;
    let (s, chi) = (probe.squeezing, probe.squeeze_phase);
    let (r, a, phi) = (channel.self_coupling, channel.attenuation, channel.round_trip_phase);
    let (gamma, l) = (channel.confinement, channel.circumference);
    let (r2, a2) = (r * r, a * a);
    let (c2s, s2s) = ((2.0 * s).cosh(), (2.0 * s).sinh());
    let cp = phi.cos();

    let tau = 1.0 + a2 * r2 - 2.0 * a * r * cp;
    if tau <= f64::MIN_POSITIVE {
        return Err(Error::Singular("τ = |1 − r a e^{iφ}|² vanishes"));
    }
    let k1 = (beta * a * l * gamma).powi(2) * (r2 - 1.0).powi(2);
    let mismatch = a2 + r2 - 2.0 * a * r * cp;
    let k2 = (a2 - 1.0) * (r2 - 1.0) * tau + tau * mismatch * c2s;
    let k3 = s2s
        * ((a2 * r2 * (r2 + 4.0) + a2) * chi.cos()
            + a.powi(3) * r * (a * r * (2.0 * phi - chi).cos() - 2.0 * (r2 + 1.0) * (phi - chi).cos())
            - 2.0 * a * (r.powi(3) + r) * (chi + phi).cos()
            + r2 * (chi + 2.0 * phi).cos());
    let k4 = a2 * a2 * (r2 * r2 - 2.0 * r2 + 2.0) + 2.0 * (a2 - 1.0) * mismatch * (r2 - 1.0) * c2s;
    let k5 = 2.0 * a * r * (a * r * (2.0 * phi).cos() - 2.0 * (a2 + r2) * cp);
    let k6 = -2.0 * a2 * (r2 * r2 - 4.0 * r2 + 1.0) + 2.0 * r2 * r2 - 2.0 * r2 + 1.0;
    let den = tau * tau * (k4 + k5 + k6);

    Ok(match wrt {
        Parameter::Absorption => k1 * (k2 + k3) / den,
        Parameter::RefractiveIndex => {
            let scale = 4.0 * PI / channel.wavelength;
            scale * scale * k1 * (k2 - k3) / den
        }
    })
}

/// Sum of the three closed-form terms.
pub fn qfi_closed_form(probe: &ProbeSpec, channel: &ChannelPoint, wrt: Parameter) -> Result<QfiResult> {
    let noise = qfi_term_noise(probe, channel, wrt);
    let pur = qfi_term_purity(probe, channel, wrt)?;
    let disp = qfi_term_displacement(probe, channel, wrt)?;
    Ok(QfiResult::from_terms(noise, pur, disp, mean_photons(probe)))
}

/// Coherent-probe QFI for `α_A` at any operating point,
/// `(|β| L Γ B e^{α_T L/2})²`.
pub fn qfi_coherent(beta_sq: f64, ring: &RingParams, analyte: &Analyte) -> Result<QfiResult> {
    check(beta_sq >= 0.0, "beta_sq", beta_sq, "must be non-negative")?;
    let cp = channel_point(ring, analyte)?;
    let amp = beta_sq.sqrt() * cp.circumference * cp.confinement * cp.buildup / cp.attenuation;
    Ok(QfiResult::from_terms(0.0, 0.0, amp * amp, beta_sq))
}

fn ensure_critical(ring: &RingParams, analyte: &Analyte) -> Result<f64> {
    ring.validate()?;
    analyte.validate()?;
    let a = attenuation(ring, analyte).attenuation;
    if (ring.self_coupling - a).abs() > CRITICAL_TOL {
        return Err(Error::Precondition(format!(
            "not critically coupled: r = {} but a = {a}",
            ring.self_coupling
        )));
    }
    let phi = round_trip_phase(ring, analyte);
    let offset = phi - std::f64::consts::TAU * (phi / std::f64::consts::TAU).round();
    if offset.abs() > CRITICAL_TOL {
        return Err(Error::Precondition(format!("not on resonance: φ mod 2π = {offset}")));
    }
    Ok(a)
}

/// Per-photon QFI for `α_A` at critical coupling on resonance,
/// `L²Γ²B / (1 − e^{−α_T L})` with `B = a²/(1 − a²)`.
pub fn critical_qfi_per_photon(ring: &RingParams, analyte: &Analyte) -> Result<f64> {
    let att = attenuation(ring, analyte);
    let a = att.attenuation;
    let loss = -(-att.total_absorption * ring.circumference).exp_m1();
    if loss <= 0.0 {
        return Err(Error::Divergent("lossless ring at critical coupling"));
    }
    let buildup = a * a / loss;
    Ok((ring.circumference * ring.confinement).powi(2) * buildup / loss)
}

/// Coherent probe at critical coupling on resonance.
pub fn qfi_coherent_critical(beta_sq: f64, ring: &RingParams, analyte: &Analyte) -> Result<QfiResult> {
    check(beta_sq >= 0.0, "beta_sq", beta_sq, "must be non-negative")?;
    ensure_critical(ring, analyte)?;
    let unit = critical_qfi_per_photon(ring, analyte)?;
    Ok(QfiResult::from_terms(0.0, 0.0, beta_sq * unit, beta_sq))
}

/// Bright squeezed probe at critical coupling on resonance:
/// `(|β|² + sinh²s) L²Γ²B / (1 − e^{−α_T L})`.
pub fn qfi_squeezed_optimal(probe: &ProbeSpec, ring: &RingParams, analyte: &Analyte) -> Result<QfiResult> {
    probe.validate()?;
    ensure_critical(ring, analyte)?;
    let unit = critical_qfi_per_photon(ring, analyte)?;
    let sh2 = probe.squeezing.sinh().powi(2);
    let beta_sq = probe.displacement.powi(2);
    Ok(QfiResult::from_terms(0.0, sh2 * unit, beta_sq * unit, mean_photons(probe)))
}

/// Coherent probe estimating `n_A` at critical coupling on resonance.
pub fn qfi_refractive_index_coherent(beta_sq: f64, ring: &RingParams, analyte: &Analyte) -> Result<QfiResult> {
    check(beta_sq >= 0.0, "beta_sq", beta_sq, "must be non-negative")?;
    ensure_critical(ring, analyte)?;
    let scale = 4.0 * PI / ring.wavelength;
    let unit = scale * scale * critical_qfi_per_photon(ring, analyte)?;
    Ok(QfiResult::from_terms(0.0, 0.0, beta_sq * unit, beta_sq))
}

/// Upper bound for a channel whose loss and phase share one parameter,
/// `n_in [4η²(∂θ)² + (∂η)²] / (η(1 − η))`.
pub fn qfi_upper_bound(n_in: f64, eta: f64, d_theta: f64, d_eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::BoundUndefined(eta));
    }
    Ok(n_in * (4.0 * eta * eta * d_theta * d_theta + d_eta * d_eta) / (eta * (1.0 - eta)))
}

/// The same bound specialised to the ring, `n_in L²Γ²B / (1 − e^{−α_T L})`.
/// Depends on the analyte and fabrication, not on `r` or `φ`.
pub fn qfi_upper_bound_ring(n_in: f64, ring: &RingParams, analyte: &Analyte) -> Result<f64> {
    Ok(n_in * critical_qfi_per_photon(ring, analyte)?)
}
