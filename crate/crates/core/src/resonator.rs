//! Lumped model of an all-pass ring resonator side-coupled to a bus waveguide.
//!
//! Lengths are in cm, absorption coefficients in cm⁻¹ and phases in radians.
//! The ring is described by its self-coupling `r`, round-trip attenuation `a`
//! and round-trip phase `φ`; the analyte enters through `a` (absorption) and
//! `φ` (refractive index), weighted by the confinement factor.
//!
//! Derivatives with respect to the analyte are taken on the complex field
//! transmission `t = (r − a e^{iφ}) / (1 − r a e^{iφ})`, which stays smooth
//! through critical coupling where the polar pair `(η_R, θ_R)` does not.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{check, Error, Result};

/// Excursions of `η_R` above one up to this size are treated as round-off.
pub const TRANSMISSION_CLAMP: f64 = 1e-14;

/// Geometry and intrinsic optical properties of an all-pass ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingParams {
    /// Self-coupling coefficient `r` of the bus/ring coupler.
    pub self_coupling: f64,
    /// Ring circumference `L` in cm.
    pub circumference: f64,
    /// Fraction `Γ` of the guided power overlapping the analyte.
    pub confinement: f64,
    /// Intrinsic waveguide loss `α_I` in cm⁻¹.
    pub intrinsic_absorption: f64,
    /// Intrinsic effective index `n_I`.
    pub intrinsic_index: f64,
    /// Free-space wavelength `λ` in cm.
    pub wavelength: f64,
    /// Static round-trip phase offset in radians (heater or fine tuning).
    pub phase_bias: f64,
}

impl RingParams {
    pub fn new(
        self_coupling: f64,
        circumference: f64,
        confinement: f64,
        intrinsic_absorption: f64,
        intrinsic_index: f64,
        wavelength: f64,
    ) -> Result<Self> {
        let ring = Self {
            self_coupling,
            circumference,
            confinement,
            intrinsic_absorption,
            intrinsic_index,
            wavelength,
            phase_bias: 0.0,
        };
        ring.validate()?;
        Ok(ring)
    }

    /// Builds a ring from its radius (cm); the circumference is `2πR`.
    pub fn from_radius(
        self_coupling: f64,
        radius: f64,
        confinement: f64,
        intrinsic_absorption: f64,
        intrinsic_index: f64,
        wavelength: f64,
    ) -> Result<Self> {
        check(radius > 0.0 && radius.is_finite(), "radius", radius, "must be positive")?;
        Self::new(
            self_coupling,
            TAU * radius,
            confinement,
            intrinsic_absorption,
            intrinsic_index,
            wavelength,
        )
    }

    pub fn validate(&self) -> Result<()> {
        check(
            (0.0..=1.0).contains(&self.self_coupling),
            "self_coupling",
            self.self_coupling,
            "must lie in [0, 1]",
        )?;
        check(
            self.circumference > 0.0 && self.circumference.is_finite(),
            "circumference",
            self.circumference,
            "must be positive",
        )?;
        check(
            (0.0..=1.0).contains(&self.confinement),
            "confinement",
            self.confinement,
            "must lie in [0, 1]",
        )?;
        check(
            self.intrinsic_absorption >= 0.0 && self.intrinsic_absorption.is_finite(),
            "intrinsic_absorption",
            self.intrinsic_absorption,
            "must be non-negative",
        )?;
        check(
            self.intrinsic_index > 0.0 && self.intrinsic_index.is_finite(),
            "intrinsic_index",
            self.intrinsic_index,
            "must be positive",
        )?;
        check(
            self.wavelength > 0.0 && self.wavelength.is_finite(),
            "wavelength",
            self.wavelength,
            "must be positive",
        )?;
        check(self.phase_bias.is_finite(), "phase_bias", self.phase_bias, "must be finite")
    }

    pub fn with_self_coupling(mut self, r: f64) -> Self {
        self.self_coupling = r;
        self
    }

    pub fn with_phase_bias(mut self, bias: f64) -> Self {
        self.phase_bias = bias;
        self
    }

    /// Chooses the phase bias so that the round-trip phase seen by `analyte`
    /// equals `phase` modulo 2π. `phase = 0` puts the ring on resonance.
    pub fn tuned_to(mut self, analyte: &Analyte, phase: f64) -> Self {
        let optical = self.optical_phase(analyte);
        self.phase_bias = phase - optical.rem_euclid(TAU);
        self
    }

    fn optical_phase(&self, analyte: &Analyte) -> f64 {
        TAU * (self.intrinsic_index + self.confinement * analyte.index) * self.circumference
            / self.wavelength
    }
}

/// The analyte properties under estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Analyte {
    /// Absorption coefficient `α_A` in cm⁻¹.
    pub absorption: f64,
    /// Refractive index `n_A`.
    pub index: f64,
}

impl Analyte {
    pub fn new(absorption: f64, index: f64) -> Result<Self> {
        let analyte = Self { absorption, index };
        analyte.validate()?;
        Ok(analyte)
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.absorption >= 0.0 && self.absorption.is_finite(),
            "analyte absorption",
            self.absorption,
            "must be non-negative",
        )?;
        check(self.index.is_finite(), "analyte index", self.index, "must be finite")
    }
}

/// Which analyte property a derivative or information quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameter {
    /// `α_A`, in cm⁻¹.
    Absorption,
    /// `n_A`, dimensionless.
    RefractiveIndex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attenuation {
    /// Round-trip amplitude attenuation `a ∈ (0, 1]`.
    pub attenuation: f64,
    /// `α_T = α_I + Γ α_A` in cm⁻¹.
    pub total_absorption: f64,
}

/// Converts an intensity loss in dB/cm to an absorption coefficient in cm⁻¹.
pub fn db_per_cm_to_alpha(db_per_cm: f64) -> f64 {
    db_per_cm * std::f64::consts::LN_10 / 10.0
}

/// Beer–Lambert round-trip attenuation.
pub fn attenuation(ring: &RingParams, analyte: &Analyte) -> Attenuation {
    let total_absorption = ring.intrinsic_absorption + ring.confinement * analyte.absorption;
    Attenuation {
        attenuation: (-0.5 * total_absorption * ring.circumference).exp(),
        total_absorption,
    }
}

pub fn round_trip_phase(ring: &RingParams, analyte: &Analyte) -> f64 {
    ring.optical_phase(analyte) + ring.phase_bias
}

fn check_coupler(r: f64, a: f64, phi: f64) -> Result<()> {
    check((0.0..=1.0).contains(&r), "self_coupling", r, "must lie in [0, 1]")?;
    check(a > 0.0 && a <= 1.0, "attenuation", a, "must lie in (0, 1]")?;
    check(phi.is_finite(), "round_trip_phase", phi, "must be finite")
}

/// `|1 − r a e^{iφ}|²` and `|a − r e^{iφ}|²`, written to avoid cancellation
/// near resonance.
fn denominators(r: f64, a: f64, phi: f64) -> (f64, f64) {
    let s2 = (0.5 * phi).sin().powi(2);
    let den = (1.0 - r * a).powi(2) + 4.0 * r * a * s2;
    let num = (a - r).powi(2) + 4.0 * a * r * s2;
    (den, num)
}

fn resonance_denominator(r: f64, a: f64, phi: f64) -> Result<f64> {
    check_coupler(r, a, phi)?;
    let (den, _) = denominators(r, a, phi);
    if den > 0.0 {
        Ok(den)
    } else {
        Err(Error::Singular("lossless, fully reflecting ring on resonance (r = a = 1, φ = 2πm)"))
    }
}

/// Bus-waveguide intensity transmission `η_R`.
pub fn transmission(r: f64, a: f64, phi: f64) -> Result<f64> {
    let den = resonance_denominator(r, a, phi)?;
    let (_, num) = denominators(r, a, phi);
    clamp_unit(num / den)
}

fn clamp_unit(eta: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&eta) {
        Ok(eta)
    } else if eta > 1.0 && eta - 1.0 <= TRANSMISSION_CLAMP {
        Ok(1.0)
    } else if (-TRANSMISSION_CLAMP..0.0).contains(&eta) {
        Ok(0.0)
    } else {
        Err(Error::TransmissionOutOfRange(eta))
    }
}

/// Phase `θ_R` imparted on the bus mode. Not reduced modulo 2π.
pub fn phase_shift(r: f64, a: f64, phi: f64) -> Result<f64> {
    resonance_denominator(r, a, phi)?;
    let (s, c) = phi.sin_cos();
    let (y1, x1) = (r * s, a - r * c);
    if y1 == 0.0 && x1 == 0.0 {
        return Err(Error::Singular(
            "phase undefined at critical coupling on resonance (zero transmitted field)",
        ));
    }
    Ok(PI + phi + y1.atan2(x1) + (r * a * s).atan2(1.0 - r * a * c))
}

/// Ratio `B` of circulating to incident intensity.
pub fn buildup(r: f64, a: f64, phi: f64) -> Result<f64> {
    let den = resonance_denominator(r, a, phi)?;
    Ok((1.0 - r * r) * a * a / den)
}

/// Complex bus-field transmission `t`, with `|t|² = η_R` and `arg t ≡ θ_R`.
pub fn field_transmission(r: f64, a: f64, phi: f64) -> Result<Complex64> {
    resonance_denominator(r, a, phi)?;
    let e = Complex64::from_polar(1.0, phi);
    Ok((r - a * e) / (1.0 - r * a * e))
}

/// `∂t/∂a`; the phase derivative follows as `∂t/∂φ = i a ∂t/∂a`.
fn field_transmission_da(r: f64, a: f64, phi: f64) -> Complex64 {
    let e = Complex64::from_polar(1.0, phi);
    let q = 1.0 - r * a * e;
    -e * (1.0 - r * r) / (q * q)
}

/// Channel quantities at one operating point together with their first
/// derivatives with respect to `α_A` and `n_A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPoint {
    pub self_coupling: f64,
    pub attenuation: f64,
    pub round_trip_phase: f64,
    pub total_absorption: f64,
    pub confinement: f64,
    pub circumference: f64,
    pub wavelength: f64,
    pub eta: f64,
    pub theta: f64,
    pub buildup: f64,
    /// Complex field transmission `t = √η_R e^{iθ_R}`.
    pub amplitude: Complex64,
    pub d_amplitude_d_alpha: Complex64,
    pub d_amplitude_d_n: Complex64,
    pub d_eta_d_alpha: f64,
    pub d_theta_d_alpha: f64,
    pub d_eta_d_n: f64,
    pub d_theta_d_n: f64,
}

impl ChannelPoint {
    pub fn d_amplitude(&self, wrt: Parameter) -> Complex64 {
        match wrt {
            Parameter::Absorption => self.d_amplitude_d_alpha,
            Parameter::RefractiveIndex => self.d_amplitude_d_n,
        }
    }

    pub fn d_eta(&self, wrt: Parameter) -> f64 {
        match wrt {
            Parameter::Absorption => self.d_eta_d_alpha,
            Parameter::RefractiveIndex => self.d_eta_d_n,
        }
    }

    pub fn d_theta(&self, wrt: Parameter) -> f64 {
        match wrt {
            Parameter::Absorption => self.d_theta_d_alpha,
            Parameter::RefractiveIndex => self.d_theta_d_n,
        }
    }

    /// `η_R ∂θ_R`, finite everywhere including where the field vanishes.
    pub fn eta_d_theta(&self, wrt: Parameter) -> f64 {
        (self.amplitude.conj() * self.d_amplitude(wrt)).im
    }

    /// `(∂η_R)² / η_R = 4 (∂|t|)²`. Where `t = 0` this is the limit along the
    /// parameter direction, `4 |∂t|²`.
    pub fn loss_rate_sq(&self, wrt: Parameter) -> f64 {
        let dt = self.d_amplitude(wrt);
        let mag = self.amplitude.norm();
        if mag > 0.0 {
            let radial = (self.amplitude.conj() * dt).re / mag;
            4.0 * radial * radial
        } else {
            4.0 * dt.norm_sqr()
        }
    }

    /// `η_R + (1 − a²) B / a² − 1`, zero for a consistent point.
    pub fn energy_residual(&self) -> f64 {
        let a2 = self.attenuation * self.attenuation;
        self.eta + (1.0 - a2) * self.buildup / a2 - 1.0
    }
}

/// Evaluates the ring channel and its analyte derivatives.
pub fn channel_point(ring: &RingParams, analyte: &Analyte) -> Result<ChannelPoint> {
    ring.validate()?;
    analyte.validate()?;
    let r = ring.self_coupling;
    let Attenuation {
        attenuation: a,
        total_absorption,
    } = attenuation(ring, analyte);
    let phi = round_trip_phase(ring, analyte);

    let mut eta = transmission(r, a, phi)?;
    let buildup = buildup(r, a, phi)?;
    let mut amplitude = field_transmission(r, a, phi)?;
    let dt_da = field_transmission_da(r, a, phi);
    // A field smaller than what rounding of φ and a alone can produce is zero.
    let floor = 8.0 * f64::EPSILON * dt_da.norm() * (a * phi.abs().max(1.0) + 1.0);
    if amplitude.norm() <= floor {
        amplitude = Complex64::new(0.0, 0.0);
        eta = 0.0;
    }
    let theta = match phase_shift(r, a, phi) {
        Ok(theta) => theta,
        // The transmitted field vanishes; keep the remaining, well-defined term.
        Err(Error::Singular(_)) => {
            let (s, c) = phi.sin_cos();
            PI + phi + (r * a * s).atan2(1.0 - r * a * c)
        }
        Err(e) => return Err(e),
    };

    let da_dalpha = -0.5 * ring.confinement * ring.circumference * a;
    let dphi_dn = TAU * ring.confinement * ring.circumference / ring.wavelength;
    let d_amplitude_d_alpha = dt_da * da_dalpha;
    let d_amplitude_d_n = Complex64::i() * a * dt_da * dphi_dn;

    let polar = |dt: Complex64| {
        let w = amplitude.conj() * dt;
        let mag2 = amplitude.norm_sqr();
        let d_theta = if mag2 > 0.0 { w.im / mag2 } else { 0.0 };
        (2.0 * w.re, d_theta)
    };
    let (d_eta_d_alpha, d_theta_d_alpha) = polar(d_amplitude_d_alpha);
    let (d_eta_d_n, d_theta_d_n) = polar(d_amplitude_d_n);

    Ok(ChannelPoint {
        self_coupling: r,
        attenuation: a,
        round_trip_phase: phi,
        total_absorption,
        confinement: ring.confinement,
        circumference: ring.circumference,
        wavelength: ring.wavelength,
        eta,
        theta,
        buildup,
        amplitude,
        d_amplitude_d_alpha,
        d_amplitude_d_n,
        d_eta_d_alpha,
        d_theta_d_alpha,
        d_eta_d_n,
        d_theta_d_n,
    })
}

/// Phase settings of a Mach–Zehnder coupler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziCoupler {
    pub phi1: f64,
    pub phi2: f64,
}

/// Effective complex self-coupling `ρ` realised by an MZI coupler.
pub fn mzi_coupling(coupler: &MziCoupler) -> Complex64 {
    let sum = 0.5 * (coupler.phi1 + coupler.phi2);
    let diff = 0.5 * (coupler.phi1 - coupler.phi2);
    Complex64::i() * Complex64::from_polar(1.0, sum) * diff.cos()
}
