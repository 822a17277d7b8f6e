//! Single-pass and multi-pass reference strategies and the breakeven between
//! them and a critically coupled ring.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{check, Error, Result};
use crate::qfi::{critical_qfi_per_photon, qfi_coherent};
use crate::resonator::{attenuation, Analyte, RingParams};
use crate::roots::{bisect, first_upcrossing};

/// Constant in the rounded breakeven inequality, `2√(x*²/(e^{x*} − 1))`
/// rounded to three figures.
pub const BREAKEVEN_CONSTANT: f64 = 1.61;

/// Probe used by a single- or multi-pass strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Fock state with `N₀` photons.
    Fock,
    /// Coherent state with `|β|²` mean photons.
    Coherent,
}

/// A single-pass measurement through a length of analyte.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePassSetup {
    pub analyte_length: f64,
    pub photons: f64,
}

impl SinglePassSetup {
    pub fn new(analyte_length: f64, photons: f64) -> Result<Self> {
        check(analyte_length > 0.0, "analyte_length", analyte_length, "must be positive")?;
        check(photons > 0.0, "photons", photons, "must be positive")?;
        Ok(Self { analyte_length, photons })
    }

    /// Transmission `e^{−α_A L}`.
    pub fn transmission(&self, alpha_a: f64) -> f64 {
        (-alpha_a * self.analyte_length).exp()
    }

    pub fn qfi(&self, strategy: Strategy, alpha_a: f64) -> Result<f64> {
        match strategy {
            Strategy::Fock => sp_fock_qfi(self.photons, alpha_a, self.analyte_length),
            Strategy::Coherent => sp_coherent_qfi(self.photons, alpha_a, self.analyte_length),
        }
    }
}

/// Ring against single-pass strategies at one absorption value. Standard
/// deviations are single-shot, per mean input photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub alpha_a: f64,
    pub ring_std_per_photon: f64,
    /// Ring re-coupled to `r = a(α_A)`, when requested.
    pub ring_optimal_std_per_photon: Option<f64>,
    pub ring_optimal_r: Option<f64>,
    pub sp_fock_std_per_photon: f64,
    pub sp_coherent_std_per_photon: f64,
}

fn check_length(l: f64) -> Result<()> {
    check(l > 0.0 && l.is_finite(), "analyte_length", l, "must be positive and finite")
}

/// `N₀ L² / (e^{α_A L} − 1)`.
pub fn sp_fock_qfi(n0: f64, alpha_a: f64, l: f64) -> Result<f64> {
    check(n0 >= 0.0, "photons", n0, "must be non-negative")?;
    check_length(l)?;
    if alpha_a <= 0.0 {
        return Err(Error::Divergent("Fock probe through a non-absorbing analyte"));
    }
    Ok(n0 * l * l / (alpha_a * l).exp_m1())
}

/// `|β|² L² e^{−α_A L}`.
pub fn sp_coherent_qfi(beta_sq: f64, alpha_a: f64, l: f64) -> Result<f64> {
    check(beta_sq >= 0.0, "beta_sq", beta_sq, "must be non-negative")?;
    check(alpha_a >= 0.0, "alpha_a", alpha_a, "must be non-negative")?;
    check_length(l)?;
    Ok(beta_sq * l * l * (-alpha_a * l).exp())
}

/// The non-trivial root `x*` of `2(e^x − 1) = x e^x`.
pub fn fock_optimal_constant() -> f64 {
    static X: OnceLock<f64> = OnceLock::new();
    *X.get_or_init(|| {
        bisect(|x| 2.0 * x.exp_m1() - x * x.exp(), 0.5, 10.0, 1e-15).expect("bracket holds by construction")
    })
}

/// `x*/α_A`.
pub fn sp_fock_optimal_length(alpha_a: f64) -> Result<f64> {
    check(alpha_a > 0.0, "alpha_a", alpha_a, "must be positive")?;
    Ok(fock_optimal_constant() / alpha_a)
}

/// `2/α_A`.
pub fn sp_coherent_optimal_length(alpha_a: f64) -> Result<f64> {
    check(alpha_a > 0.0, "alpha_a", alpha_a, "must be positive")?;
    Ok(2.0 / alpha_a)
}

/// Per-photon QFI of the best single pass with the given probe.
pub fn sp_optimal_per_photon(strategy: Strategy, alpha_a: f64) -> Result<f64> {
    match strategy {
        Strategy::Fock => sp_fock_qfi(1.0, alpha_a, sp_fock_optimal_length(alpha_a)?),
        Strategy::Coherent => sp_coherent_qfi(1.0, alpha_a, sp_coherent_optimal_length(alpha_a)?),
    }
}

/// `k` passes through a sample of length `L₀`, equivalent to one pass
/// through `k L₀`.
pub fn multipass_qfi(k: u32, l0: f64, strategy: Strategy, photons: f64, alpha_a: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "passes",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let l = k as f64 * l0;
    match strategy {
        Strategy::Fock => sp_fock_qfi(photons, alpha_a, l),
        Strategy::Coherent => sp_coherent_qfi(photons, alpha_a, l),
    }
}

/// `csch⁻¹(y) = ln(1/y + √(1/y² + 1))`.
fn acsch(y: f64) -> f64 {
    (1.0 / y).asinh()
}

/// The absorption where the critically coupled ring starts to beat the
/// optimal Fock single pass, from
/// `α_I L = 2 csch⁻¹(1.61 / (L Γ α_A)) − Γ α_A L`.
///
/// The right-hand side rises from zero, peaks and then falls, so the
/// inequality holds on an interval. The lower end is returned. Without
/// intrinsic loss the ring wins for every `α_A > 0` and the result is `0`.
pub fn ring_breakeven_alpha(ring: &RingParams) -> Result<f64> {
    ring.validate()?;
    check(ring.confinement > 0.0, "confinement", ring.confinement, "must be positive")?;
    let (l, gamma, alpha_i) = (ring.circumference, ring.confinement, ring.intrinsic_absorption);
    if alpha_i == 0.0 {
        return Ok(0.0);
    }
    let margin = |alpha: f64| {
        if alpha <= 0.0 {
            return -alpha_i * l;
        }
        2.0 * acsch(BREAKEVEN_CONSTANT / (l * gamma * alpha)) - gamma * alpha * l - alpha_i * l
    };
    let c = 2.0 / BREAKEVEN_CONSTANT;
    let peak = BREAKEVEN_CONSTANT * (c * c - 1.0).sqrt() / (l * gamma);
    if margin(peak) <= 0.0 {
        return Err(Error::NoBracket { lo: 0.0, hi: peak });
    }
    bisect(margin, 0.0, peak, 1e-12 * peak)
}

/// Per-photon QFI of the ring re-coupled to `r = a(α_A)` on resonance.
pub fn ring_critical_per_photon(ring: &RingParams, alpha_a: f64) -> Result<f64> {
    critical_qfi_per_photon(ring, &Analyte::new(alpha_a, 0.0)?)
}

/// Exact crossover of the critically coupled ring and the optimal Fock
/// single pass, without the rounded constant. The lower crossing is returned.
pub fn exact_breakeven_alpha(ring: &RingParams) -> Result<f64> {
    ring.validate()?;
    check(ring.confinement > 0.0, "confinement", ring.confinement, "must be positive")?;
    if ring.intrinsic_absorption == 0.0 {
        return Ok(0.0);
    }
    let (l, gamma) = (ring.circumference, ring.confinement);
    let hi = 10.0 / (l * gamma);
    let lo = hi * 1e-9;
    let diff = |alpha: f64| match (
        ring_critical_per_photon(ring, alpha),
        sp_optimal_per_photon(Strategy::Fock, alpha),
    ) {
        (Ok(q_ring), Ok(q_sp)) => q_ring / q_sp - 1.0,
        _ => f64::NAN,
    };
    first_upcrossing(diff, lo, hi, 2000, 1e-12 * hi)
}

/// Ring and single-pass precision across absorption values, in input order.
pub fn compare_ring_vs_sp(ring: &RingParams, alphas: &[f64], optimize_r: bool) -> Result<Vec<ComparisonRow>> {
    if alphas.is_empty() {
        return Err(Error::Precondition("empty absorption range".into()));
    }
    ring.validate()?;
    alphas
        .par_iter()
        .map(|&alpha_a| {
            let analyte = Analyte::new(alpha_a, 0.0)?;
            let fixed = qfi_coherent(1.0, ring, &analyte)?;
            let (ring_optimal_std_per_photon, ring_optimal_r) = if optimize_r {
                let a = attenuation(ring, &analyte).attenuation;
                let q = qfi_coherent(1.0, &ring.with_self_coupling(a), &analyte)?;
                (Some(q.std_per_photon()), Some(a))
            } else {
                (None, None)
            };
            Ok(ComparisonRow {
                alpha_a,
                ring_std_per_photon: fixed.std_per_photon(),
                ring_optimal_std_per_photon,
                ring_optimal_r,
                sp_fock_std_per_photon: sp_optimal_per_photon(Strategy::Fock, alpha_a)?.sqrt().recip(),
                sp_coherent_std_per_photon: sp_optimal_per_photon(Strategy::Coherent, alpha_a)?.sqrt().recip(),
            })
        })
        .collect()
}
