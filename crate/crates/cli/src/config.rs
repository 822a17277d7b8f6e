//! Scenario files.
//!
//! A scenario is a flat list of `key = value` lines. Units are part of the
//! key name, so `radius_um = 50` and `circumference_cm = 0.0314` are both
//! accepted but not together. Unknown keys are rejected.
//!
//! | key | meaning |
//! |-----|---------|
//! | `self_coupling` | `r` as a number, or `"critical"` for `r = a` at the analyte |
//! | `mzi_phi1_rad`, `mzi_phi2_rad` | coupler phases, instead of `self_coupling` |
//! | `circumference_cm` or `radius_um` | ring size |
//! | `confinement` | Γ |
//! | `alpha_I_per_cm` or `alpha_I_dB_per_cm` | intrinsic loss |
//! | `intrinsic_index` | n_I |
//! | `wavelength_nm`, `wavelength_um` or `wavelength_cm` | λ |
//! | `detuning_rad` | round-trip phase away from resonance at the analyte, default 0 |
//! | `alpha_A_per_cm`, `n_A` | analyte; `n_A` defaults to 0 |
//! | `beta_sq`, `squeezing`, `squeeze_phase_rad`, `rotation_rad` | probe; defaults 1, 0, 0, 0 |
//! | `sweep_variable`, `sweep_start`, `sweep_stop`, `sweep_steps` | `r`, `phi` or `alpha_A` grid |
//! | `compare_alpha_start_per_cm`, `compare_alpha_stop_per_cm`, `compare_steps`, `compare_optimize_r` | ring vs single pass |
//! | `mc_trials`, `mc_repetitions`, `mc_r_over_a` | Monte Carlo; `mc_r_over_a` re-couples the ring to `r = x·a` |
//! | `design_target_std_per_cm`, `design_trials` | photon budget for a target precision |
//! | `optimize_photon_budget`, `optimize_a_max`, `optimize_tolerance`, `optimize_max_restarts` | QFI search |
//! | `seed` | Monte Carlo seed |
//! | `output` | output path |

use std::path::Path;
use std::str::FromStr;

use ringqfi_core::estimator::Sampling;
use ringqfi_core::resonator::{attenuation, db_per_cm_to_alpha, mzi_coupling};
use ringqfi_core::{Analyte, McSetup, MziCoupler, ProbeSpec, RingParams, SearchSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coupling {
    Value(f64),
    Keyword(CouplingKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKeyword {
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "r")]
    SelfCoupling,
    #[serde(rename = "phi")]
    Phase,
    #[serde(rename = "alpha_A")]
    Absorption,
}

impl SweepVariable {
    pub fn column(&self) -> &'static str {
        match self {
            Self::SelfCoupling => "r",
            Self::Phase => "phi_rad",
            Self::Absorption => "alpha_A_per_cm",
        }
    }
}

/// The scenario file, field for field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub self_coupling: Option<Coupling>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mzi_phi1_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mzi_phi2_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circumference_cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confinement: Option<f64>,
    #[serde(rename = "alpha_I_per_cm", skip_serializing_if = "Option::is_none")]
    pub alpha_i_per_cm: Option<f64>,
    #[serde(rename = "alpha_I_dB_per_cm", skip_serializing_if = "Option::is_none")]
    pub alpha_i_db_per_cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intrinsic_index: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_rad: Option<f64>,

    #[serde(rename = "alpha_A_per_cm", skip_serializing_if = "Option::is_none")]
    pub alpha_a_per_cm: Option<f64>,
    #[serde(rename = "n_A", skip_serializing_if = "Option::is_none")]
    pub n_a: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squeezing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squeeze_phase_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation_rad: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_variable: Option<SweepVariable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_steps: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_alpha_start_per_cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_alpha_stop_per_cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_optimize_r: Option<bool>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_trials: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_repetitions: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_r_over_a: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub design_target_std_per_cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub design_trials: Option<u32>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize_photon_budget: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize_a_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize_max_restarts: Option<u32>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl FromStr for Config {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        toml::from_str(s).map_err(|e| CliError::Config(e.message().to_string()))
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Ring and analyte with units resolved and the coupling applied.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let circumference = match (self.circumference_cm, self.radius_um) {
            (Some(l), None) => l,
            (None, Some(r)) => 2.0 * std::f64::consts::PI * r * 1e-4,
            _ => return Err(exactly_one("circumference_cm", "radius_um")),
        };
        let alpha_i = match (self.alpha_i_per_cm, self.alpha_i_db_per_cm) {
            (Some(a), None) => a,
            (None, Some(db)) => db_per_cm_to_alpha(db),
            _ => return Err(exactly_one("alpha_I_per_cm", "alpha_I_dB_per_cm")),
        };
        let wavelength = match (self.wavelength_nm, self.wavelength_um, self.wavelength_cm) {
            (Some(nm), None, None) => nm * 1e-7,
            (None, Some(um), None) => um * 1e-4,
            (None, None, Some(cm)) => cm,
            _ => {
                return Err(CliError::Config(
                    "exactly one of wavelength_nm, wavelength_um, wavelength_cm is required".into(),
                ))
            }
        };
        let confinement = required(self.confinement, "confinement")?;
        let intrinsic_index = required(self.intrinsic_index, "intrinsic_index")?;
        let analyte = Analyte::new(required(self.alpha_a_per_cm, "alpha_A_per_cm")?, self.n_a.unwrap_or(0.0))
            .map_err(field("alpha_A_per_cm"))?;

        let placeholder = 0.5;
        let ring = RingParams::new(placeholder, circumference, confinement, alpha_i, intrinsic_index, wavelength)
            .map_err(field("ring"))?;
        let r = match (self.self_coupling, self.mzi_phi1_rad, self.mzi_phi2_rad) {
            (Some(Coupling::Value(r)), None, None) => r,
            (Some(Coupling::Keyword(CouplingKeyword::Critical)), None, None) => {
                attenuation(&ring, &analyte).attenuation
            }
            (None, Some(phi1), Some(phi2)) => mzi_coupling(&MziCoupler { phi1, phi2 }).norm(),
            _ => {
                return Err(CliError::Config(
                    "give either self_coupling or both mzi_phi1_rad and mzi_phi2_rad".into(),
                ))
            }
        };
        let detuning = self.detuning_rad.unwrap_or(0.0);
        let ring = ring.with_self_coupling(r).tuned_to(&analyte, detuning);
        ring.validate().map_err(field("self_coupling"))?;

        let beta_sq = self.beta_sq.unwrap_or(1.0);
        if !(beta_sq >= 0.0 && beta_sq.is_finite()) {
            return Err(CliError::Config(format!("beta_sq: must be non-negative, got {beta_sq}")));
        }
        let probe = ProbeSpec::new(
            beta_sq.sqrt(),
            self.squeezing.unwrap_or(0.0),
            self.squeeze_phase_rad.unwrap_or(0.0),
            self.rotation_rad.unwrap_or(0.0),
        )
        .map_err(field("probe"))?;
        if ringqfi_core::gaussian::mean_photons(&probe) <= 0.0 {
            return Err(CliError::Config("probe: beta_sq and squeezing carry no photons".into()));
        }
        Ok(Scenario {
            ring,
            analyte,
            probe,
            detuning,
        })
    }

    pub fn sweep(&self) -> Result<SweepSpec, CliError> {
        let spec = SweepSpec {
            variable: required(self.sweep_variable, "sweep_variable")?,
            start: required(self.sweep_start, "sweep_start")?,
            stop: required(self.sweep_stop, "sweep_stop")?,
            steps: required(self.sweep_steps, "sweep_steps")?,
        };
        if spec.steps < 2 {
            return Err(CliError::Config(format!("sweep_steps: must be at least 2, got {}", spec.steps)));
        }
        Ok(spec)
    }

    pub fn compare(&self) -> Result<(Vec<f64>, bool), CliError> {
        let start = required(self.compare_alpha_start_per_cm, "compare_alpha_start_per_cm")?;
        let stop = required(self.compare_alpha_stop_per_cm, "compare_alpha_stop_per_cm")?;
        let steps = required(self.compare_steps, "compare_steps")?;
        if steps < 1 {
            return Err(CliError::Config("compare_steps: must be at least 1".into()));
        }
        if !(start > 0.0 && stop >= start) {
            return Err(CliError::Config(format!(
                "compare_alpha_start_per_cm: need 0 < start <= stop, got {start} and {stop}"
            )));
        }
        Ok((grid(start, stop, steps), self.compare_optimize_r.unwrap_or(false)))
    }

    pub fn mc(&self, scenario: &Scenario, seed: Option<u64>) -> Result<McSetup, CliError> {
        let mut ring = scenario.ring;
        if let Some(x) = self.mc_r_over_a {
            let a = attenuation(&ring, &scenario.analyte).attenuation;
            ring = ring.with_self_coupling(x * a).tuned_to(&scenario.analyte, scenario.detuning);
            ring.validate().map_err(field("mc_r_over_a"))?;
        }
        Ok(McSetup {
            beta_sq: self.beta_sq.unwrap_or(1.0),
            ring,
            analyte_true: scenario.analyte,
            trials: required(self.mc_trials, "mc_trials")?,
            repetitions: required(self.mc_repetitions, "mc_repetitions")?,
            seed: seed.or(self.seed).unwrap_or(0),
            sampling: Sampling::Poisson,
        })
    }

    pub fn search(&self, scenario: &Scenario) -> SearchSpec {
        let budget = self
            .optimize_photon_budget
            .unwrap_or_else(|| ringqfi_core::gaussian::mean_photons(&scenario.probe));
        let mut spec = SearchSpec::new(budget);
        if let Some(a_max) = self.optimize_a_max {
            spec.a_max = a_max;
        }
        if let Some(tol) = self.optimize_tolerance {
            spec.tolerance = tol;
        }
        if let Some(n) = self.optimize_max_restarts {
            spec.max_restarts = n;
        }
        spec
    }
}

/// Resolved physical inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub ring: RingParams,
    pub analyte: Analyte,
    pub probe: ProbeSpec,
    pub detuning: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        grid(self.start, self.stop, self.steps)
    }
}

fn grid(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![start];
    }
    (0..steps)
        .map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64)
        .collect()
}

fn required<T>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing key {key}")))
}

fn exactly_one(a: &str, b: &str) -> CliError {
    CliError::Config(format!("exactly one of {a} and {b} is required"))
}

fn field(key: &'static str) -> impl Fn(ringqfi_core::Error) -> CliError {
    move |e| CliError::Config(format!("{key}: {e}"))
}
