//! Intensity measurement on the bus waveguide: variance by error propagation
//! and a Monte Carlo check that it reaches the quantum Cramér–Rao bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{check, Error, Result};
use crate::qfi::qfi_coherent;
use crate::resonator::{attenuation, channel_point, round_trip_phase, transmission, Analyte, Parameter, RingParams};
use crate::roots::bisect;

/// Output photon-number variance after loss `η`,
/// `η² Var_in + η(1 − η) n_in`.
pub fn intensity_variance(n_in: f64, var_in: f64, eta: f64) -> Result<f64> {
    check((0.0..=1.0).contains(&eta), "eta", eta, "must lie in [0, 1]")?;
    Ok(eta * eta * var_in + eta * (1.0 - eta) * n_in)
}

/// Variance of `α_A` from the mean bus count of a coherent probe,
/// `⟨Δ²n̂⟩ / |∂⟨n̂⟩/∂α_A|²`.
///
/// For a coherent probe this is `1/(|β|² η′²/η)`, which stays finite where
/// no light is transmitted. At critical coupling on resonance it reduces to
/// `(1 − a²)² / (|β|² Γ² L² a²)`.
pub fn error_propagation_variance(beta_sq: f64, ring: &RingParams, analyte: &Analyte) -> Result<f64> {
    check(beta_sq > 0.0, "beta_sq", beta_sq, "must be positive")?;
    let cp = channel_point(ring, analyte)?;
    let rate = cp.loss_rate_sq(Parameter::Absorption);
    let scale = (cp.circumference * cp.confinement).powi(2);
    if rate.is_nan() || rate <= 1e-24 * scale {
        return Err(Error::NonIdentifiable);
    }
    Ok(1.0 / (beta_sq * rate))
}

/// How the counts of each trial are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Poisson counts, as for a coherent probe and an ideal detector.
    #[default]
    Poisson,
    /// The expected count, without shot noise.
    Mean,
}

/// A repeated intensity-measurement experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSetup {
    pub beta_sq: f64,
    pub ring: RingParams,
    pub analyte_true: Analyte,
    /// Trials `ν` averaged into one estimate.
    pub trials: u32,
    /// Independent estimates whose spread is measured.
    pub repetitions: u32,
    pub seed: u64,
    pub sampling: Sampling,
}

impl McSetup {
    pub fn validate(&self) -> Result<()> {
        check(self.beta_sq > 0.0, "beta_sq", self.beta_sq, "must be positive")?;
        check(self.trials >= 1, "trials", self.trials as f64, "must be at least 1")?;
        check(self.repetitions >= 1, "repetitions", self.repetitions as f64, "must be at least 1")?;
        self.ring.validate()?;
        self.analyte_true.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    /// Unbiased sample variance of the estimates.
    pub empirical_variance: f64,
    /// Error-propagation variance divided by `ν`.
    pub predicted_variance: f64,
    /// `1/(ν Q_C)`.
    pub qcrb_variance: f64,
    /// Standard error of `empirical_variance`.
    pub sampling_error: f64,
    pub bias: f64,
    /// Repetitions whose mean count fell outside the inversion bracket.
    /// They are left out of the statistics.
    pub failures: u32,
}

/// Half-width of the inversion bracket in predicted standard deviations.
const BRACKET_SIGMAS: f64 = 12.0;
const MONOTONE_GRID: usize = 64;

/// Simulates the experiment and compares the spread of the estimates with
/// the predicted and bound variances.
///
/// Each repetition averages `ν` counts and inverts `η_R(α) |β|² = mean` by
/// bisection on a bracket around the true value. Repetition `i` draws from
/// its own stream `i` of a generator seeded with `seed`, so the result does
/// not depend on the thread count.
pub fn mc_simulate(setup: &McSetup) -> Result<McReport> {
    setup.validate()?;
    let McSetup {
        beta_sq,
        ring,
        analyte_true,
        trials,
        repetitions,
        seed,
        sampling,
    } = *setup;
    let nu = trials as f64;
    let alpha_true = analyte_true.absorption;
    let r = ring.self_coupling;
    let phi = round_trip_phase(&ring, &analyte_true);
    let mean_count = |alpha: f64| -> Result<f64> {
        let a = attenuation(&ring, &Analyte { absorption: alpha, ..analyte_true }).attenuation;
        Ok(transmission(r, a, phi)? * beta_sq)
    };

    let predicted = error_propagation_variance(beta_sq, &ring, &analyte_true)? / nu;
    let qcrb = 1.0 / (nu * qfi_coherent(beta_sq, &ring, &analyte_true)?.total);

    let half = BRACKET_SIGMAS * predicted.sqrt();
    let (lo, hi) = ((alpha_true - half).max(0.0), alpha_true + half);
    let grid = (0..=MONOTONE_GRID)
        .map(|i| mean_count(lo + (hi - lo) * i as f64 / MONOTONE_GRID as f64))
        .collect::<Result<Vec<_>>>()?;
    let rising = grid[MONOTONE_GRID] > grid[0];
    if !grid.windows(2).all(|w| (w[1] > w[0]) == rising && w[1] != w[0]) {
        return Err(Error::NonMonotone { lo, hi });
    }

    let expected = mean_count(alpha_true)?;
    let poisson = match sampling {
        Sampling::Poisson if expected > 0.0 => Some(
            Poisson::new(expected).map_err(|_| Error::Precondition(format!("invalid Poisson mean {expected}")))?,
        ),
        _ => None,
    };

    let estimates = (0..repetitions)
        .into_par_iter()
        .map(|i| {
            let mean = match &poisson {
                Some(dist) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    (0..trials).map(|_| dist.sample(&mut rng)).sum::<f64>() / nu
                }
                None => expected,
            };
            let f = |alpha: f64| mean_count(alpha).map_or(f64::NAN, |m| m - mean);
            bisect(f, lo, hi, 1e-15 * hi).ok()
        })
        .collect::<Vec<Option<f64>>>();
    let failures = estimates.iter().filter(|e| e.is_none()).count() as u32;
    let estimates: Vec<f64> = estimates.into_iter().flatten().collect();
    if estimates.is_empty() {
        return Err(Error::NoBracket { lo, hi });
    }

    let n = estimates.len() as f64;
    let avg = estimates.iter().sum::<f64>() / n;
    let (m2, m4) = estimates.iter().fold((0.0, 0.0), |(m2, m4), x| {
        let d2 = (x - avg) * (x - avg);
        (m2 + d2 / n, m4 + d2 * d2 / n)
    });
    let (empirical_variance, sampling_error) = if estimates.len() > 1 {
        let s2 = m2 * n / (n - 1.0);
        let se = ((m4 - (n - 3.0) / (n - 1.0) * s2 * s2) / n).max(0.0).sqrt();
        (s2, se)
    } else {
        (0.0, 0.0)
    };
    Ok(McReport {
        empirical_variance,
        predicted_variance: predicted,
        qcrb_variance: qcrb,
        sampling_error,
        bias: avg - alpha_true,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfi::critical_qfi_per_photon;
    use crate::resonator::db_per_cm_to_alpha;
    use approx::assert_relative_eq;

    fn case_study(r_over_a: f64) -> (RingParams, Analyte) {
        let analyte = Analyte::new(10.0, 0.0).unwrap();
        let ring = RingParams::from_radius(0.9, 50e-4, 0.43, db_per_cm_to_alpha(2.0), 2.4, 1.5e-4)
            .unwrap()
            .tuned_to(&analyte, 0.0);
        let a = attenuation(&ring, &analyte).attenuation;
        (ring.with_self_coupling(r_over_a * a), analyte)
    }

    fn setup(beta_sq: f64, trials: u32, repetitions: u32, seed: u64) -> McSetup {
        let (ring, analyte_true) = case_study(0.98);
        McSetup {
            beta_sq,
            ring,
            analyte_true,
            trials,
            repetitions,
            seed,
            sampling: Sampling::Poisson,
        }
    }

    #[test]
    fn intensity_variance_examples() {
        assert_eq!(intensity_variance(5.0, 3.0, 1.0).unwrap(), 3.0);
        assert_eq!(intensity_variance(5.0, 3.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(intensity_variance(7.0, 7.0, 0.3).unwrap(), 0.3 * 7.0, max_relative = 1e-15);
        assert!(intensity_variance(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn saturates_bound_at_critical_point() {
        let (ring, analyte) = case_study(1.0);
        let var = error_propagation_variance(1.0, &ring, &analyte).unwrap();
        let q = qfi_coherent(1.0, &ring, &analyte).unwrap().total;
        assert_relative_eq!(var * q, 1.0, max_relative = 1e-10);
        let a = ring.self_coupling;
        let (l, g) = (ring.circumference, ring.confinement);
        assert_relative_eq!(var, (1.0 - a * a).powi(2) / (g * g * l * l * a * a), max_relative = 1e-10);
        assert_relative_eq!(var, 1.0 / critical_qfi_per_photon(&ring, &analyte).unwrap(), max_relative = 1e-10);
    }

    #[test]
    fn decoupled_analyte_is_not_identifiable() {
        let (ring, analyte) = case_study(0.98);
        let ring = RingParams { confinement: 0.0, ..ring };
        assert_eq!(error_propagation_variance(1.0, &ring, &analyte), Err(Error::NonIdentifiable));
    }

    #[test]
    fn matches_finite_difference_of_transmission() {
        // r = 0.8, a = 0.9, φ = 0.1
        let (l, gamma, alpha) = (0.031416, 0.43, 3.0);
        let alpha_i = -2.0 * 0.9f64.ln() / l - gamma * alpha;
        let analyte = Analyte::new(alpha, 0.0).unwrap();
        let ring = RingParams::new(0.8, l, gamma, alpha_i, 1e-6, 1.5e-4).unwrap().tuned_to(&analyte, 0.1);
        let beta_sq = 1e4;
        let var = error_propagation_variance(beta_sq, &ring, &analyte).unwrap();
        let eta = |x: f64| channel_point(&ring, &Analyte::new(x, 0.0).unwrap()).unwrap().eta;
        let h = 1e-6;
        let d = (eta(alpha + h) - eta(alpha - h)) / (2.0 * h);
        let fd = eta(alpha) * beta_sq / (d * d * beta_sq * beta_sq);
        assert_relative_eq!(var, fd, max_relative = 1e-6);
    }

    #[test]
    fn never_beats_bound() {
        let (ring, analyte) = case_study(1.0);
        for r in [0.5, 0.8, 0.9, 0.95, 0.99] {
            for phi in [0.0, 0.01, 0.1, 1.0, -2.0] {
                let ring = ring.with_self_coupling(r).tuned_to(&analyte, phi);
                let var = error_propagation_variance(2.0, &ring, &analyte).unwrap();
                let q = qfi_coherent(2.0, &ring, &analyte).unwrap().total;
                assert!(var * q >= 1.0 - 1e-10);
                if phi == 0.0 {
                    assert_relative_eq!(var * q, 1.0, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn mean_sampling_has_no_bias() {
        let mut s = setup(1e4, 10, 20, 1);
        s.sampling = Sampling::Mean;
        let report = mc_simulate(&s).unwrap();
        assert!(report.bias.abs() < 1e-10);
        assert!(report.empirical_variance < 1e-20);
    }

    #[test]
    fn empirical_variance_matches_prediction() {
        let report = mc_simulate(&setup(1e6, 100, 4000, 7)).unwrap();
        let gap = (report.empirical_variance - report.predicted_variance).abs();
        assert!(gap <= 3.0 * report.sampling_error, "{report:?}");
        assert!(report.predicted_variance >= report.qcrb_variance);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = mc_simulate(&setup(1e4, 5, 300, 11)).unwrap();
        let b = mc_simulate(&setup(1e4, 5, 300, 11)).unwrap();
        assert_eq!(a, b);
        let c = mc_simulate(&setup(1e4, 5, 300, 12)).unwrap();
        assert_ne!(a.empirical_variance, c.empirical_variance);
        let joint = (a.sampling_error.powi(2) + c.sampling_error.powi(2)).sqrt();
        assert!((a.empirical_variance - c.empirical_variance).abs() <= 4.0 * joint);
    }

    #[test]
    fn rejects_invalid_setup() {
        let mut s = setup(1e4, 5, 10, 0);
        s.trials = 0;
        assert!(mc_simulate(&s).is_err());
        let mut s = setup(1e4, 5, 10, 0);
        s.beta_sq = 0.0;
        assert!(mc_simulate(&s).is_err());
    }

    #[test]
    fn rejects_non_monotone_bracket() {
        // At critical coupling η_R has a minimum at the true value.
        let (ring, analyte_true) = case_study(1.0);
        let s = McSetup {
            beta_sq: 1e2,
            ring,
            analyte_true,
            trials: 1,
            repetitions: 10,
            seed: 0,
            sampling: Sampling::Poisson,
        };
        assert!(matches!(mc_simulate(&s), Err(Error::NonMonotone { .. })));
    }
}
