use rayon::prelude::*;
use ringqfi_core::optimizer::{critical_coupling_r, maximize_qfi, mzi_phases_for_coupling};
use ringqfi_core::qfi::{critical_qfi_per_photon, qfi_gaussian_general, qfi_upper_bound_ring};
use ringqfi_core::resonator::channel_point;
use ringqfi_core::strategies::{compare_ring_vs_sp, exact_breakeven_alpha, ring_breakeven_alpha, BREAKEVEN_CONSTANT};
use ringqfi_core::{estimator, Analyte, Complex64, Error, Parameter};

use crate::config::{Config, Scenario, SweepVariable};
use crate::output::{Cell, Table};
use crate::CliError;

/// Largest tolerated `η_R + (1 − a²)B/a² − 1` on an emitted row.
pub const ENERGY_TOLERANCE: f64 = 1e-12;

/// A finished command. `failure` carries a numerical problem found after the
/// table was built, such as a search that did not converge.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    pub failure: Option<String>,
}

impl From<Table> for Report {
    fn from(table: Table) -> Self {
        Self { table, failure: None }
    }
}

fn numerical(e: Error) -> CliError {
    CliError::Numerical(e.to_string())
}

pub fn sweep(config: &Config) -> Result<Report, CliError> {
    let scenario = config.scenario()?;
    let spec = config.sweep()?;
    let Scenario {
        ring,
        analyte,
        probe,
        detuning,
    } = scenario;

    let rows = spec
        .values()
        .par_iter()
        .map(|&v| {
            let (ring, analyte) = match spec.variable {
                SweepVariable::SelfCoupling => (ring.with_self_coupling(v), analyte),
                SweepVariable::Phase => (ring.tuned_to(&analyte, v), analyte),
                SweepVariable::Absorption => {
                    let analyte = Analyte::new(v, analyte.index)
                        .map_err(|e| CliError::Config(format!("sweep_start: {e}")))?;
                    (ring.tuned_to(&analyte, detuning), analyte)
                }
            };
            if let Err(e) = ring.validate() {
                return Err(CliError::Config(format!("sweep_start: {e}")));
            }
            let ch = match channel_point(&ring, &analyte) {
                Ok(ch) => ch,
                Err(Error::Singular(_)) => return Ok(singular_row(v)),
                Err(e) => return Err(numerical(e)),
            };
            let residual = ch.energy_residual();
            if residual.is_nan() || residual.abs() > ENERGY_TOLERANCE {
                return Err(CliError::Numerical(format!(
                    "energy bookkeeping off by {residual:e} at {} = {v}",
                    spec.variable.column()
                )));
            }
            let qfi = |wrt| match qfi_gaussian_general(&probe, &ch, wrt) {
                Ok(q) => Ok(Some(q)),
                Err(Error::Divergent(_) | Error::Singular(_)) => Ok(None),
                Err(e) => Err(numerical(e)),
            };
            let (q_alpha, q_index) = (qfi(Parameter::Absorption)?, qfi(Parameter::RefractiveIndex)?);
            Ok(vec![
                Cell::from(v),
                Cell::from(q_alpha.map(|q| q.per_photon)),
                Cell::from(q_index.map(|q| q.per_photon)),
                Cell::from(q_alpha.map(|q| q.std_per_photon())),
                Cell::from(ch.eta),
                Cell::from(wrap_phase(ch.theta)),
                Cell::from(ch.buildup),
                Cell::from(q_alpha.is_none() || q_index.is_none()),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut table = Table::new(vec![
        spec.variable.column(),
        "qfi_alpha_per_photon",
        "qfi_index_per_photon",
        "std_per_photon_per_cm",
        "eta",
        "theta_rad",
        "buildup",
        "singular",
    ]);
    for row in rows {
        table.push(row);
    }
    Ok(table.into())
}

/// Reduces a phase to `(−π, π]`.
fn wrap_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(std::f64::consts::TAU);
    if t > std::f64::consts::PI {
        t - std::f64::consts::TAU
    } else {
        t
    }
}

fn singular_row(v: f64) -> Vec<Cell> {
    let mut row = vec![Cell::from(v)];
    row.extend(std::iter::repeat(Cell::Missing).take(6));
    row.push(Cell::from(true));
    row
}

pub fn compare(config: &Config) -> Result<Report, CliError> {
    let scenario = config.scenario()?;
    let (alphas, optimize_r) = config.compare()?;
    let rows = compare_ring_vs_sp(&scenario.ring, &alphas, optimize_r).map_err(numerical)?;
    let mut table = Table::new(vec![
        "alpha_A_per_cm",
        "ring_std",
        "ring_optimal_std",
        "ring_optimal_r",
        "sp_fock_std",
        "sp_coherent_std",
    ]);
    for row in rows {
        table.push(vec![
            Cell::from(row.alpha_a),
            Cell::from(row.ring_std_per_photon),
            Cell::from(row.ring_optimal_std_per_photon),
            Cell::from(row.ring_optimal_r),
            Cell::from(row.sp_fock_std_per_photon),
            Cell::from(row.sp_coherent_std_per_photon),
        ]);
    }
    Ok(table.into())
}

/// The threshold from the rounded constant and from the exact crossover.
pub fn breakeven(config: &Config) -> Result<Report, CliError> {
    let ring = config.scenario()?.ring;
    let rounded = ring_breakeven_alpha(&ring).map_err(numerical)?;
    let exact = exact_breakeven_alpha(&ring).map_err(numerical)?;
    let mut table = Table::new(vec!["method", "constant", "alpha_A_per_cm"]);
    table.push(vec![Cell::from("rounded"), Cell::from(BREAKEVEN_CONSTANT), Cell::from(rounded)]);
    table.push(vec![Cell::from("exact"), Cell::Missing, Cell::from(exact)]);
    Ok(table.into())
}

pub fn optimize(config: &Config) -> Result<Report, CliError> {
    let scenario = config.scenario()?;
    let spec = config.search(&scenario);
    spec.validate().map_err(|e| CliError::Config(format!("optimize: {e}")))?;
    let report = maximize_qfi(&spec, &scenario.ring, &scenario.analyte).map_err(numerical)?;
    let p = report.best_params;

    let bound = qfi_upper_bound_ring(spec.photon_budget, &scenario.ring, &scenario.analyte).ok();
    let residual = bound.map(|b| (report.best_qfi - b).abs() / b);

    let mut table = Table::new(vec![
        "r",
        "phi_rad",
        "squeezing",
        "squeeze_phase_rad",
        "rotation_rad",
        "displacement",
        "qfi",
        "qfi_per_photon",
        "bound",
        "bound_residual",
        "converged",
        "iterations",
        "restarts",
    ]);
    table.push(vec![
        Cell::from(p.self_coupling),
        Cell::from(p.round_trip_phase),
        Cell::from(p.squeezing),
        Cell::from(p.squeeze_phase),
        Cell::from(p.rotation),
        Cell::from(p.displacement),
        Cell::from(report.best_qfi),
        Cell::from(report.per_photon_qfi),
        Cell::from(bound),
        Cell::from(residual),
        Cell::from(report.converged),
        Cell::from(report.iterations),
        Cell::from(report.restarts_used),
    ]);
    let failure = (!report.converged).then(|| {
        format!(
            "search did not converge after {} iterations; best per-photon QFI so far {:e}",
            report.iterations, report.per_photon_qfi
        )
    });
    Ok(Report { table, failure })
}

pub fn mc(config: &Config, seed: Option<u64>) -> Result<Report, CliError> {
    let scenario = config.scenario()?;
    let setup = config.mc(&scenario, seed)?;
    let report = estimator::mc_simulate(&setup).map_err(numerical)?;
    let z = if report.sampling_error > 0.0 {
        (report.empirical_variance - report.predicted_variance) / report.sampling_error
    } else {
        f64::NAN
    };
    let mut table = Table::new(vec![
        "r",
        "beta_sq",
        "trials",
        "repetitions",
        "seed",
        "empirical_variance",
        "predicted_variance",
        "qcrb_variance",
        "sampling_error",
        "z",
        "bias",
        "inversion_failures",
    ]);
    table.push(vec![
        Cell::from(setup.ring.self_coupling),
        Cell::from(setup.beta_sq),
        Cell::from(setup.trials),
        Cell::from(setup.repetitions),
        Cell::Int(setup.seed),
        Cell::from(report.empirical_variance),
        Cell::from(report.predicted_variance),
        Cell::from(report.qcrb_variance),
        Cell::from(report.sampling_error),
        Cell::from(z),
        Cell::from(report.bias),
        Cell::from(report.failures),
    ]);
    Ok(table.into())
}

/// Critical coupling for the configured analyte and the photons needed to
/// reach `design_target_std_per_cm`. `total_photons` is the budget of a
/// single measurement; `photons_per_trial` spreads it over `design_trials`.
pub fn design(config: &Config) -> Result<Report, CliError> {
    let scenario = config.scenario()?;
    let (ring, analyte) = (scenario.ring, scenario.analyte);
    let r = critical_coupling_r(&ring, &analyte);
    let mzi = mzi_phases_for_coupling(Complex64::new(r, 0.0)).map_err(numerical)?;
    let q1 = critical_qfi_per_photon(&ring, &analyte).map_err(numerical)?;
    let std_per_photon = q1.sqrt().recip();

    let target = config.design_target_std_per_cm;
    if let Some(t) = target {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!("design_target_std_per_cm: must be positive, got {t}")));
        }
    }
    let trials = config.design_trials.unwrap_or(1);
    if trials == 0 {
        return Err(CliError::Config("design_trials: must be at least 1".into()));
    }
    let total = target.map(|t| photons_for(t, q1));

    let mut table = Table::new(vec![
        "r_critical",
        "mzi_phi1_rad",
        "mzi_phi2_rad",
        "std_per_photon_per_cm",
        "target_std_per_cm",
        "total_photons",
        "trials",
        "photons_per_trial",
    ]);
    table.push(vec![
        Cell::from(r),
        Cell::from(mzi.phi1),
        Cell::from(mzi.phi2),
        Cell::from(std_per_photon),
        Cell::from(target),
        Cell::from(total),
        Cell::from(trials),
        Cell::from(total.map(|n| n / trials as f64)),
    ]);
    Ok(table.into())
}

/// Mean input photons for a single-shot standard deviation `target`.
pub fn photons_for(target: f64, qfi_per_photon: f64) -> f64 {
    1.0 / (target * target * qfi_per_photon)
}
