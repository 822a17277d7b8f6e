//! Numerical maximisation of the Gaussian QFI over ring coupling, detuning
//! and probe shape, plus coupler design helpers.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check, Error, Result};
use crate::gaussian::ProbeSpec;
use crate::qfi::{qfi_coherent, qfi_gaussian_general};
use crate::resonator::{attenuation, channel_point, Analyte, MziCoupler, Parameter, RingParams};
use crate::strategies::{sp_optimal_per_photon, Strategy};

/// Closed interval for one search variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Mirrors `x` back inside, then clamps whatever is still outside.
    fn reflect(&self, x: f64) -> f64 {
        let x = if x < self.lo {
            2.0 * self.lo - x
        } else if x > self.hi {
            2.0 * self.hi - x
        } else {
            x
        };
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBounds {
    pub self_coupling: Interval,
    pub round_trip_phase: Interval,
    /// Share of the photon budget spent on squeezing, `sinh²s / N`.
    pub squeeze_fraction: Interval,
    pub squeeze_phase: Interval,
    pub rotation: Interval,
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self {
            self_coupling: Interval::new(0.0, 1.0),
            round_trip_phase: Interval::new(-PI, PI),
            squeeze_fraction: Interval::new(0.0, 1.0),
            squeeze_phase: Interval::new(-PI, PI),
            rotation: Interval::new(-PI, PI),
        }
    }
}

impl SearchBounds {
    fn as_array(&self) -> [Interval; DIM] {
        [
            self.self_coupling,
            self.round_trip_phase,
            self.squeeze_fraction,
            self.squeeze_phase,
            self.rotation,
        ]
    }

    fn validate(&self) -> Result<()> {
        let names = ["self_coupling", "round_trip_phase", "squeeze_fraction", "squeeze_phase", "rotation"];
        for (iv, name) in self.as_array().iter().zip(names) {
            check(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo <= iv.hi, name, iv.lo, "bounds must be finite and ordered")?;
        }
        let (r, f) = (self.self_coupling, self.squeeze_fraction);
        check(r.lo >= 0.0 && r.hi <= 1.0, "self_coupling", r.hi, "bounds must lie in [0, 1]")?;
        check(f.lo >= 0.0 && f.hi <= 1.0, "squeeze_fraction", f.hi, "bounds must lie in [0, 1]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpec {
    pub photon_budget: f64,
    pub bounds: SearchBounds,
    /// Largest round-trip attenuation accepted.
    pub a_max: f64,
    /// Relative spread of the simplex values that counts as converged.
    pub tolerance: f64,
    /// Extra simplex runs started from the incumbent after the grid.
    pub max_restarts: u32,
    /// Iteration cap for a single simplex run.
    pub max_iterations: u32,
}

impl SearchSpec {
    pub fn new(photon_budget: f64) -> Self {
        Self {
            photon_budget,
            bounds: SearchBounds::default(),
            a_max: 0.99,
            tolerance: 1e-10,
            max_restarts: 3,
            max_iterations: 5000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check(self.photon_budget > 0.0, "photon_budget", self.photon_budget, "must be positive")?;
        check(self.a_max > 0.0 && self.a_max <= 1.0, "a_max", self.a_max, "must lie in (0, 1]")?;
        check(self.tolerance > 0.0, "tolerance", self.tolerance, "must be positive")?;
        check(self.max_iterations > 0, "max_iterations", 0.0, "must be positive")?;
        self.bounds.validate()
    }
}

/// Ring and probe settings at the optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimumParams {
    pub self_coupling: f64,
    /// Reduced to `(−π, π]`.
    pub round_trip_phase: f64,
    pub squeezing: f64,
    pub squeeze_phase: f64,
    pub rotation: f64,
    pub displacement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimumReport {
    pub best_params: OptimumParams,
    pub best_qfi: f64,
    pub per_photon_qfi: f64,
    pub converged: bool,
    pub iterations: u32,
    pub restarts_used: u32,
    /// Best objective over the starting grid.
    pub best_seed_qfi: f64,
}

const DIM: usize = 5;
const GRID: usize = 3;
/// Simplex size, relative to the bounds, below which a run stops.
const SIMPLEX_XTOL: f64 = 1e-10;

struct Run {
    x: [f64; DIM],
    f: f64,
    converged: bool,
    iterations: u32,
}

/// Bounded Nelder–Mead minimisation of `f`. Stops when the spread of values
/// over the simplex falls below `tol` relative, or the simplex has collapsed.
fn nelder_mead<F>(f: &F, start: [f64; DIM], bounds: &[Interval; DIM], tol: f64, max_iter: u32) -> Run
where
    F: Fn(&[f64; DIM]) -> f64,
{
    let clamp = |mut x: [f64; DIM]| {
        for (xi, b) in x.iter_mut().zip(bounds) {
            *xi = b.reflect(*xi);
        }
        x
    };
    let mut simplex: Vec<([f64; DIM], f64)> = Vec::with_capacity(DIM + 1);
    let start = clamp(start);
    simplex.push((start, f(&start)));
    for i in 0..DIM {
        let mut x = start;
        let step = 0.1 * bounds[i].width();
        x[i] = if x[i] + step <= bounds[i].hi { x[i] + step } else { x[i] - step };
        let x = clamp(x);
        simplex.push((x, f(&x)));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[DIM].1);
        let x0 = simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| (0..DIM).map(move |j| (j, x[j])))
            .filter(|(j, _)| bounds[*j].width() > 0.0)
            .map(|(j, xj)| (xj - x0[j]).abs() / bounds[j].width())
            .fold(0.0, f64::max);
        // The second test stops a simplex collapsed onto a point where the
        // objective is discontinuous, such as the zero-transmission point.
        if (worst - best).abs() <= tol * best.abs().max(f64::MIN_POSITIVE) || diameter <= SIMPLEX_XTOL {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; DIM];
        for (x, _) in &simplex[..DIM] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / DIM as f64;
            }
        }
        let toward = |coef: f64| {
            let mut x = [0.0; DIM];
            for j in 0..DIM {
                x[j] = centroid[j] + coef * (simplex[DIM].0[j] - centroid[j]);
            }
            clamp(x)
        };

        let xr = toward(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = toward(-2.0);
            let fe = f(&xe);
            simplex[DIM] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[DIM - 1].1 {
            simplex[DIM] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let xc = toward(-0.5);
                (xc, f(&xc))
            } else {
                let xc = toward(0.5);
                (xc, f(&xc))
            };
            if fc < worst.min(fr) {
                simplex[DIM] = (xc, fc);
            } else {
                let x0 = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    let mut x = [0.0; DIM];
                    for j in 0..DIM {
                        x[j] = x0[j] + 0.5 * (vertex.0[j] - x0[j]);
                    }
                    let x = clamp(x);
                    *vertex = (x, f(&x));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Run {
        x: simplex[0].0,
        f: simplex[0].1,
        converged,
        iterations,
    }
}

fn probe_from(budget: f64, x: &[f64; DIM]) -> Result<ProbeSpec> {
    ProbeSpec::from_budget(budget, x[2], x[3], x[4])
}

fn ring_from(ring: &RingParams, analyte: &Analyte, x: &[f64; DIM]) -> RingParams {
    ring.with_self_coupling(x[0]).tuned_to(analyte, x[1])
}

/// `φ` reduced to `(−π, π]`.
fn wrap_phase(phi: f64) -> f64 {
    let w = phi - TAU * (phi / TAU).round();
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Maximises the per-photon QFI for `α_A` over `(r, φ, squeeze fraction, χ,
/// ϕ_rot)` at a fixed photon budget.
///
/// The fabrication fields of `ring` are kept; its self-coupling and phase
/// bias are search variables. A simplex search starts from every point of a
/// 3⁴ grid over `(r, φ, fraction, χ)` with `ϕ_rot = 0`, the best result is
/// restarted up to `max_restarts` times, and the report keeps the best value
/// seen.
pub fn maximize_qfi(spec: &SearchSpec, ring: &RingParams, analyte: &Analyte) -> Result<OptimumReport> {
    spec.validate()?;
    ring.validate()?;
    analyte.validate()?;
    let a = attenuation(ring, analyte).attenuation;
    check(a <= spec.a_max, "attenuation", a, "exceeds a_max")?;
    let budget = spec.photon_budget;
    let bounds = spec.bounds.as_array();

    let objective = |x: &[f64; DIM]| -> f64 {
        let q = probe_from(budget, x).and_then(|probe| {
            let cp = channel_point(&ring_from(ring, analyte, x), analyte)?;
            qfi_gaussian_general(&probe, &cp, Parameter::Absorption)
        });
        match q {
            Ok(q) if q.per_photon.is_finite() => -q.per_photon,
            _ => f64::INFINITY,
        }
    };

    let grid_point = |iv: &Interval, k: usize| iv.lo + iv.width() * (k as f64 + 0.5) / GRID as f64;
    let seeds: Vec<[f64; DIM]> = (0..GRID.pow(4))
        .map(|n| {
            let idx = [n % GRID, (n / GRID) % GRID, (n / GRID / GRID) % GRID, n / GRID / GRID / GRID];
            let mut x = [0.0; DIM];
            for d in 0..4 {
                x[d] = grid_point(&bounds[d], idx[d]);
            }
            x[4] = bounds[4].reflect(0.0);
            x
        })
        .collect();

    let best_seed = seeds.iter().map(&objective).fold(f64::INFINITY, f64::min);
    let runs: Vec<Run> = seeds
        .par_iter()
        .map(|s| nelder_mead(&objective, *s, &bounds, spec.tolerance, spec.max_iterations))
        .collect();
    let mut best = runs
        .into_iter()
        .reduce(|acc, run| if run.f < acc.f { run } else { acc })
        .expect("grid is non-empty");
    if !best.f.is_finite() {
        return Err(Error::Precondition("objective undefined over the whole search grid".into()));
    }

    let mut restarts_used = 0;
    let mut iterations = best.iterations;
    while restarts_used < spec.max_restarts {
        restarts_used += 1;
        let run = nelder_mead(&objective, best.x, &bounds, spec.tolerance, spec.max_iterations);
        iterations += run.iterations;
        let improved = run.f < best.f;
        let settled = !improved || (best.f - run.f) <= spec.tolerance * best.f.abs();
        if improved || run.f == best.f {
            best = Run { iterations, ..run };
        }
        if settled && best.converged {
            break;
        }
    }

    let x = best.x;
    let probe = probe_from(budget, &x)?;
    let per_photon_qfi = -best.f;
    Ok(OptimumReport {
        best_params: OptimumParams {
            self_coupling: x[0],
            round_trip_phase: wrap_phase(x[1]),
            squeezing: probe.squeezing,
            squeeze_phase: x[3],
            rotation: x[4],
            displacement: probe.displacement,
        },
        best_qfi: per_photon_qfi * budget,
        per_photon_qfi,
        converged: best.converged,
        iterations,
        restarts_used,
        best_seed_qfi: -best_seed,
    })
}

/// Self-coupling that critically couples the ring for `analyte`, `r = a`.
pub fn critical_coupling_r(ring: &RingParams, analyte: &Analyte) -> f64 {
    attenuation(ring, analyte).attenuation
}

/// Coupler phases producing the self-coupling `ρ`, with `φ₁ − φ₂ ∈ [0, π]`
/// and `φ₁ + φ₂ ∈ (−2π, 2π]`.
pub fn mzi_phases_for_coupling(rho: Complex64) -> Result<MziCoupler> {
    let mag = rho.norm();
    check(mag <= 1.0 + 1e-12, "target_rho", mag, "magnitude must not exceed 1")?;
    let mag = mag.min(1.0);
    let diff = 2.0 * mag.acos();
    let sum = if mag == 0.0 {
        0.0
    } else {
        let s = 2.0 * (rho.arg() - FRAC_PI_2);
        if s <= -TAU {
            s + 2.0 * TAU
        } else {
            s
        }
    };
    Ok(MziCoupler {
        phi1: 0.5 * (sum + diff),
        phi2: 0.5 * (sum - diff),
    })
}

/// One absorption value of a robustness sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessRow {
    pub alpha_a: f64,
    pub ring_std_per_photon: f64,
    /// Best single-pass strategy, the Fock probe at its optimal length.
    pub sp_best_std_per_photon: f64,
    pub ring_wins: bool,
}

/// Fixed ring against the best single pass for `α_A` within
/// `±fraction·α_target`, over `points` evenly spaced values.
pub fn robustness_sweep(ring: &RingParams, alpha_target: f64, fraction: f64, points: usize) -> Result<Vec<RobustnessRow>> {
    ring.validate()?;
    check(alpha_target > 0.0, "alpha_target", alpha_target, "must be positive")?;
    check((0.0..1.0).contains(&fraction), "fraction", fraction, "must lie in [0, 1)")?;
    check(points >= 1, "points", points as f64, "must be at least 1")?;
    let alphas: Vec<f64> = if fraction == 0.0 || points == 1 {
        vec![alpha_target]
    } else {
        let (lo, hi) = ((1.0 - fraction) * alpha_target, (1.0 + fraction) * alpha_target);
        (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect()
    };
    alphas
        .par_iter()
        .map(|&alpha_a| {
            let ring_q = qfi_coherent(1.0, ring, &Analyte::new(alpha_a, 0.0)?)?;
            let sp = sp_optimal_per_photon(Strategy::Fock, alpha_a)?;
            Ok(RobustnessRow {
                alpha_a,
                ring_std_per_photon: ring_q.std_per_photon(),
                sp_best_std_per_photon: sp.sqrt().recip(),
                ring_wins: ring_q.per_photon > sp,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfi::{critical_qfi_per_photon, qfi_upper_bound_ring};
    use crate::resonator::{db_per_cm_to_alpha, mzi_coupling};
    use crate::strategies::{compare_ring_vs_sp, ring_breakeven_alpha};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn large_ring() -> (RingParams, Analyte) {
        let analyte = Analyte::new(20.0, 0.0).unwrap();
        let ring = RingParams::from_radius(0.8, 75e-4, 0.43, db_per_cm_to_alpha(5.0), 2.4, 1.5e-4).unwrap();
        (ring, analyte)
    }

    fn case_study_ring() -> (RingParams, Analyte) {
        let analyte = Analyte::new(10.0, 0.0).unwrap();
        let ring = RingParams::from_radius(0.93, 50e-4, 0.43, db_per_cm_to_alpha(2.0), 2.4, 1.5e-4)
            .unwrap()
            .tuned_to(&analyte, 0.0);
        (ring, analyte)
    }

    #[test]
    fn critical_coupling_examples() {
        let (ring, analyte) = case_study_ring();
        assert!((critical_coupling_r(&ring, &analyte) - 0.928).abs() < 5e-4);
        let (ring, analyte) = large_ring();
        assert!((critical_coupling_r(&ring, &analyte) - 0.795).abs() < 5e-4);
        let lossless = RingParams {
            intrinsic_absorption: 0.0,
            ..ring
        };
        assert_eq!(critical_coupling_r(&lossless, &Analyte::new(0.0, 0.0).unwrap()), 1.0);
    }

    fn check_optimum(ring: &RingParams, analyte: &Analyte, budget: f64) -> OptimumReport {
        let report = maximize_qfi(&SearchSpec::new(budget), ring, analyte).unwrap();
        let a = critical_coupling_r(ring, analyte);
        let p = report.best_params;
        assert!((p.self_coupling - a).abs() < 1e-3, "{report:?}");
        assert!(p.round_trip_phase.abs() < 1e-3, "{report:?}");
        let unit = critical_qfi_per_photon(ring, analyte).unwrap();
        assert_relative_eq!(report.per_photon_qfi, unit, max_relative = 1e-5);
        assert!(report.per_photon_qfi >= report.best_seed_qfi);
        assert!(report.converged, "{report:?}");
        report
    }

    #[test]
    fn large_ring_optimum_reaches_bound() {
        let (ring, analyte) = large_ring();
        let report = check_optimum(&ring, &analyte, 4.0);
        let bound = qfi_upper_bound_ring(1.0, &ring, &analyte).unwrap();
        assert_relative_eq!(report.per_photon_qfi, bound, max_relative = 1e-5);
        assert_relative_eq!(report.best_qfi, 4.0 * report.per_photon_qfi);
        let again = maximize_qfi(&SearchSpec::new(4.0), &ring, &analyte).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn optimum_is_split_independent() {
        let (ring, analyte) = large_ring();
        let a = critical_coupling_r(&ring, &analyte);
        let crit = ring.with_self_coupling(a).tuned_to(&analyte, 0.0);
        let cp = channel_point(&crit, &analyte).unwrap();
        let base = critical_qfi_per_photon(&ring, &analyte).unwrap();
        for frac in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let probe = ProbeSpec::from_budget(6.0, frac, 1.3, -0.4).unwrap();
            let q = qfi_gaussian_general(&probe, &cp, Parameter::Absorption).unwrap();
            assert_relative_eq!(q.per_photon, base, max_relative = 1e-6);
        }
    }

    #[test]
    fn random_instances_converge_to_critical_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..20 {
            let gamma = rng.random_range(0.1..0.9);
            let l = rng.random_range(0.01..0.1);
            let alpha_a = rng.random_range(1.0..30.0);
            let alpha_i = rng.random_range(0.0..3.0);
            let ring = RingParams::new(0.5, l, gamma, alpha_i, 2.4, 1.5e-4).unwrap();
            let analyte = Analyte::new(alpha_a, 0.0).unwrap();
            if critical_coupling_r(&ring, &analyte) > 0.99 {
                continue;
            }
            check_optimum(&ring, &analyte, rng.random_range(0.5..20.0));
        }
    }

    #[test]
    fn rejects_weakly_absorbing_ring() {
        let ring = RingParams::new(0.5, 0.01, 0.2, 0.0, 2.4, 1.5e-4).unwrap();
        let analyte = Analyte::new(0.5, 0.0).unwrap();
        assert!(maximize_qfi(&SearchSpec::new(1.0), &ring, &analyte).is_err());
        let mut spec = SearchSpec::new(1.0);
        spec.bounds.self_coupling = Interval::new(0.8, 0.2);
        let (ring, analyte) = large_ring();
        assert!(maximize_qfi(&spec, &ring, &analyte).is_err());
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let bounds = [Interval::new(-5.0, 5.0); DIM];
        let f = |x: &[f64; DIM]| 1.0 + x.iter().enumerate().map(|(i, v)| (v - i as f64 * 0.5).powi(2)).sum::<f64>();
        let run = nelder_mead(&f, [4.0; DIM], &bounds, 1e-14, 20_000);
        assert!(run.converged);
        for (i, v) in run.x.iter().enumerate() {
            assert!((v - i as f64 * 0.5).abs() < 1e-5);
        }
    }

    #[test]
    fn reflection_stays_in_bounds() {
        let iv = Interval::new(0.0, 1.0);
        assert_eq!(iv.reflect(-0.25), 0.25);
        assert_eq!(iv.reflect(1.25), 0.75);
        assert_eq!(iv.reflect(5.0), 0.0);
        assert_eq!(iv.reflect(0.5), 0.5);
    }

    #[test]
    fn phase_wrapping() {
        assert_eq!(wrap_phase(PI), PI);
        assert_relative_eq!(wrap_phase(-PI), PI);
        assert_relative_eq!(wrap_phase(TAU + 0.1), 0.1, max_relative = 1e-12);
    }

    #[test]
    fn mzi_examples() {
        let c = mzi_phases_for_coupling(Complex64::i()).unwrap();
        assert!(c.phi1.abs() < 1e-15 && c.phi2.abs() < 1e-15);
        let c = mzi_phases_for_coupling(Complex64::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(c.phi1 - c.phi2, PI);
        assert_eq!(c.phi1 + c.phi2, 0.0);
        let target = Complex64::new(0.0, 0.93);
        let c = mzi_phases_for_coupling(target).unwrap();
        assert!((mzi_coupling(&c) - target).norm() < 1e-10);
        assert!(mzi_phases_for_coupling(Complex64::new(0.8, 0.8)).is_err());
    }

    #[test]
    fn robustness_of_case_study() {
        let (ring, _) = case_study_ring();
        let rows = robustness_sweep(&ring, 10.0, 0.2, 41).unwrap();
        assert_eq!(rows.len(), 41);
        assert!(rows.iter().all(|r| r.ring_wins));
        assert_relative_eq!(rows[0].alpha_a, 8.0);
        assert_relative_eq!(rows[40].alpha_a, 12.0);

        let alphas: Vec<f64> = rows.iter().map(|r| r.alpha_a).collect();
        let cmp = compare_ring_vs_sp(&ring, &alphas, true).unwrap();
        for (row, c) in rows.iter().zip(&cmp) {
            assert!(row.ring_std_per_photon >= c.ring_optimal_std_per_photon.unwrap() * (1.0 - 1e-12));
        }

        let single = robustness_sweep(&ring, 10.0, 0.0, 9).unwrap();
        assert_eq!(single.len(), 1);
        let breakeven = ring_breakeven_alpha(&ring).unwrap();
        assert_eq!(single[0].ring_wins, 10.0 > breakeven);
        let low = robustness_sweep(&ring, 2.0, 0.0, 1).unwrap();
        assert!(!low[0].ring_wins);
        assert!(robustness_sweep(&ring, 10.0, 1.0, 5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1_000))]

        #[test]
        fn mzi_round_trip(mag in 0.0..=1.0f64, arg in -PI..PI) {
            let rho = Complex64::from_polar(mag, arg);
            let c = mzi_phases_for_coupling(rho).unwrap();
            prop_assert!((mzi_coupling(&c) - rho).norm() < 1e-10);
            prop_assert!(c.phi1 - c.phi2 >= 0.0 && c.phi1 - c.phi2 <= PI + 1e-15);
            let sum = c.phi1 + c.phi2;
            prop_assert!(sum > -TAU && sum <= TAU + 1e-12);
        }
    }
}
