//! Desk-scale experiments on random root ensembles: iteration totals per
//! degree, the fitted scaling exponent, an epsilon sweep of the quadratic
//! phase, and a displacement audit.
//!
//! The runners here are serial and take the solver as a closure so the std
//! companion can plug in a parallel one; results never depend on which.

use alloc::vec::Vec;

use crate::ensemble::{check_conditions, sample_roots};
use crate::error::{Error, Result};
use crate::grid::build_grid;
use crate::orbit::{displacement_lower_bound, quadratic_phase_budget, DisplacementStats, Regime, DEFAULT_ETA};
use crate::pipeline::{solve, RootFindingReport, SolveOptions};
use crate::poly::Polynomial;
use crate::grid::StartingGrid;
use crate::seed;

/// Every slack constant used by the harness and its acceptance checks.
pub mod tolerances {
    /// Chosen orbits must last at least this fraction of the linear-model
    /// floor.
    pub const FLOOR_FRACTION: f64 = 0.5;
    /// Extra iterations allowed on top of the quadratic-phase budget.
    pub const NEAR_BUDGET_SLACK: usize = 5;
    /// Bracket for the fitted exponent of `total / ln^4 d`.
    pub const BETA_MIN: f64 = 1.0;
    pub const BETA_MAX: f64 = 2.3;
    /// The area-condition constant is tested against `AC_LOG_FACTOR * ln d`.
    pub const AC_LOG_FACTOR: f64 = 3.0;
    /// Required share of trials with every root recovered.
    pub const HITTING_RATE: f64 = 0.99;
}

/// Steps of `w -> ((d-1)/d) w` from `start_modulus` down to `1 + 1/d`.
pub fn farfield_iteration_floor(d: usize, start_modulus: f64) -> usize {
    let df = d as f64;
    let target = 1.0 + 1.0 / df;
    if start_modulus <= target {
        return 0;
    }
    libm::ceil(libm::log(start_modulus / target) / libm::log(df / (df - 1.0))) as usize
}

pub fn ac_reference_constant(d: usize) -> f64 {
    tolerances::AC_LOG_FACTOR * libm::log(d as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub degrees: Vec<usize>,
    pub trials: usize,
    pub epsilon: f64,
    pub eta: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(degrees: Vec<usize>, trials: usize, epsilon: f64, seed: u64) -> Self {
        ExperimentConfig { degrees, trials, epsilon, eta: DEFAULT_ETA, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degrees.is_empty() {
            return Err(Error::InvalidParameter { name: "degrees", value: 0.0 });
        }
        for w in self.degrees.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidParameter { name: "degrees (ascending)", value: w[1] as f64 });
            }
        }
        if let Some(&d) = self.degrees.iter().find(|&&d| d < 4) {
            return Err(Error::InvalidDegree { degree: d, min: 4 });
        }
        if self.trials < 1 {
            return Err(Error::InvalidParameter { name: "trials", value: 0.0 });
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-2) {
            return Err(Error::InvalidParameter { name: "epsilon", value: self.epsilon });
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter { name: "eta", value: self.eta });
        }
        Ok(())
    }
}

/// One random polynomial at one degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSpec {
    pub degree: usize,
    pub trial: usize,
    pub epsilon: f64,
    pub eta: f64,
    pub master_seed: u64,
}

impl TrialSpec {
    /// Per-trial seed; independent of the epsilon so sweeps reuse the same
    /// polynomials.
    pub fn seed(&self) -> u64 {
        let index = ((self.degree as u64) << 32) | self.trial as u64;
        seed::derive_seed(self.master_seed, seed::stream::ROOTS, index)
    }

    pub fn polynomial(&self) -> Polynomial {
        Polynomial::from_roots(sample_roots(self.degree, self.seed())).expect("samples lie in the disk")
    }

    pub fn grid(&self) -> StartingGrid {
        build_grid(self.degree, self.seed() | 1).expect("degree validated")
    }

    pub fn solve_options(&self) -> SolveOptions {
        let mut opts = SolveOptions::new(self.epsilon);
        opts.eta = self.eta;
        opts.seed = self.seed();
        opts.polynomial_id = alloc::format!("d{}-t{}", self.degree, self.trial);
        opts
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentRow {
    pub degree: usize,
    pub trial: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub total_iterations_chosen: u64,
    pub far_steps: u64,
    pub intermediate_steps: u64,
    pub near_steps: u64,
    pub outside_steps: u64,
    pub dc_holds: bool,
    pub dc_min_pairwise: f64,
    pub ac_holds: bool,
    pub ac_fitted_cd: f64,
    pub unresolved: usize,
    /// Longest near phase over the chosen orbits.
    pub max_near_phase: usize,
    /// Chosen orbits whose near phase exceeds budget + slack.
    pub near_budget_violations: usize,
    /// Smallest `iterations / farfield_iteration_floor` over chosen orbits.
    pub min_floor_ratio: f64,
    pub floor_violations: usize,
    /// Outside-2-disk steps over all grid orbits, and those moving `<= 1/d`.
    pub outside_disk_steps: u64,
    pub outside_disk_violations: u64,
    pub diverged: usize,
    pub stalled: usize,
    pub critical_failures: usize,
}

impl ExperimentRow {
    pub fn from_report(spec: &TrialSpec, report: &RootFindingReport, dc_holds: bool, dc_min: f64, ac_holds: bool, ac_cd: f64) -> Self {
        let budget = quadratic_phase_budget(spec.epsilon) + tolerances::NEAR_BUDGET_SLACK;
        let mut max_near_phase = 0;
        let mut near_budget_violations = 0;
        let mut min_floor_ratio = f64::INFINITY;
        let mut floor_violations = 0;
        for c in &report.chosen_starts {
            let near = c.near_phase.unwrap_or(0);
            max_near_phase = max_near_phase.max(near);
            if near > budget {
                near_budget_violations += 1;
            }
            let floor = farfield_iteration_floor(spec.degree, c.start.norm());
            if floor > 0 {
                let ratio = c.iterations as f64 / floor as f64;
                min_floor_ratio = min_floor_ratio.min(ratio);
                if ratio < tolerances::FLOOR_FRACTION {
                    floor_violations += 1;
                }
            }
        }
        ExperimentRow {
            degree: spec.degree,
            trial: spec.trial,
            seed: spec.seed(),
            epsilon: spec.epsilon,
            total_iterations_chosen: report.total_iterations_chosen,
            far_steps: report.regime_totals.far,
            intermediate_steps: report.regime_totals.intermediate,
            near_steps: report.regime_totals.near,
            outside_steps: report.regime_totals.outside,
            dc_holds,
            dc_min_pairwise: dc_min,
            ac_holds,
            ac_fitted_cd: ac_cd,
            unresolved: report.unresolved_count,
            max_near_phase,
            near_budget_violations,
            min_floor_ratio,
            floor_violations,
            outside_disk_steps: report.displacement.outside_steps,
            outside_disk_violations: report.displacement.outside_violations,
            diverged: report.orbit_outcomes.diverged,
            stalled: report.orbit_outcomes.stalled,
            critical_failures: report.orbit_outcomes.critical_failures,
        }
    }
}

/// Solver plug-in: `(polynomial, grid, options) -> report`.
pub trait Solver {
    fn solve(&self, p: &Polynomial, grid: &StartingGrid, opts: &SolveOptions) -> Result<RootFindingReport>;
}

/// The serial pipeline.
pub struct SerialSolver;

impl Solver for SerialSolver {
    fn solve(&self, p: &Polynomial, grid: &StartingGrid, opts: &SolveOptions) -> Result<RootFindingReport> {
        solve(p, grid, opts)
    }
}

/// Sample, check conditions, solve. Returns the row and the solve report.
pub fn run_trial<S: Solver + ?Sized>(spec: &TrialSpec, solver: &S) -> Result<(ExperimentRow, RootFindingReport)> {
    let p = spec.polynomial();
    let roots = p.roots().expect("sampled in root form");
    let cond = check_conditions(roots, spec.eta, ac_reference_constant(spec.degree));
    let report = solver.solve(&p, &spec.grid(), &spec.solve_options())?;
    let row = ExperimentRow::from_report(spec, &report, cond.dc_holds, cond.dc_min_pairwise, cond.ac_holds, cond.ac_constant);
    Ok((row, report))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DegreeSummary {
    pub degree: usize,
    pub trials: usize,
    /// Trials satisfying DC, the ones entering the fit.
    pub dc_trials: usize,
    pub median_total: f64,
    pub median_far: f64,
    pub median_intermediate: f64,
    pub median_near: f64,
    pub fully_resolved: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingFit {
    /// Exponent in `total ~ c d^beta ln^4 d`.
    pub beta: f64,
    pub log_c: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub epsilon: f64,
    pub trial: usize,
    pub dc_holds: bool,
    pub budget: usize,
    pub max_near_phase: usize,
    /// Chosen orbits whose near phase exceeds budget + slack.
    pub violations: usize,
    pub unresolved: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    pub per_degree: Vec<DegreeSummary>,
    pub fit: Option<ScalingFit>,
    /// Plain power-law fit of the medians, without the log factor.
    pub raw_fit: Option<ScalingFit>,
    pub epsilon_sweep: Vec<SweepRow>,
    pub audit: Vec<AuditRow>,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Least squares of `ln(median / ln^4 d)` on `ln d`.
pub fn fit_scaling(points: &[(usize, f64)]) -> Option<ScalingFit> {
    fit_exponent(points, 4)
}

/// Least squares of `ln(median / ln^log_power d)` on `ln d`.
pub fn fit_exponent(points: &[(usize, f64)], log_power: i32) -> Option<ScalingFit> {
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(d, m)| d >= 2 && m > 0.0 && m.is_finite())
        .map(|&(d, m)| {
            let ln = libm::log(d as f64);
            (ln, libm::log(m) - log_power as f64 * libm::log(ln))
        })
        .collect();
    if data.len() < 2 {
        return None;
    }
    let n = data.len() as f64;
    let mx = data.iter().map(|p| p.0).sum::<f64>() / n;
    let my = data.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = data.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = data.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = data.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let beta = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(ScalingFit { beta, log_c: my - beta * mx, r_squared })
}

/// Rows sorted by `(degree, trial)` and per-degree medians over
/// DC-satisfying rows.
pub fn summarize(mut rows: Vec<ExperimentRow>) -> (Vec<ExperimentRow>, Vec<DegreeSummary>) {
    rows.sort_by_key(|r| (r.degree, r.trial));
    let mut per_degree = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let d = rows[start].degree;
        let end = start + rows[start..].iter().take_while(|r| r.degree == d).count();
        let group = &rows[start..end];
        let fit_rows: Vec<&ExperimentRow> = group.iter().filter(|r| r.dc_holds).collect();
        let med = |f: fn(&ExperimentRow) -> u64| {
            let mut v: Vec<f64> = fit_rows.iter().map(|r| f(r) as f64).collect();
            median(&mut v)
        };
        per_degree.push(DegreeSummary {
            degree: d,
            trials: group.len(),
            dc_trials: fit_rows.len(),
            median_total: med(|r| r.total_iterations_chosen),
            median_far: med(|r| r.far_steps),
            median_intermediate: med(|r| r.intermediate_steps),
            median_near: med(|r| r.near_steps),
            fully_resolved: group.iter().filter(|r| r.unresolved == 0).count(),
        });
        start = end;
    }
    (rows, per_degree)
}

/// Trial specs in `(degree, trial)` order.
pub fn trial_specs(cfg: &ExperimentConfig) -> Vec<TrialSpec> {
    cfg.degrees
        .iter()
        .flat_map(|&degree| {
            (0..cfg.trials).map(move |trial| TrialSpec {
                degree,
                trial,
                epsilon: cfg.epsilon,
                eta: cfg.eta,
                master_seed: cfg.seed,
            })
        })
        .collect()
}

/// Sweep trials in `(epsilon, trial)` order; every epsilon reuses the same
/// polynomials.
pub fn sweep_specs(degree: usize, epsilons: &[f64], trials: usize, eta: f64, seed: u64) -> Vec<TrialSpec> {
    epsilons
        .iter()
        .flat_map(|&epsilon| (0..trials).map(move |trial| TrialSpec { degree, trial, epsilon, eta, master_seed: seed }))
        .collect()
}

impl SweepRow {
    pub fn from_row(row: &ExperimentRow) -> Self {
        SweepRow {
            epsilon: row.epsilon,
            trial: row.trial,
            dc_holds: row.dc_holds,
            budget: quadratic_phase_budget(row.epsilon),
            max_near_phase: row.max_near_phase,
            violations: row.near_budget_violations,
            unresolved: row.unresolved,
        }
    }
}

/// Near-phase check at one degree across several tolerances.
pub fn epsilon_sweep<S: Solver + ?Sized>(degree: usize, epsilons: &[f64], trials: usize, eta: f64, seed: u64, solver: &S) -> Result<Vec<SweepRow>> {
    sweep_specs(degree, epsilons, trials, eta, seed)
        .iter()
        .map(|spec| run_trial(spec, solver).map(|(row, _)| SweepRow::from_row(&row)))
        .collect()
}

/// Serial scaling experiment with the default sweep at the smallest degree
/// of at least 20.
pub fn scaling_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(cfg, &SerialSolver, &SWEEP_EPSILONS)
}

pub const SWEEP_EPSILONS: [f64; 3] = [1e-4, 1e-8, 1e-16];
pub const SWEEP_DEGREE: usize = 20;

pub fn run_experiment<S: Solver + ?Sized>(cfg: &ExperimentConfig, solver: &S, sweep: &[f64]) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut merged: Vec<DisplacementStats> = Vec::new();
    for spec in trial_specs(cfg) {
        let (row, report) = run_trial(&spec, solver)?;
        rows.push(row);
        match merged.iter_mut().find(|s| s.degree == spec.degree) {
            Some(stats) => stats.merge(&report.displacement),
            None => merged.push(report.displacement),
        }
    }
    let epsilon_sweep = if sweep.is_empty() {
        Vec::new()
    } else {
        epsilon_sweep(SWEEP_DEGREE, sweep, cfg.trials, cfg.eta, cfg.seed, solver)?
    };
    Ok(finish_report(rows, &merged, epsilon_sweep))
}

/// Assemble an [`ExperimentReport`] from finished pieces.
pub fn finish_report(rows: Vec<ExperimentRow>, stats: &[DisplacementStats], epsilon_sweep: Vec<SweepRow>) -> ExperimentReport {
    let (rows, per_degree) = summarize(rows);
    let points: Vec<(usize, f64)> = per_degree.iter().map(|s| (s.degree, s.median_total)).collect();
    let mut audit = Vec::new();
    for s in stats {
        audit.extend(displacement_audit(s, None));
    }
    ExperimentReport {
        rows,
        per_degree,
        fit: fit_scaling(&points),
        raw_fit: fit_exponent(&points, 0),
        epsilon_sweep,
        audit,
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AuditRow {
    pub degree: usize,
    pub regime: Regime,
    pub steps: u64,
    pub min_displacement: f64,
    /// Fitted `C` for the far (`C / (d ln d)`) and intermediate
    /// (`C / (k 2^k)`) shapes; absent for outside and near rows.
    pub fitted_c: Option<f64>,
    /// Smallest value of the bound shape over the observed bins.
    pub bound: f64,
    pub violations: u64,
    /// Bins whose minimum undercuts the area-condition bound, when a `C_d`
    /// is supplied.
    pub explicit_bound_violations: Option<u64>,
}

/// Per-regime conformance of observed displacements.
///
/// Outside the 2-disk the bound `1/d` is exact. For far and intermediate
/// steps `C` is fitted as the largest constant consistent with every
/// observed step, so those rows fail only if `C` is not positive. With
/// `area_constant = Some(c_d)` each inside bin is also checked against
/// [`displacement_lower_bound`].
pub fn displacement_audit(stats: &DisplacementStats, area_constant: Option<f64>) -> Vec<AuditRow> {
    let d = stats.degree;
    let df = d as f64;
    let mut rows = Vec::new();
    if stats.outside_steps > 0 {
        rows.push(AuditRow {
            degree: d,
            regime: Regime::Outside2Disk,
            steps: stats.outside_steps,
            min_displacement: stats.outside_min_displacement,
            fitted_c: None,
            bound: 1.0 / df,
            violations: stats.outside_violations,
            explicit_bound_violations: None,
        });
    }
    for regime in [Regime::Far, Regime::Intermediate, Regime::Near] {
        let bins: Vec<(i32, u64, f64)> = stats
            .per_bin
            .iter()
            .filter(|(&k, _)| Regime::from_k(k, d, stats.eta) == regime)
            .map(|(&k, b)| (k, b.count, b.min_displacement))
            .collect();
        if bins.is_empty() {
            continue;
        }
        let steps = bins.iter().map(|b| b.1).sum();
        let min_displacement = bins.iter().map(|b| b.2).fold(f64::INFINITY, f64::min);
        let shape = |k: i32| match regime {
            Regime::Far => 1.0 / (df * libm::log(df)),
            _ => 1.0 / (k.max(1) as f64 * libm::ldexp(1.0, k)),
        };
        let (fitted_c, bound, violations) = match regime {
            Regime::Near => (None, 0.0, 0),
            _ => {
                let c = bins.iter().map(|&(k, _, m)| m / shape(k)).fold(f64::INFINITY, f64::min);
                let bound = bins.iter().map(|&(k, _, _)| c * shape(k)).fold(f64::INFINITY, f64::min);
                let violations = if c > 0.0 {
                    bins.iter().filter(|&&(k, _, m)| m < c * shape(k)).map(|b| b.1).sum()
                } else {
                    steps
                };
                (Some(c), bound, violations)
            }
        };
        let explicit_bound_violations = area_constant.map(|c_d| {
            bins.iter()
                .filter(|&&(k, _, m)| k >= -2 && m < displacement_lower_bound(d, k, c_d, false))
                .count() as u64
        });
        rows.push(AuditRow { degree: d, regime, steps, min_displacement, fitted_c, bound, violations, explicit_bound_violations });
    }
    rows
}
