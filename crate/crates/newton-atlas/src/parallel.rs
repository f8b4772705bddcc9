//! Rayon-backed runners. Work is split per grid point or per trial and
//! merged in index order, so results match the serial ones bit for bit.

use newton_atlas_core::ensemble::{check_conditions, digit_multiplicity_trial, sample_roots};
use newton_atlas_core::experiment::{
    ac_reference_constant, finish_report, run_trial, sweep_specs, trial_specs, ExperimentConfig, ExperimentReport,
    ExperimentRow, SerialSolver, Solver, SweepRow, SWEEP_DEGREE,
};
use newton_atlas_core::orbit::DisplacementStats;
use newton_atlas_core::pipeline::{assemble_report, check_compatible, run_grid_orbit};
use newton_atlas_core::seed::{derive_seed, stream};
use newton_atlas_core::{Polynomial, Result, RootFindingReport, SolveOptions, StartingGrid};
use rayon::prelude::*;

use crate::formats::ConditionRow;

pub struct Workers {
    pool: rayon::ThreadPool,
}

impl Workers {
    /// `count = 0` uses one thread per available core.
    pub fn new(count: usize) -> anyhow::Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(count).build()?;
        Ok(Workers { pool })
    }

    pub fn count(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}

/// Runs the grid orbits of one polynomial across the pool.
pub struct ParallelSolver<'a> {
    pub workers: &'a Workers,
}

impl Solver for ParallelSolver<'_> {
    fn solve(&self, p: &Polynomial, grid: &StartingGrid, opts: &SolveOptions) -> Result<RootFindingReport> {
        check_compatible(p, grid)?;
        let traces = self.workers.install(|| {
            (0..grid.len())
                .into_par_iter()
                .map(|i| run_grid_orbit(p, grid, i, opts, false))
                .collect::<Result<Vec<_>>>()
        })?;
        assemble_report(p, opts, &traces)
    }
}

/// The scaling experiment with trials spread over the pool. Also returns
/// the displacement statistics merged per degree, for plotting.
pub fn run_experiment(cfg: &ExperimentConfig, workers: &Workers, sweep: &[f64]) -> Result<(ExperimentReport, Vec<DisplacementStats>)> {
    cfg.validate()?;
    let specs = trial_specs(cfg);
    let results: Vec<(ExperimentRow, DisplacementStats)> = workers.install(|| {
        specs
            .par_iter()
            .map(|spec| run_trial(spec, &SerialSolver).map(|(row, report)| (row, report.displacement)))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut merged: Vec<DisplacementStats> = Vec::new();
    let mut rows = Vec::with_capacity(results.len());
    for (row, stats) in results {
        match merged.iter_mut().find(|s| s.degree == row.degree) {
            Some(m) => m.merge(&stats),
            None => merged.push(stats),
        }
        rows.push(row);
    }
    let sweep_rows = if sweep.is_empty() {
        Vec::new()
    } else {
        let specs = sweep_specs(SWEEP_DEGREE, sweep, cfg.trials, cfg.eta, cfg.seed);
        workers.install(|| {
            specs
                .par_iter()
                .map(|spec| run_trial(spec, &SerialSolver).map(|(row, _)| SweepRow::from_row(&row)))
                .collect::<Result<Vec<_>>>()
        })?
    };
    Ok((finish_report(rows, &merged, sweep_rows), merged))
}

/// Per-trial condition checks for `verify`.
pub fn verify_conditions(degree: usize, trials: usize, eta: f64, seed: u64, workers: &Workers) -> Vec<ConditionRow> {
    let c_d = ac_reference_constant(degree);
    workers.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let roots_seed = derive_seed(seed, stream::ROOTS, t);
                let cond = check_conditions(&sample_roots(degree, roots_seed), eta, c_d);
                ConditionRow {
                    seed: roots_seed,
                    dc_holds: cond.dc_holds,
                    dc_min: cond.dc_min_pairwise,
                    ac_fitted_cd: cond.ac_constant,
                    digit_max_mult: digit_multiplicity_trial(degree, derive_seed(seed, stream::DIGITS, t)),
                }
            })
            .collect()
    })
}
