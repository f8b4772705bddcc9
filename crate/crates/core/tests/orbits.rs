use newton_atlas_core::ensemble::sample_roots;
use newton_atlas_core::experiment::{farfield_iteration_floor, median, run_trial, tolerances, SerialSolver, TrialSpec};
use newton_atlas_core::orbit::quadratic_phase_budget;
use newton_atlas_core::poly::newton_step_roots;
use newton_atlas_core::{build_grid, r_central_bound, run_orbit, solve, OrbitConfig, Polynomial, Regime, SolveOptions};
use num_complex::Complex64;
use proptest::prelude::*;

fn spec(degree: usize, trial: usize, epsilon: f64) -> TrialSpec {
    TrialSpec { degree, trial, epsilon, eta: 0.25, master_seed: 31 }
}

#[test]
fn chosen_orbits_stay_central_and_respect_budgets() {
    for d in [12usize, 30] {
        for trial in 0..4 {
            let s = spec(d, trial, 1e-10);
            let p = s.polynomial();
            let report = solve(&p, &s.grid(), &s.solve_options()).unwrap();
            assert_eq!(report.unresolved_count, 0);
            assert_eq!(report.spurious_count, 0);
            assert_eq!(report.found_roots.len(), d);
            let bound = r_central_bound(d);
            for c in &report.chosen_starts {
                assert!(c.max_modulus <= bound, "{} > {bound}", c.max_modulus);
                assert_eq!(c.counts.total(), c.iterations as u64);
                let floor = farfield_iteration_floor(d, c.start.norm());
                assert!(c.iterations as f64 >= tolerances::FLOOR_FRACTION * floor as f64);
            }
            assert_eq!(report.displacement.outside_violations, 0);
        }
    }
}

#[test]
fn near_phase_fits_budget_on_dc_trials() {
    for epsilon in [1e-4, 1e-8, 1e-16] {
        let budget = quadratic_phase_budget(epsilon) + tolerances::NEAR_BUDGET_SLACK;
        for trial in 0..5 {
            let (row, report) = run_trial(&spec(20, trial, epsilon), &SerialSolver).unwrap();
            if !row.dc_holds {
                continue;
            }
            for c in &report.chosen_starts {
                assert!(c.near_phase.unwrap_or(0) <= budget, "eps {epsilon:e}: {:?}", c.near_phase);
            }
        }
    }
}

#[test]
fn far_steps_dominate_intermediate_ones() {
    let d = 40;
    let rows: Vec<_> = (0..5).map(|t| run_trial(&spec(d, t, 1e-10), &SerialSolver).unwrap().0).collect();
    let mut far: Vec<f64> = rows.iter().map(|r| r.far_steps as f64).collect();
    let mut mid: Vec<f64> = rows.iter().map(|r| r.intermediate_steps as f64).collect();
    assert!(median(&mut far) >= median(&mut mid));
}

#[test]
fn recorded_trace_regimes_match_counts() {
    let p = Polynomial::from_roots(sample_roots(15, 4)).unwrap();
    let grid = build_grid(15, 3).unwrap();
    let cfg = OrbitConfig::new(15, 1e-12).recording();
    let trace = run_orbit(&p, grid.points[0], &cfg).unwrap();
    assert!(trace.outcome.is_converged());
    assert_eq!(trace.steps.len(), trace.iterations() + 1);
    let far = trace.steps[..trace.iterations()].iter().filter(|s| s.regime == Some(Regime::Far)).count();
    assert_eq!(far as u64, trace.counts.far);
    for w in trace.steps.windows(2) {
        let disp = w[0].displacement.unwrap();
        assert_eq!(disp, (w[1].z - w[0].z).norm());
    }
    assert!(trace.steps.last().unwrap().displacement.is_none());
}

#[test]
fn coefficient_only_solve_finds_every_root() {
    let roots = sample_roots(8, 12);
    let p = Polynomial::from_roots(roots.clone()).unwrap().with_expanded_coeffs().unwrap();
    let coeff_only = Polynomial::from_coeffs(p.coeffs().unwrap().to_vec()).unwrap();
    let report = solve(&coeff_only, &build_grid(8, 5).unwrap(), &SolveOptions::new(1e-10)).unwrap();
    assert_eq!(report.found_roots.len(), 8);
    for a in &roots {
        let nearest = report.found_roots.iter().map(|f| (f.position - a).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-8, "{a}: {nearest:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outside_steps_move_more_than_one_over_d(seed in any::<u64>(), d in 2usize..60, r in 2.0001f64..50.0, theta in 0.0f64..std::f64::consts::TAU) {
        let roots = sample_roots(d, seed);
        let z = Complex64::from_polar(r, theta);
        let next = newton_step_roots(&roots, z).unwrap();
        prop_assert!((next - z).norm() > 1.0 / d as f64);
    }
}
