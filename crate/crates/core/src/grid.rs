//! The universal circular grid of starting points.
//!
//! For degree `d` the grid has `s = ceil(0.4 log d)` circles about the origin
//! with radii `r_k = (1 + sqrt 2) ((d-1)/d)^((2k-1)/(4s))`, each carrying
//! `m = ceil(8.33 d log d)` equally spaced points. Only the phase of each
//! circle depends on the seed.
//!
//! Ceilings are taken on the raw floating-point products, with no snapping
//! near integers, so counts are reproducible bit for bit.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2, TAU};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::poly::ComplexPoint;
use crate::seed;

/// Logarithm used in the circle and point counts. Natural is the default;
/// the others exist for sensitivity runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => libm::log(x),
            LogBase::Two => libm::log2(x),
            LogBase::Ten => libm::log10(x),
        }
    }
}

/// Seed reserved for deterministic golden-angle phases.
pub const GOLDEN_PHASE_SEED: u64 = 0;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StartingGrid {
    pub degree: usize,
    pub num_circles: usize,
    pub points_per_circle: usize,
    pub radii: Vec<f64>,
    pub phases: Vec<f64>,
    /// Circle-major: point `j` of circle `k` (0-based) sits at
    /// `k * points_per_circle + j`.
    pub points: Vec<ComplexPoint>,
    pub phase_seed: u64,
    pub log_base: LogBase,
}

pub fn num_circles(d: usize, base: LogBase) -> usize {
    (libm::ceil(0.4 * base.log(d as f64)) as usize).max(1)
}

pub fn points_per_circle(d: usize, base: LogBase) -> usize {
    (libm::ceil(8.33 * d as f64 * base.log(d as f64)) as usize).max(1)
}

/// `r_k` for `k = 1..=s`.
pub fn circle_radius(d: usize, k: usize, s: usize) -> f64 {
    let d = d as f64;
    let exponent = (2 * k - 1) as f64 / (4 * s) as f64;
    (1.0 + SQRT_2) * libm::pow((d - 1.0) / d, exponent)
}

fn phases_for(s: usize, m: usize, phase_seed: u64) -> Vec<f64> {
    if phase_seed == GOLDEN_PHASE_SEED {
        let golden = (libm::sqrt(5.0) - 1.0) / 2.0;
        (1..=s)
            .map(|k| libm::fmod(k as f64 * TAU * golden / m as f64, TAU))
            .collect()
    } else {
        let mut rng = seed::rng_from_seed(seed::derive_seed(phase_seed, seed::stream::GRID_PHASE, 0));
        (0..s).map(|_| rng.gen::<f64>() * TAU).collect()
    }
}

pub fn build_grid(d: usize, phase_seed: u64) -> Result<StartingGrid> {
    build_grid_with(d, phase_seed, LogBase::Natural)
}

pub fn build_grid_with(d: usize, phase_seed: u64, log_base: LogBase) -> Result<StartingGrid> {
    if d < 2 {
        return Err(Error::InvalidDegree { degree: d, min: 2 });
    }
    let s = num_circles(d, log_base);
    let m = points_per_circle(d, log_base);
    let radii: Vec<f64> = (1..=s).map(|k| circle_radius(d, k, s)).collect();
    let phases = phases_for(s, m, phase_seed);
    let step = TAU / m as f64;
    let mut points = Vec::with_capacity(s * m);
    for (&r, &phi) in radii.iter().zip(&phases) {
        points.extend((0..m).map(|j| Complex64::from_polar(r, phi + j as f64 * step)));
    }
    Ok(StartingGrid {
        degree: d,
        num_circles: s,
        points_per_circle: m,
        radii,
        phases,
        points,
        phase_seed,
        log_base,
    })
}

impl StartingGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(circle, index on circle)`, both 0-based.
    pub fn locate(&self, index: usize) -> (usize, usize) {
        (index / self.points_per_circle, index % self.points_per_circle)
    }
}

/// Upper bound `5 (d/(d-1))^ceil(5 pi (ln d + 1))` on the radius that the
/// good orbits from the grid never leave.
pub fn r_central_bound(d: usize) -> f64 {
    assert!(d >= 2, "r_central_bound needs d >= 2");
    let df = d as f64;
    let exponent = libm::ceil(5.0 * PI * (libm::log(df) + 1.0));
    5.0 * libm::pow(df / (df - 1.0), exponent)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_100_counts_and_radii() {
        let g = build_grid(100, 17).unwrap();
        assert_eq!(g.num_circles, 2);
        assert_eq!(g.points_per_circle, 3837);
        assert_eq!(g.len(), 7674);
        assert!((g.radii[0] - 2.411183).abs() < 1e-6, "{}", g.radii[0]);
        assert!((g.radii[1] - 2.405132).abs() < 1e-6, "{}", g.radii[1]);
    }

    #[test]
    fn grid_is_deterministic_and_seed_only_moves_phases() {
        let a = build_grid(37, 5).unwrap();
        assert_eq!(a, build_grid(37, 5).unwrap());
        let b = build_grid(37, 6).unwrap();
        assert_eq!(a.radii, b.radii);
        assert_ne!(a.phases, b.phases);
        let golden = build_grid(37, GOLDEN_PHASE_SEED).unwrap();
        assert_eq!(golden.radii, a.radii);
    }

    #[test]
    fn points_lie_on_their_circles_with_uniform_spacing() {
        for d in [2usize, 3, 10, 64, 250] {
            let g = build_grid(d, 9).unwrap();
            assert_eq!(g.len(), g.num_circles * g.points_per_circle);
            let step = TAU / g.points_per_circle as f64;
            for (i, z) in g.points.iter().enumerate() {
                let (k, j) = g.locate(i);
                let r = g.radii[k];
                assert!(((z.norm() - r) / r).abs() < 1e-12);
                assert!(z.norm() > 1.0);
                if j > 0 {
                    let prev = g.points[i - 1];
                    let turn = (z / prev).arg();
                    assert!((turn - step).abs() < 1e-9);
                }
            }
            for w in g.radii.windows(2) {
                assert!(w[0] > w[1]);
            }
            for &r in &g.radii {
                assert!(r > 1.0 && r < 1.0 + SQRT_2);
                if d >= 3 {
                    assert!(r > 2.0);
                }
            }
            for &phi in &g.phases {
                assert!((0.0..TAU).contains(&phi));
            }
        }
    }

    #[test]
    fn count_law() {
        for d in [100usize, 1000, 10_000] {
            let s = num_circles(d, LogBase::Natural);
            let m = points_per_circle(d, LogBase::Natural);
            let ln = libm::log(d as f64);
            let ratio = (s * m) as f64 / (3.33 * d as f64 * ln * ln);
            assert!((0.9..=1.4).contains(&ratio), "d={d} ratio={ratio}");
        }
    }

    #[test]
    fn small_degree_rejected() {
        assert_eq!(build_grid(1, 0), Err(Error::InvalidDegree { degree: 1, min: 2 }));
    }

    #[test]
    fn log_base_changes_counts() {
        let nat = build_grid_with(100, 1, LogBase::Natural).unwrap();
        let ten = build_grid_with(100, 1, LogBase::Ten).unwrap();
        assert_eq!(ten.num_circles, 1);
        assert_eq!(ten.points_per_circle, 1666);
        assert!(ten.len() < nat.len());
    }

    #[test]
    fn r_bound_values() {
        let r100 = r_central_bound(100);
        assert!((r100 - 5.0 * libm::pow(100.0 / 99.0, 89.0)).abs() < 1e-12);
        assert!((r100 - 12.23).abs() < 0.01 && r100 < 14.0);
        assert!(r_central_bound(1000) < 7.5);
        // the closed form decreases to 5 as d grows
        let big = r_central_bound(1_000_000);
        assert!(big > 5.0 && big < 5.01, "{big}");
        assert!(r_central_bound(1000) < r_central_bound(100));
    }
}
