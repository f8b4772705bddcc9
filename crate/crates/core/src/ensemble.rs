//! Random root ensembles and the two conditions on them.
//!
//! The distance condition (DC) asks for every pair of roots to be at least
//! `d^-(1+eta)` apart. The area condition (AC) asks every disk of area `A` to
//! hold at most `C_d d A` roots when `A >= 1/d` and at most `C_d` otherwise.
//! AC quantifies over all disks, so it is checked on two finite certificate
//! families instead: the equal-area partition of the unit disk into a
//! central disk and sectored annuli, and dyadic square grids covering
//! `[-1, 1]^2`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_bigint::BigUint;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::poly::ComplexPoint;
use crate::seed;

/// `d` i.i.d. uniform points in the closed unit disk: radius `sqrt(u)`,
/// uniform angle.
pub fn sample_roots(d: usize, seed: u64) -> Vec<ComplexPoint> {
    let mut rng = seed::rng_from_seed(seed);
    (0..d)
        .map(|_| {
            let r = libm::sqrt(rng.gen::<f64>());
            let theta = rng.gen::<f64>() * TAU;
            Complex64::new(r * libm::cos(theta), r * libm::sin(theta))
        })
        .collect()
}

/// Exact minimum pairwise distance by grid bucketing (expected `O(d)`).
///
/// With cell side `h`, any pair at distance `<= h` sits in the same or an
/// adjacent cell, so a neighbourhood minimum `<= h` is the global minimum.
/// Otherwise `h` doubles and the scan repeats.
pub fn min_pairwise_distance(points: &[ComplexPoint]) -> f64 {
    let n = points.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for z in points {
        lo_x = lo_x.min(z.re);
        lo_y = lo_y.min(z.im);
        hi_x = hi_x.max(z.re);
        hi_y = hi_y.max(z.im);
    }
    let span = (hi_x - lo_x).max(hi_y - lo_y);
    if span == 0.0 {
        return 0.0;
    }
    let mut h = span / libm::sqrt(n as f64);
    loop {
        let cell = |z: &ComplexPoint| {
            (
                libm::floor((z.re - lo_x) / h) as i64,
                libm::floor((z.im - lo_y) / h) as i64,
            )
        };
        let mut buckets: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for (i, z) in points.iter().enumerate() {
            buckets.entry(cell(z)).or_default().push(i);
        }
        let mut best = f64::INFINITY;
        for (&(cx, cy), members) in &buckets {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(other) = buckets.get(&(cx + dx, cy + dy)) else { continue };
                    for &i in members {
                        for &j in other.iter().filter(|&&j| j > i) {
                            best = best.min((points[i] - points[j]).norm());
                        }
                    }
                }
            }
        }
        if best <= h || h >= span {
            return best;
        }
        h *= 2.0;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DcResult {
    pub holds: bool,
    pub min_pairwise: f64,
}

/// `d^-(1+eta)`.
pub fn dc_threshold(d: usize, eta: f64) -> f64 {
    libm::pow(d as f64, -(1.0 + eta))
}

pub fn check_dc(roots: &[ComplexPoint], eta: f64) -> DcResult {
    let min_pairwise = min_pairwise_distance(roots);
    DcResult {
        holds: min_pairwise >= dc_threshold(roots.len(), eta),
        min_pairwise,
    }
}

/// Certified lower bound `exp(-d^2 r^2)` on the probability that `d` uniform
/// points in the disk are pairwise at least `r` apart; valid for
/// `d r^2 < 1/2`.
pub fn dc_probability_bound(d: usize, r: f64) -> Result<f64> {
    let df = d as f64;
    let d_r_squared = df * r * r;
    if d_r_squared >= 0.5 {
        return Err(Error::OutOfValidityRange { d_r_squared });
    }
    Ok(libm::exp(-df * df * r * r).max(0.0))
}

/// Piece layout of the equal-area partition with `(2k+1)^2` pieces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskPartition {
    pub rings: usize,
    pub inner_radius: f64,
}

impl DiskPartition {
    /// Smallest `(2k+1)^2 >= d`.
    pub fn for_degree(d: usize) -> Self {
        let mut k = 0usize;
        while (2 * k + 1) * (2 * k + 1) < d {
            k += 1;
        }
        DiskPartition {
            rings: k,
            inner_radius: 1.0 / (2 * k + 1) as f64,
        }
    }

    pub fn pieces(&self) -> usize {
        (2 * self.rings + 1) * (2 * self.rings + 1)
    }

    /// Piece index: 0 is the central disk, ring `s` contributes `8s` sectors
    /// starting at `1 + 4 s (s - 1)`.
    pub fn piece_of(&self, z: ComplexPoint) -> usize {
        let rho = z.norm() / self.inner_radius;
        if rho <= 1.0 || self.rings == 0 {
            return 0;
        }
        let s = (libm::ceil((rho - 1.0) / 2.0) as usize).clamp(1, self.rings);
        let sectors = 8 * s;
        let mut theta = libm::atan2(z.im, z.re);
        if theta < 0.0 {
            theta += TAU;
        }
        let sector = (libm::floor(theta / TAU * sectors as f64) as usize).min(sectors - 1);
        1 + 4 * s * (s - 1) + sector
    }

    pub fn counts(&self, points: &[ComplexPoint]) -> Vec<usize> {
        let mut counts = vec![0usize; self.pieces()];
        for &z in points {
            counts[self.piece_of(z)] += 1;
        }
        counts
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AcResult {
    pub holds: bool,
    /// Largest count in one partition piece.
    pub max_count_per_cell: usize,
    /// Smallest `C_d` that satisfies both certificate families.
    pub fitted_constant: f64,
}

/// Largest count over squares of side `2^j / sqrt(d)` tiling `[-1, 1]^2`,
/// divided by `4^j`, maximised over `j = 0..=ceil(log2(2 sqrt d))`.
pub fn square_family_constant(points: &[ComplexPoint]) -> f64 {
    let d = points.len();
    if d == 0 {
        return 0.0;
    }
    let root_d = libm::sqrt(d as f64);
    let levels = libm::ceil(libm::log2(2.0 * root_d)).max(0.0) as i32;
    let mut fitted = 0.0f64;
    for j in 0..=levels {
        let side = libm::ldexp(1.0, j) / root_d;
        let mut counts: BTreeMap<(i64, i64), usize> = BTreeMap::new();
        for z in points {
            let key = (
                libm::floor((z.re + 1.0) / side) as i64,
                libm::floor((z.im + 1.0) / side) as i64,
            );
            *counts.entry(key).or_default() += 1;
        }
        let worst = counts.values().copied().max().unwrap_or(0);
        // a square of area 4^j / d >= 1/d may hold C_d * 4^j roots
        fitted = fitted.max(worst as f64 / libm::ldexp(1.0, 2 * j));
    }
    fitted
}

pub fn check_ac(roots: &[ComplexPoint], c_d: f64) -> AcResult {
    let partition = DiskPartition::for_degree(roots.len());
    let max_count_per_cell = partition.counts(roots).into_iter().max().unwrap_or(0);
    let fitted_constant = (max_count_per_cell as f64).max(square_family_constant(roots));
    AcResult {
        holds: fitted_constant <= c_d,
        max_count_per_cell,
        fitted_constant,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionReport {
    pub ac_holds: bool,
    pub ac_max_count_per_cell: usize,
    pub ac_constant: f64,
    pub dc_holds: bool,
    pub dc_min_pairwise: f64,
    pub eta: f64,
}

pub fn check_conditions(roots: &[ComplexPoint], eta: f64, c_d: f64) -> ConditionReport {
    let ac = check_ac(roots, c_d);
    let dc = check_dc(roots, eta);
    ConditionReport {
        ac_holds: ac.holds,
        ac_max_count_per_cell: ac.max_count_per_cell,
        ac_constant: ac.fitted_constant,
        dc_holds: dc.holds,
        dc_min_pairwise: dc.min_pairwise,
        eta,
    }
}

/// Largest multiplicity of any digit in a base-`base` string.
pub fn max_digit_multiplicity(digits: &[usize], base: usize) -> usize {
    let mut counts = vec![0usize; base];
    for &x in digits {
        counts[x] += 1;
    }
    counts.into_iter().max().unwrap_or(0)
}

/// A uniform `d`-digit base-`d` string.
pub fn sample_digits(d: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng_from_seed(seed);
    (0..d).map(|_| rng.gen_range(0..d)).collect()
}

pub fn digit_multiplicity_trial(d: usize, seed: u64) -> usize {
    max_digit_multiplicity(&sample_digits(d, seed), d)
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, k| acc * BigUint::from(k))
}

/// The `alpha` with `(alpha - 1)! < d^2 <= alpha!`.
pub fn digit_alpha(d: usize) -> usize {
    let target = BigUint::from(d) * BigUint::from(d);
    (1..).find(|&a| factorial(a) >= target).expect("factorials grow without bound")
}

/// `d / alpha!`, the union bound on a digit repeating at least `alpha` times.
pub fn digit_tail_bound(d: usize, alpha: usize) -> f64 {
    ratio_to_f64(&BigUint::from(d), &factorial(alpha))
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of multisets of size `n` over `r` symbols, `C(n + r - 1, r - 1)`.
pub fn multiset_count(n: usize, r: usize) -> BigUint {
    assert!(r >= 1, "multiset_count needs at least one symbol");
    binomial(n + r - 1, r - 1)
}

fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    // shift both to at most 1000 bits so the f64 conversion cannot overflow
    let shift = num.bits().max(den.bits()).saturating_sub(1000);
    let to_f64 = |x: &BigUint| {
        let x = x >> shift;
        x.to_u64_digits()
            .iter()
            .rev()
            .fold(0.0f64, |acc, &limb| acc * 18446744073709551616.0 + limb as f64)
    };
    to_f64(num) / to_f64(den)
}

/// `d C(2d - alpha - 1, d - 1) / C(2d - 1, d - 1)`: probability bound for a
/// digit of multiplicity `>= alpha` in the unordered model.
pub fn multiset_tail_bound(d: usize, alpha: usize) -> f64 {
    if alpha > d {
        return 0.0;
    }
    let num = BigUint::from(d) * multiset_count(d - alpha, d);
    ratio_to_f64(&num, &multiset_count(d, d))
}

/// The closed-form relaxation `d (1/2)^(alpha-1) d / (2d - 1)`.
pub fn multiset_tail_bound_relaxed(d: usize, alpha: usize) -> f64 {
    let df = d as f64;
    df * libm::pow(0.5, alpha as f64 - 1.0) * df / (2.0 * df - 1.0)
}
