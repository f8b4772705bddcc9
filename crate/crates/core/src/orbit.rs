//! Newton orbits with dyadic distance classification.
//!
//! A point `z` lies in bin `S_k` when its distance to the nearest root is in
//! `(2^-(k+1), 2^-k]`. Bins group into three regimes for a degree-`d`
//! polynomial: far (`2^-k >= 1/d`), near (`2^-k < 1/(8 d^(2+eta))`) and
//! intermediate in between. Points outside the disk of radius 2 get their
//! own tag, where every Newton step moves by more than `1/d`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::r_central_bound;
use crate::poly::{is_finite, newton_step_coeffs, recip, ComplexPoint, Polynomial};
use crate::seed;

pub const DEFAULT_ETA: f64 = 0.25;

/// Steps stored per orbit before the trace switches to counters only.
pub const STEP_STORAGE_CAP: usize = 1_000_000;

/// Consecutive small steps needed to declare convergence without roots.
pub const SMALL_STEP_RUN: usize = 3;

/// Orbits leaving `DIVERGENCE_FACTOR * r_central_bound(d)` are abandoned.
pub const DIVERGENCE_FACTOR: f64 = 4.0;

const JITTER_SCALE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Regime {
    Far,
    Intermediate,
    Near,
    Outside2Disk,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::Far, Regime::Intermediate, Regime::Near, Regime::Outside2Disk];

    /// Regime of a point inside the 2-disk from its bin index alone.
    pub fn from_k(k: i32, d: usize, eta: f64) -> Regime {
        let scale = libm::ldexp(1.0, -k);
        if scale * d as f64 >= 1.0 {
            Regime::Far
        } else if scale < near_case_threshold(d, eta) {
            Regime::Near
        } else {
            Regime::Intermediate
        }
    }

    pub fn classify(z: ComplexPoint, k: Option<i32>, d: usize, eta: f64) -> Option<Regime> {
        if z.norm() > 2.0 {
            Some(Regime::Outside2Disk)
        } else {
            k.map(|k| Regime::from_k(k, d, eta))
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Far => "far",
            Regime::Intermediate => "intermediate",
            Regime::Near => "near",
            Regime::Outside2Disk => "outside",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Closest approach to `root` that double precision can certify:
/// `4 u (1 + |root|)` with `u` the unit roundoff. Tolerances below it are
/// raised to it.
pub fn resolution_floor(root: ComplexPoint) -> f64 {
    4.0 * f64::EPSILON * (1.0 + root.norm())
}

/// `1 / (8 d^(2+eta))`.
pub fn near_case_threshold(d: usize, eta: f64) -> f64 {
    1.0 / (8.0 * libm::pow(d as f64, 2.0 + eta))
}

/// `ceil(log2 |log2 eps - 5|)`, the iteration budget once quadratic
/// convergence has set in.
pub fn quadratic_phase_budget(epsilon: f64) -> usize {
    let inner = (libm::log2(epsilon) - 5.0).abs();
    libm::ceil(libm::log2(inner)).max(0.0) as usize
}

/// Lower bound on `|z_n - z_{n+1}|` under the area condition with constant
/// `c_d`: `1/d` outside the 2-disk, otherwise
/// `1 / ((1 + 2 c_d) 2^(K+1) + 16 pi c_d d)` for `z_n` in `S_K`.
pub fn displacement_lower_bound(d: usize, k: i32, c_d: f64, outside_2disk: bool) -> f64 {
    if outside_2disk {
        return 1.0 / d as f64;
    }
    let pow = libm::ldexp(1.0, k + 1);
    1.0 / ((1.0 + 2.0 * c_d) * pow + 16.0 * core::f64::consts::PI * c_d * d as f64)
}

/// The `k` with `dist in (2^-(k+1), 2^-k]`, computed from the binary
/// exponent so bin edges are exact.
pub fn dyadic_bin(dist: f64) -> i32 {
    let (mantissa, e) = libm::frexp(dist);
    // dist = mantissa * 2^e with mantissa in [0.5, 1)
    if mantissa == 0.5 {
        1 - e
    } else {
        -e
    }
}

pub fn classify_sk(z: ComplexPoint, roots: &[ComplexPoint]) -> Result<i32> {
    let dist = roots
        .iter()
        .map(|&a| (z - a).norm())
        .fold(f64::INFINITY, f64::min);
    if dist == 0.0 || !dist.is_finite() {
        return Err(Error::NotClassifiable);
    }
    Ok(dyadic_bin(dist))
}

/// One scan over the roots: the reciprocal sum, the nearest root and its
/// squared distance. `hit` is set when `z` equals a root exactly.
pub(crate) struct RootScan {
    pub sum: ComplexPoint,
    pub nearest: usize,
    pub min_dist_sq: f64,
    pub hit: bool,
}

pub(crate) fn scan_roots(z: ComplexPoint, roots: &[ComplexPoint]) -> RootScan {
    let mut scan = RootScan {
        sum: Complex64::new(0.0, 0.0),
        nearest: 0,
        min_dist_sq: f64::INFINITY,
        hit: false,
    };
    for (j, &a) in roots.iter().enumerate() {
        let w = z - a;
        let n2 = w.re * w.re + w.im * w.im;
        if n2 < scan.min_dist_sq {
            scan.min_dist_sq = n2;
            scan.nearest = j;
        }
        if w.re == 0.0 && w.im == 0.0 {
            scan.hit = true;
            continue;
        }
        scan.sum += recip(w);
    }
    scan
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrbitStep {
    pub z: ComplexPoint,
    pub k_index: Option<i32>,
    pub regime: Option<Regime>,
    /// `|z_{n+1} - z_n|`; absent on the terminal point.
    pub displacement: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum OrbitOutcome {
    /// `root` is the nearest known root, absent in coefficient-only runs.
    Converged {
        root: Option<usize>,
        position: ComplexPoint,
        iterations: usize,
    },
    Diverged { iterations: usize },
    Stalled { iterations: usize },
    CriticalFailure { iterations: usize },
}

impl OrbitOutcome {
    pub fn iterations(&self) -> usize {
        match *self {
            OrbitOutcome::Converged { iterations, .. }
            | OrbitOutcome::Diverged { iterations }
            | OrbitOutcome::Stalled { iterations }
            | OrbitOutcome::CriticalFailure { iterations } => iterations,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, OrbitOutcome::Converged { .. })
    }
}

/// Step counts by the regime of the step's source point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegimeCounts {
    pub far: u64,
    pub intermediate: u64,
    pub near: u64,
    pub outside: u64,
    /// Steps inside the 2-disk when no roots are known.
    pub unclassified: u64,
}

impl RegimeCounts {
    pub fn total(&self) -> u64 {
        self.far + self.intermediate + self.near + self.outside + self.unclassified
    }

    pub fn add(&mut self, regime: Option<Regime>) {
        match regime {
            Some(Regime::Far) => self.far += 1,
            Some(Regime::Intermediate) => self.intermediate += 1,
            Some(Regime::Near) => self.near += 1,
            Some(Regime::Outside2Disk) => self.outside += 1,
            None => self.unclassified += 1,
        }
    }

    pub fn merge(&mut self, other: &RegimeCounts) {
        self.far += other.far;
        self.intermediate += other.intermediate;
        self.near += other.near;
        self.outside += other.outside;
        self.unclassified += other.unclassified;
    }
}

/// Log-spaced displacement histogram: bin `i` covers
/// `[10^(LO + i W), 10^(LO + (i+1) W))`, end bins absorb the tails.
pub const HIST_BINS: usize = 32;
pub const HIST_LOG10_LO: f64 = -15.0;
pub const HIST_LOG10_WIDTH: f64 = 0.5;

fn hist_bin(disp: f64) -> usize {
    if disp <= 0.0 {
        return 0;
    }
    let pos = (libm::log10(disp) - HIST_LOG10_LO) / HIST_LOG10_WIDTH;
    (libm::floor(pos).max(0.0) as usize).min(HIST_BINS - 1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinStats {
    pub count: u64,
    pub min_displacement: f64,
}

/// Everything the displacement laws need, accumulated online so bulk runs
/// need not keep steps.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DisplacementStats {
    pub degree: usize,
    pub eta: f64,
    /// Steps from points with `|z| > 2`.
    pub outside_steps: u64,
    pub outside_min_displacement: f64,
    /// Outside steps with displacement `<= 1/d`.
    pub outside_violations: u64,
    /// Steps inside the 2-disk with known roots, keyed by bin index.
    pub per_bin: BTreeMap<i32, BinStats>,
    /// Histograms indexed like [`Regime::ALL`].
    pub histograms: [[u64; HIST_BINS]; 4],
}

impl DisplacementStats {
    pub fn new(degree: usize, eta: f64) -> Self {
        DisplacementStats {
            degree,
            eta,
            outside_steps: 0,
            outside_min_displacement: f64::INFINITY,
            outside_violations: 0,
            per_bin: BTreeMap::new(),
            histograms: [[0; HIST_BINS]; 4],
        }
    }

    pub fn record(&mut self, z: ComplexPoint, k: Option<i32>, disp: f64) {
        match Regime::classify(z, k, self.degree, self.eta) {
            Some(Regime::Outside2Disk) => {
                self.outside_steps += 1;
                self.outside_min_displacement = self.outside_min_displacement.min(disp);
                if disp <= 1.0 / self.degree as f64 {
                    self.outside_violations += 1;
                }
                self.histograms[Regime::Outside2Disk.slot()][hist_bin(disp)] += 1;
            }
            Some(regime) => {
                let k = k.expect("inside regimes carry a bin");
                let bin = self.per_bin.entry(k).or_insert(BinStats {
                    count: 0,
                    min_displacement: f64::INFINITY,
                });
                bin.count += 1;
                bin.min_displacement = bin.min_displacement.min(disp);
                self.histograms[regime.slot()][hist_bin(disp)] += 1;
            }
            None => {}
        }
    }

    /// Rebuild statistics from recorded steps.
    pub fn from_steps(degree: usize, eta: f64, steps: &[OrbitStep]) -> Self {
        let mut stats = DisplacementStats::new(degree, eta);
        for step in steps {
            if let Some(disp) = step.displacement {
                stats.record(step.z, step.k_index, disp);
            }
        }
        stats
    }

    pub fn merge(&mut self, other: &DisplacementStats) {
        assert_eq!(self.degree, other.degree, "merging stats of different degrees");
        self.outside_steps += other.outside_steps;
        self.outside_min_displacement = self.outside_min_displacement.min(other.outside_min_displacement);
        self.outside_violations += other.outside_violations;
        for (&k, b) in &other.per_bin {
            let mine = self.per_bin.entry(k).or_insert(BinStats {
                count: 0,
                min_displacement: f64::INFINITY,
            });
            mine.count += b.count;
            mine.min_displacement = mine.min_displacement.min(b.min_displacement);
        }
        for (mine, theirs) in self.histograms.iter_mut().zip(&other.histograms) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.outside_steps == 0 && self.per_bin.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitConfig {
    pub epsilon: f64,
    pub max_iter: usize,
    pub eta: f64,
    /// Keep every step (up to `step_cap`); counters are kept regardless.
    pub record_steps: bool,
    pub step_cap: usize,
    pub jitter_seed: u64,
}

/// `ceil(10 d^2 ln^4 d) + d * quadratic_phase_budget(eps)`.
pub fn default_max_iter(d: usize, epsilon: f64) -> usize {
    let df = d as f64;
    let ln = libm::log(df);
    let far = libm::ceil(10.0 * df * df * ln * ln * ln * ln) as usize;
    far + d * quadratic_phase_budget(epsilon)
}

impl OrbitConfig {
    pub fn new(degree: usize, epsilon: f64) -> Self {
        OrbitConfig {
            epsilon,
            max_iter: default_max_iter(degree.max(2), epsilon),
            eta: DEFAULT_ETA,
            record_steps: false,
            step_cap: STEP_STORAGE_CAP,
            jitter_seed: 0,
        }
    }

    pub fn recording(mut self) -> Self {
        self.record_steps = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitTrace {
    pub start: ComplexPoint,
    pub eta: f64,
    pub outcome: OrbitOutcome,
    /// Empty unless recording; see `truncated`.
    pub steps: Vec<OrbitStep>,
    pub truncated: bool,
    pub counts: RegimeCounts,
    /// Iteration index of the first near-regime point.
    pub first_near: Option<usize>,
    pub max_modulus: f64,
    /// Iteration at which the critical-point jitter fired.
    pub jittered_at: Option<usize>,
    pub displacement: DisplacementStats,
}

impl OrbitTrace {
    pub fn iterations(&self) -> usize {
        self.outcome.iterations()
    }

    /// Newton steps taken from the first near point on.
    pub fn near_phase_len(&self) -> Option<usize> {
        self.first_near.map(|n| self.iterations() - n)
    }
}

fn jitter(z: ComplexPoint, seed: u64) -> ComplexPoint {
    let mut rng = seed::rng_from_seed(seed::derive_seed(seed, seed::stream::JITTER, 0));
    let angle = rng.gen::<f64>() * TAU;
    z + Complex64::from_polar(JITTER_SCALE * (1.0 + z.norm()), angle)
}

enum Advance {
    Step(ComplexPoint),
    Done(OrbitOutcome),
}

/// Iterate `N_p` from `z0`.
///
/// With known roots the orbit converges once it is within `epsilon` of a
/// root, or within [`resolution_floor`] when that is larger;
/// without them, after [`SMALL_STEP_RUN`] consecutive steps shorter
/// than `epsilon (1 + |z|)`. It diverges beyond `4 r_central_bound(d)` or on
/// a non-finite value, and stalls after `max_iter` steps.
pub fn run_orbit(p: &Polynomial, z0: ComplexPoint, cfg: &OrbitConfig) -> Result<OrbitTrace> {
    if !(cfg.epsilon > 0.0 && cfg.epsilon <= 1e-2) {
        return Err(Error::InvalidParameter { name: "epsilon", value: cfg.epsilon });
    }
    if cfg.max_iter < 1 {
        return Err(Error::InvalidParameter { name: "max_iter", value: 0.0 });
    }
    if !(cfg.eta > 0.0) {
        return Err(Error::InvalidParameter { name: "eta", value: cfg.eta });
    }
    if !is_finite(z0) {
        return Err(Error::NonFinite { field: "z0", index: 0 });
    }
    let d = p.degree();
    let escape = DIVERGENCE_FACTOR * r_central_bound(d.max(2));
    let roots = p.roots();
    let mut trace = OrbitTrace {
        start: z0,
        eta: cfg.eta,
        outcome: OrbitOutcome::Stalled { iterations: 0 },
        steps: Vec::new(),
        truncated: false,
        counts: RegimeCounts::default(),
        first_near: None,
        max_modulus: z0.norm(),
        jittered_at: None,
        displacement: DisplacementStats::new(d, cfg.eta),
    };
    let mut z = z0;
    let mut n = 0usize;
    let mut small_run = 0usize;

    loop {
        if !is_finite(z) {
            trace.outcome = OrbitOutcome::Diverged { iterations: n };
            break;
        }
        let modulus = z.norm();
        trace.max_modulus = trace.max_modulus.max(modulus);

        let (k_index, advance) = match roots {
            Some(roots) => {
                let scan = scan_roots(z, roots);
                let dist = libm::sqrt(scan.min_dist_sq);
                if scan.hit || dist < cfg.epsilon.max(resolution_floor(roots[scan.nearest])) {
                    let k = (!scan.hit).then(|| dyadic_bin(dist));
                    let outcome = OrbitOutcome::Converged {
                        root: Some(scan.nearest),
                        position: z,
                        iterations: n,
                    };
                    (k, Advance::Done(outcome))
                } else if scan.sum.re == 0.0 && scan.sum.im == 0.0 {
                    (Some(dyadic_bin(dist)), Advance::Done(OrbitOutcome::CriticalFailure { iterations: n }))
                } else {
                    (Some(dyadic_bin(dist)), Advance::Step(z - recip(scan.sum)))
                }
            }
            None => {
                let coeffs = p.coeffs().expect("polynomial without roots has coefficients");
                match newton_step_coeffs(coeffs, z) {
                    Ok(next) if next == z => (
                        None,
                        Advance::Done(OrbitOutcome::Converged { root: None, position: z, iterations: n }),
                    ),
                    Ok(next) => (None, Advance::Step(next)),
                    Err(Error::CriticalPoint) => {
                        (None, Advance::Done(OrbitOutcome::CriticalFailure { iterations: n }))
                    }
                    Err(_) => (None, Advance::Done(OrbitOutcome::Diverged { iterations: n })),
                }
            }
        };
        let regime = Regime::classify(z, k_index, d, cfg.eta);
        if regime == Some(Regime::Near) && trace.first_near.is_none() {
            trace.first_near = Some(n);
        }

        let next = match advance {
            Advance::Done(OrbitOutcome::CriticalFailure { .. }) if trace.jittered_at.is_none() => {
                trace.jittered_at = Some(n);
                z = jitter(z, cfg.jitter_seed ^ n as u64);
                continue;
            }
            Advance::Done(outcome) => {
                trace.outcome = outcome;
                push_step(&mut trace, cfg, OrbitStep { z, k_index, regime, displacement: None });
                break;
            }
            Advance::Step(next) => next,
        };

        if modulus > escape {
            trace.outcome = OrbitOutcome::Diverged { iterations: n };
            push_step(&mut trace, cfg, OrbitStep { z, k_index, regime, displacement: None });
            break;
        }
        if n >= cfg.max_iter {
            trace.outcome = OrbitOutcome::Stalled { iterations: n };
            push_step(&mut trace, cfg, OrbitStep { z, k_index, regime, displacement: None });
            break;
        }

        let disp = (next - z).norm();
        trace.counts.add(regime);
        trace.displacement.record(z, k_index, disp);
        push_step(&mut trace, cfg, OrbitStep { z, k_index, regime, displacement: Some(disp) });

        if roots.is_none() {
            if disp < cfg.epsilon * (1.0 + modulus) {
                small_run += 1;
            } else {
                small_run = 0;
            }
            if small_run >= SMALL_STEP_RUN {
                trace.outcome = OrbitOutcome::Converged { root: None, position: next, iterations: n + 1 };
                push_step(&mut trace, cfg, OrbitStep { z: next, k_index: None, regime: None, displacement: None });
                break;
            }
        }
        z = next;
        n += 1;
    }
    Ok(trace)
}

fn push_step(trace: &mut OrbitTrace, cfg: &OrbitConfig, step: OrbitStep) {
    if !cfg.record_steps {
        return;
    }
    if trace.steps.len() < cfg.step_cap {
        trace.steps.push(step);
    } else {
        trace.truncated = true;
    }
}
