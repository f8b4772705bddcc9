//! All-roots solve: one orbit per grid point, terminal clustering, and the
//! cheapest start per recovered root.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::StartingGrid;
use crate::orbit::{default_max_iter, run_orbit, DisplacementStats, OrbitConfig, OrbitOutcome, OrbitTrace, RegimeCounts, resolution_floor, DEFAULT_ETA, STEP_STORAGE_CAP};
use crate::poly::{ComplexPoint, Polynomial};
use crate::seed;

/// Chained clusters wider than this many radii are flagged ambiguous.
pub const AMBIGUITY_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cluster {
    pub center: ComplexPoint,
    /// Indices into the terminal list, ascending.
    pub members: Vec<usize>,
    /// Twice the largest member distance from the center.
    pub extent: f64,
    pub ambiguous: bool,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index wins so the result is order-independent
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage clustering: points within `radius` of each other end up in
/// the same cluster. Clusters are ordered by their first member.
pub fn cluster_roots(terminals: &[ComplexPoint], radius: f64) -> Result<Vec<Cluster>> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter { name: "radius", value: radius });
    }
    let cell_of = |z: ComplexPoint| {
        (
            libm::floor(z.re / radius) as i64,
            libm::floor(z.im / radius) as i64,
        )
    };
    let mut cells: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, &z) in terminals.iter().enumerate() {
        cells.entry(cell_of(z)).or_default().push(i);
    }
    let mut sets = DisjointSet::new(terminals.len());
    for (i, &z) in terminals.iter().enumerate() {
        let (cx, cy) = cell_of(z);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = cells.get(&(cx + dx, cy + dy)) {
                    for &j in bucket.iter().filter(|&&j| j > i) {
                        if (terminals[j] - z).norm() <= radius {
                            sets.union(i, j);
                        }
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..terminals.len() {
        let root = sets.find(i);
        groups.entry(root).or_default().push(i);
    }
    Ok(groups
        .into_values()
        .map(|members| {
            let sum: ComplexPoint = members.iter().map(|&i| terminals[i]).sum();
            let center = sum / members.len() as f64;
            let reach = members
                .iter()
                .map(|&i| (terminals[i] - center).norm())
                .fold(0.0, f64::max);
            let extent = 2.0 * reach;
            Cluster {
                center,
                members,
                extent,
                ambiguous: extent > AMBIGUITY_FACTOR * radius,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub polynomial_id: String,
    pub epsilon: f64,
    pub eta: f64,
    /// Defaults to `max(100 eps, 1e-12)`.
    pub cluster_radius: Option<f64>,
    /// Defaults to [`default_max_iter`].
    pub max_iter: Option<usize>,
    /// Seed for the critical-point jitter.
    pub seed: u64,
}

impl SolveOptions {
    pub fn new(epsilon: f64) -> Self {
        SolveOptions {
            polynomial_id: String::from("anonymous"),
            epsilon,
            eta: DEFAULT_ETA,
            cluster_radius: None,
            max_iter: None,
            seed: 0,
        }
    }

    pub fn effective_cluster_radius(&self) -> f64 {
        self.cluster_radius.unwrap_or((100.0 * self.epsilon).max(1e-12))
    }

    /// Orbit settings for grid point `index`.
    pub fn orbit_config(&self, degree: usize, index: usize, record: bool) -> OrbitConfig {
        OrbitConfig {
            epsilon: self.epsilon,
            max_iter: self.max_iter.unwrap_or_else(|| default_max_iter(degree.max(2), self.epsilon)),
            eta: self.eta,
            record_steps: record,
            step_cap: STEP_STORAGE_CAP,
            jitter_seed: seed::derive_seed(self.seed, seed::stream::JITTER, index as u64),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoundRoot {
    pub position: ComplexPoint,
    pub cluster_radius: f64,
    pub members: usize,
    pub ambiguous: bool,
    /// Index of the known root within `epsilon`, when roots are known.
    pub matched_root: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChosenStart {
    pub grid_index: usize,
    pub iterations: usize,
    pub start: ComplexPoint,
    pub counts: RegimeCounts,
    pub near_phase: Option<usize>,
    pub max_modulus: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutcomeCounts {
    pub converged: usize,
    pub diverged: usize,
    pub stalled: usize,
    pub critical_failures: usize,
    pub jittered: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RootFindingReport {
    pub polynomial_id: String,
    pub degree: usize,
    pub epsilon: f64,
    pub found_roots: Vec<FoundRoot>,
    /// One entry per found root, aligned with `found_roots`.
    pub chosen_starts: Vec<ChosenStart>,
    pub total_iterations_chosen: u64,
    pub regime_totals: RegimeCounts,
    /// Known roots that no cluster reached. Without known roots, the
    /// degree minus the number of clusters.
    pub unresolved_count: usize,
    /// Clusters that match no known root.
    pub spurious_count: usize,
    pub orbit_outcomes: OutcomeCounts,
    /// Merged over every grid orbit.
    pub displacement: DisplacementStats,
}

/// Grid indices ordered inner circle first, the slowest orbits.
pub fn orbit_schedule(grid: &StartingGrid) -> Vec<usize> {
    let m = grid.points_per_circle;
    (0..grid.num_circles)
        .rev()
        .flat_map(|k| (k * m)..((k + 1) * m))
        .collect()
}

pub fn check_compatible(p: &Polynomial, grid: &StartingGrid) -> Result<()> {
    if p.degree() != grid.degree {
        return Err(Error::DegreeMismatch { polynomial: p.degree(), grid: grid.degree });
    }
    Ok(())
}

pub fn run_grid_orbit(p: &Polynomial, grid: &StartingGrid, index: usize, opts: &SolveOptions, record: bool) -> Result<OrbitTrace> {
    run_orbit(p, grid.points[index], &opts.orbit_config(p.degree(), index, record))
}

/// Build the report from one trace per grid point, in grid order.
pub fn assemble_report(p: &Polynomial, opts: &SolveOptions, traces: &[OrbitTrace]) -> Result<RootFindingReport> {
    let radius = opts.effective_cluster_radius();
    let mut outcomes = OutcomeCounts::default();
    let mut displacement = DisplacementStats::new(p.degree(), opts.eta);
    let mut terminals = Vec::new();
    let mut terminal_owner = Vec::new();
    for (index, trace) in traces.iter().enumerate() {
        displacement.merge(&trace.displacement);
        if trace.jittered_at.is_some() {
            outcomes.jittered += 1;
        }
        match trace.outcome {
            OrbitOutcome::Converged { position, .. } => {
                outcomes.converged += 1;
                terminals.push(position);
                terminal_owner.push(index);
            }
            OrbitOutcome::Diverged { .. } => outcomes.diverged += 1,
            OrbitOutcome::Stalled { .. } => outcomes.stalled += 1,
            OrbitOutcome::CriticalFailure { .. } => outcomes.critical_failures += 1,
        }
    }

    let clusters = cluster_roots(&terminals, radius)?;
    let known = p.roots();
    let mut found_roots = Vec::with_capacity(clusters.len());
    let mut chosen_starts = Vec::with_capacity(clusters.len());
    let mut hit = alloc::vec![false; known.map_or(0, |r| r.len())];
    let mut spurious_count = 0;
    for cluster in &clusters {
        let matched_root = known.and_then(|roots| {
            let (j, dist) = roots
                .iter()
                .enumerate()
                .map(|(j, a)| (j, (cluster.center - a).norm()))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            (dist <= opts.epsilon.max(resolution_floor(roots[j]))).then_some(j)
        });
        match matched_root {
            Some(j) => hit[j] = true,
            None if known.is_some() => spurious_count += 1,
            None => {}
        }
        // cheapest orbit; ties go to the lowest grid index
        let best = cluster
            .members
            .iter()
            .map(|&m| terminal_owner[m])
            .min_by_key(|&i| (traces[i].iterations(), i))
            .expect("clusters are nonempty");
        let trace = &traces[best];
        chosen_starts.push(ChosenStart {
            grid_index: best,
            iterations: trace.iterations(),
            start: trace.start,
            counts: trace.counts,
            near_phase: trace.near_phase_len(),
            max_modulus: trace.max_modulus,
        });
        found_roots.push(FoundRoot {
            position: cluster.center,
            cluster_radius: radius,
            members: cluster.members.len(),
            ambiguous: cluster.ambiguous,
            matched_root,
        });
    }

    let mut regime_totals = RegimeCounts::default();
    for c in &chosen_starts {
        regime_totals.merge(&c.counts);
    }
    Ok(RootFindingReport {
        polynomial_id: opts.polynomial_id.clone(),
        degree: p.degree(),
        epsilon: opts.epsilon,
        total_iterations_chosen: chosen_starts.iter().map(|c| c.iterations as u64).sum(),
        found_roots,
        chosen_starts,
        regime_totals,
        unresolved_count: match known {
            Some(_) => hit.iter().filter(|&&h| !h).count(),
            None => p.degree().saturating_sub(clusters.len()),
        },
        spurious_count,
        orbit_outcomes: outcomes,
        displacement,
    })
}

/// Serial solve over every grid point.
pub fn solve(p: &Polynomial, grid: &StartingGrid, opts: &SolveOptions) -> Result<RootFindingReport> {
    check_compatible(p, grid)?;
    let mut traces: Vec<Option<OrbitTrace>> = (0..grid.len()).map(|_| None).collect();
    for index in orbit_schedule(grid) {
        traces[index] = Some(run_grid_orbit(p, grid, index, opts, false)?);
    }
    let traces: Vec<OrbitTrace> = traces.into_iter().map(|t| t.expect("every index scheduled")).collect();
    assemble_report(p, opts, &traces)
}
