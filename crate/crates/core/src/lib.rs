//! Newton's method on monic complex polynomials whose roots lie in the closed
//! unit disk.
//!
//! The crate builds the universal circular grid of starting points, iterates
//! the Newton map from every grid point while classifying each orbit step by
//! its dyadic distance to the roots, and recovers all roots by clustering the
//! terminal points. It also samples random root ensembles and checks the
//! area and distance conditions under which the iteration counts are
//! controlled.
//!
//! Everything here is `no_std` with `alloc`; file formats, parallel runners
//! and the command line live in the companion `newton-atlas` crate.
//!
//! Roots are sampled i.i.d. uniformly in the disk. Treating them as an
//! unordered set instead of an ordered tuple pushes the same measure forward
//! to the quotient by permutations, so the sampler serves both models; the
//! combinatorial side of the unordered model is covered by
//! [`ensemble::multiset_count`].
#![no_std]

extern crate alloc;

pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod orbit;
pub mod pipeline;
pub mod poly;
pub mod seed;

pub use error::{Error, Result};
pub use grid::{build_grid, r_central_bound, LogBase, StartingGrid};
pub use orbit::{run_orbit, OrbitConfig, OrbitOutcome, OrbitStep, OrbitTrace, Regime};
pub use pipeline::{cluster_roots, solve, RootFindingReport, SolveOptions};
pub use poly::{ComplexPoint, Polynomial};
