//! Conformal Ricci flow `u_t = e^{-2u} Δu` on the unit disc.
//!
//! The crate discretizes discs on rim-clustered polar grids, integrates the
//! flow of the log conformal factor `u` (metric `e^{2u}|dz|²`), builds
//! instantaneously complete flows from incomplete initial metrics by
//! exhausting the disc with shrinking-curvature hyperbolic caps, and checks
//! the resulting trajectories against the classical barriers, curvature
//! bounds and comparison principles.
//!
//! Numerical kernels are generic over [`Real`]; the aliases below fix the
//! scalar to `f64`, which is what persistence and the CLI use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod construction;
pub mod error;
pub mod exact;
pub mod field;
pub mod grid;
pub mod io;
pub mod linsolve;
pub mod metrics;
pub mod scalar;
pub mod solver;
pub mod verifiers;

pub use construction::{ExhaustionPlan, InitialData};
pub use error::{Error, Result};
pub use field::{field_reduce, Reduce};
pub use grid::{build_grid, GridSpec};
pub use metrics::{CutoffSpec, InitialSpec};
pub use scalar::Real;
pub use solver::{BoundaryKind, FlowConfig, PolicyRecord, Scheme};
pub use verifiers::{CheckDomain, ReportBundle, VerifierReport};

pub type DiscGrid = grid::DiscGrid<f64>;
pub type ScalarField = field::ScalarField<f64>;
pub type ConformalMetric = metrics::ConformalMetric<f64>;
pub type FlowState = solver::FlowState<f64>;
pub type Trajectory = solver::Trajectory<f64>;
pub type BoundaryPolicy = solver::BoundaryPolicy<f64>;
pub type ConstructionResult = construction::ConstructionResult<f64>;
