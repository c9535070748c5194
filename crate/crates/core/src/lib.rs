//! Oscillating steady states of two-level atoms ultrastrongly coupled to a
//! single cavity mode, in the Coulomb and electric-dipole gauges.
//!
//! - [`model`]: parameters, gauges, structure coefficients, state reconstruction
//! - [`harmonic`]: third-harmonic balance, Newton, thresholds, pump sweeps
//! - [`envelope`]: frequency-component dynamics, relaxation, stability
//! - [`sweep`]: parallel two-parameter maps

// `!(x < tol)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envelope;
pub mod error;
pub mod harmonic;
pub mod model;
pub mod sweep;

pub use error::{LaserError, Result};
pub use harmonic::{
    conventional_threshold, detect_bistability, hb_residuals, linearized_threshold,
    multistart_solve, newton_solve, pump_sweep, BranchPoint, Direction, SolverConfig,
    SweepBranch, Threshold,
};
pub use model::{
    derived_rates, reconstruct_state, structure_coefficients, validate_params, BranchKind,
    DissipationRates, Gauge, ReducedUnknowns, SteadyState, StructureCoefficients, SystemParams,
};
pub use sweep::{
    find_bistable_cavity_ceiling, map_coupling_loss, map_dephasing_coupling, map_pump_cavity,
    run_map, Axis, AxisParam, AxisScale, CellStatus, MapCell, MapResult, MapSpec, TaskKind,
};
