//! Spectral simulator for the quantum hydrodynamics system built by
//! fractional steps: periodic split-step Schrödinger–Poisson strips
//! separated by phase-damping collision updates, with residual checks for
//! the hydrodynamic identities the construction is expected to satisfy.

pub mod driver;
pub mod error;
pub mod field;
pub mod grid;
pub mod harness;
pub mod params;
pub mod polar;
pub mod spectral;
pub mod stepper;
pub mod verification;

pub use driver::{
    collision_update, discrete_energy_ledger, run_fractional_step, LedgerReport, RunFailure, SnapshotPolicy,
    StripRecord, Trajectory,
};
pub use error::{QhdError, Result};
pub use field::{ComplexField, RealField, VectorField};
pub use grid::{make_grid, Grid};
pub use params::{GSpec, PhysicsParams};
pub use polar::{hydrodynamic_fields, phase_damping_update, polar_factor, HydroFields, PolarData};
pub use stepper::{evolve_strip, mass, schrodinger_energy, strang_step, WaveState};
