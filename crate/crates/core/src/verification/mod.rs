//! Computable residuals for the hydrodynamic identities and the
//! dispersive-norm monitors.

mod bohm;
mod energy;
mod norms;
mod testfn;
mod thermo;
mod weak;

pub use bohm::{bohm_form_residual, bohm_forms, BohmForms};
pub use energy::{qhd_energy, qhd_energy_terms, QhdEnergyTerms};
pub use norms::{
    admissible_pair_check, local_smoothing_norm, local_smoothing_weighted, mixed_norm, strichartz_monitor, Exponent,
    NormReport, TimedField,
};
pub use testfn::{CosineBump, SpatialTables, TestFunction};
pub use thermo::{internal_energy, pressure};
pub use weak::{continuity_residual, momentum_residual, momentum_terms, sample_weights, MomentumTerms};
