use crate::field::{vector_l2_squared, RealField};
use crate::polar::HydroFields;
use crate::spectral::real_gradient;

use super::thermo::internal_energy;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QhdEnergyTerms {
    /// `∫ (ħ²/2)|∇√ρ|²`
    pub quantum: f64,
    /// `∫ ½|Λ|²`
    pub kinetic: f64,
    /// `∫ f(ρ)`
    pub internal: f64,
    /// `∫ ½|∇V|²`
    pub electrostatic: f64,
}

impl QhdEnergyTerms {
    pub fn total(&self) -> f64 {
        self.quantum + self.kinetic + self.internal + self.electrostatic
    }
}

pub fn qhd_energy_terms(h: &HydroFields, v: &RealField, p: f64) -> QhdEnergyTerms {
    QhdEnergyTerms {
        quantum: 0.5 * h.hbar * h.hbar * vector_l2_squared(&h.grad_sqrt_rho),
        kinetic: 0.5 * vector_l2_squared(&h.lambda),
        internal: internal_energy(&h.rho, p).integrate(),
        electrostatic: 0.5 * vector_l2_squared(&real_gradient(v)),
    }
}

/// Hydrodynamic energy `∫ (ħ²/2)|∇√ρ|² + ½|Λ|² + f(ρ) + ½|∇V|²`.
pub fn qhd_energy(h: &HydroFields, v: &RealField, p: f64) -> f64 {
    qhd_energy_terms(h, v, p).total()
}
