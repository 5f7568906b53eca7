//! Physical parameters of the Schrödinger–Poisson / QHD model.

use crate::error::{QhdError, Result};
use crate::field::RealField;
use crate::polar::HydroFields;
use crate::spectral::apply_radial_multiplier;

/// Built-in forcing potentials `g(√ρ, Λ, ∇√ρ)` entering the collision term
/// `ρ∇g` and the Schrödinger potential.
#[derive(Clone, Debug, PartialEq)]
pub enum GSpec {
    Zero,
    /// `g = c·ρ`.
    Density { coeff: f64 },
    /// `g = c·S_w(|Λ|²)`, with `S_w` a Gaussian low-pass of width `w`.
    SmoothedKineticDensity { coeff: f64, width: f64 },
}

impl GSpec {
    pub fn is_zero(&self) -> bool {
        match self {
            GSpec::Zero => true,
            GSpec::Density { coeff } | GSpec::SmoothedKineticDensity { coeff, .. } => *coeff == 0.0,
        }
    }

    /// Whether evaluation needs `Λ`.
    pub fn needs_hydro(&self) -> bool {
        matches!(self, GSpec::SmoothedKineticDensity { .. })
    }

    /// Evaluates `g` on the grid. `hydro` must be supplied when [`needs_hydro`](Self::needs_hydro).
    pub fn evaluate(&self, rho: &RealField, hydro: Option<&HydroFields>) -> RealField {
        match self {
            GSpec::Zero => RealField::zeros(rho.grid()),
            GSpec::Density { coeff } => rho.map(|r| coeff * r),
            GSpec::SmoothedKineticDensity { coeff, width } => {
                let h = hydro.expect("kinetic-density forcing needs hydrodynamic fields");
                let lam2 = crate::field::magnitude(&h.lambda).map(|v| v * v);
                let w2 = width * width;
                let smooth = apply_radial_multiplier(&lam2.to_complex(), |k2| (-0.5 * k2 * w2).exp());
                RealField::new(
                    rho.grid(),
                    smooth.values().iter().map(|c| coeff * c.re).collect(),
                )
                .expect("smoothing preserves length")
            }
        }
    }

    /// `max |g| / (1 + u⁴ + |v|^{4/3} + |w|^{4/3})` with `u = √ρ`, `v = Λ`,
    /// `w = ∇√ρ`: the constant needed in the Carathéodory growth bound.
    pub fn growth_bound_ratio(&self, g: &RealField, hydro: &HydroFields) -> f64 {
        let lam = crate::field::magnitude(&hydro.lambda);
        let grad = crate::field::magnitude(&hydro.grad_sqrt_rho);
        g.values()
            .iter()
            .enumerate()
            .map(|(i, gv)| {
                let u = hydro.sqrt_rho.values()[i];
                let denom = 1.0 + u.powi(4) + lam.values()[i].powf(4.0 / 3.0) + grad.values()[i].powf(4.0 / 3.0);
                gv.abs() / denom
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct PhysicsParams {
    pub hbar: f64,
    /// Nonlinearity / pressure exponent, `1 ≤ p < 5`.
    pub p: f64,
    /// Collision coefficient of `αJ`.
    pub alpha: f64,
    pub g: GSpec,
    /// Background charge `C(x)`.
    pub doping: Option<RealField>,
    /// Relaxation time; when set the collision coefficient becomes `α/ε`.
    pub epsilon_relax: Option<f64>,
    /// Apply the 2/3-rule filter after each nonlinear substep.
    pub dealias: bool,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            p: 3.0,
            alpha: 1.0,
            g: GSpec::Zero,
            doping: None,
            epsilon_relax: None,
            dealias: false,
        }
    }
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(QhdError::param("hbar", format!("must be positive, got {}", self.hbar)));
        }
        if !(self.p >= 1.0 && self.p < 5.0) {
            return Err(QhdError::param("p", format!("must lie in [1, 5), got {}", self.p)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(QhdError::param("alpha", format!("must be >= 0, got {}", self.alpha)));
        }
        if let Some(eps) = self.epsilon_relax {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(QhdError::param("epsilon", format!("must be positive, got {eps}")));
            }
        }
        Ok(())
    }

    /// Collision coefficient actually applied: `α`, or `α/ε` in relaxation scaling.
    pub fn effective_alpha(&self) -> f64 {
        match self.epsilon_relax {
            Some(eps) => self.alpha / eps,
            None => self.alpha,
        }
    }

    /// Damping factor applied to `Λ` at each update: `1 − α_eff τ`.
    pub fn damping_factor(&self, tau: f64) -> f64 {
        1.0 - self.effective_alpha() * tau
    }

    /// `(p − 1)/2`, the exponent of `ρ` in the Schrödinger nonlinearity.
    pub(crate) fn nonlinear_exponent(&self) -> f64 {
        0.5 * (self.p - 1.0)
    }
}
