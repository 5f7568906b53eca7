//! Polar factorization `ψ = √ρ φ` and the hydrodynamic observables built on it.
//!
//! The polar factor is `ψ/|ψ|` off the vacuum set and `0` on it. From it:
//! `∇√ρ = Re(φ̄∇ψ)`, `Λ = ħ Im(φ̄∇ψ)`, and `J = √ρ Λ = ħ Im(ψ̄∇ψ)`.
//!
//! The collision update rotates the phase by `θ ↦ (1 − s)θ` with
//! `θ = arg φ ∈ [0, 2π)`. The branch is fixed: data whose phase crosses
//! `θ = 0` inside the support see a jump there. [`cut_proximity`] reports
//! how much of the support sits near the cut.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{QhdError, Result};
use crate::field::{ComplexField, RealField, VectorField};
use crate::spectral::{real_derivative, real_gradient, spectral_gradient};

/// Relative vacuum threshold used when none is configured.
pub const DEFAULT_VACUUM_FRACTION: f64 = 1e-12;

/// Half-width of the band around the phase cut counted by [`cut_proximity`].
pub const CUT_BAND: f64 = 0.1;

/// `δ_vac = 1e−12 · max|ψ|`.
pub fn default_vacuum_threshold(psi: &ComplexField) -> f64 {
    DEFAULT_VACUUM_FRACTION * psi.max_modulus()
}

#[derive(Clone, Debug)]
pub struct PolarData {
    pub sqrt_rho: RealField,
    pub phi: ComplexField,
    pub vacuum_mask: Vec<bool>,
}

impl PolarData {
    pub fn vacuum_fraction(&self) -> f64 {
        self.vacuum_mask.iter().filter(|&&v| v).count() as f64 / self.vacuum_mask.len() as f64
    }
}

#[derive(Clone, Debug)]
pub struct HydroFields {
    pub hbar: f64,
    pub sqrt_rho: RealField,
    pub grad_sqrt_rho: VectorField,
    pub lambda: VectorField,
    pub current: VectorField,
    pub rho: RealField,
    pub vacuum_mask: Vec<bool>,
}

impl HydroFields {
    /// `‖Λ‖²_{L²}`.
    pub fn lambda_l2_squared(&self) -> f64 {
        crate::field::vector_l2_squared(&self.lambda)
    }

    /// Max off-vacuum deviation of `J` from `√ρ Λ`.
    pub fn current_consistency(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, lam) in self.current.iter().zip(&self.lambda) {
            for i in 0..j.values().len() {
                if self.vacuum_mask[i] {
                    continue;
                }
                let diff = j.values()[i] - self.sqrt_rho.values()[i] * lam.values()[i];
                worst = worst.max(diff.abs());
            }
        }
        worst
    }

    pub fn off_mask_fraction(&self) -> f64 {
        self.vacuum_mask.iter().filter(|&&v| !v).count() as f64 / self.vacuum_mask.len() as f64
    }
}

pub fn polar_factor(psi: &ComplexField, delta_vac: f64) -> PolarData {
    let grid = psi.grid();
    let mut sqrt_rho = Vec::with_capacity(grid.len());
    let mut phi = Vec::with_capacity(grid.len());
    let mut vacuum_mask = Vec::with_capacity(grid.len());
    for v in psi.values() {
        let a = v.norm();
        sqrt_rho.push(a);
        if a <= delta_vac || a == 0.0 {
            phi.push(Complex64::new(0.0, 0.0));
            vacuum_mask.push(true);
        } else {
            phi.push(v / a);
            vacuum_mask.push(false);
        }
    }
    PolarData {
        sqrt_rho: RealField::from_raw(grid, sqrt_rho),
        phi: ComplexField::from_raw(grid, phi),
        vacuum_mask,
    }
}

/// Madelung observables of `psi` from one spectral gradient.
pub fn hydrodynamic_fields(psi: &ComplexField, hbar: f64, delta_vac: f64) -> HydroFields {
    let grad = spectral_gradient(psi);
    hydro_from_gradient(psi, &grad, hbar, delta_vac)
}

pub(crate) fn hydro_from_gradient(
    psi: &ComplexField,
    grad: &[ComplexField],
    hbar: f64,
    delta_vac: f64,
) -> HydroFields {
    let grid = psi.grid();
    let polar = polar_factor(psi, delta_vac);
    let n = grid.len();
    let mut grad_sqrt_rho = Vec::with_capacity(grid.dim());
    let mut lambda = Vec::with_capacity(grid.dim());
    let mut current = Vec::with_capacity(grid.dim());
    for g in grad {
        let mut gs = vec![0.0; n];
        let mut lam = vec![0.0; n];
        let mut cur = vec![0.0; n];
        for i in 0..n {
            let dg = g.values()[i];
            let w = polar.phi.values()[i].conj() * dg;
            gs[i] = w.re;
            lam[i] = hbar * w.im;
            cur[i] = hbar * (psi.values()[i].conj() * dg).im;
        }
        grad_sqrt_rho.push(RealField::from_raw(grid, gs));
        lambda.push(RealField::from_raw(grid, lam));
        current.push(RealField::from_raw(grid, cur));
    }
    let rho = polar.sqrt_rho.map(|a| a * a);
    HydroFields {
        hbar,
        sqrt_rho: polar.sqrt_rho,
        grad_sqrt_rho,
        lambda,
        current,
        rho,
        vacuum_mask: polar.vacuum_mask,
    }
}

/// Max over off-vacuum points and index pairs of
/// `|ħ² Re(∂_j ψ̄ ∂_k ψ) − ħ² ∂_j√ρ ∂_k√ρ − Λ_j Λ_k|`.
///
/// `∂√ρ` is the spectral derivative of `|ψ|`, so the residual measures the
/// discrete identity rather than the pointwise algebra behind `Re(φ̄∇ψ)`.
pub fn null_form_residual(psi: &ComplexField, hbar: f64, delta_vac: f64) -> f64 {
    let grid = psi.grid();
    let grad = spectral_gradient(psi);
    let hydro = hydro_from_gradient(psi, &grad, hbar, delta_vac);
    let dsr = real_gradient(&hydro.sqrt_rho);
    let h2 = hbar * hbar;
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        if hydro.vacuum_mask[i] {
            continue;
        }
        for j in 0..grid.dim() {
            for k in 0..grid.dim() {
                let lhs = h2 * (grad[j].values()[i].conj() * grad[k].values()[i]).re;
                let rhs = h2 * dsr[j].values()[i] * dsr[k].values()[i]
                    + hydro.lambda[j].values()[i] * hydro.lambda[k].values()[i];
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst
}

/// Discrete L² norm of `∇∧J − 2∇√ρ∧Λ` (scalar curl in 2D, vector in 3D).
///
/// Both curls are spectral; `∇√ρ` is differentiated from `√ρ`. Returns 0 in 1D.
pub fn irrotationality_residual(h: &HydroFields) -> f64 {
    let grid = h.rho.grid();
    let dim = grid.dim();
    if dim < 2 {
        return 0.0;
    }
    let dsr = real_gradient(&h.sqrt_rho);
    // components (a, b) of the antisymmetric pairs making up the curl
    let pairs: &[(usize, usize)] = if dim == 2 { &[(0, 1)] } else { &[(1, 2), (2, 0), (0, 1)] };
    let mut sum = 0.0;
    for &(a, b) in pairs {
        let dja = real_derivative(&h.current[b], a);
        let djb = real_derivative(&h.current[a], b);
        for i in 0..grid.len() {
            let curl = dja.values()[i] - djb.values()[i];
            let wedge = dsr[a].values()[i] * h.lambda[b].values()[i] - dsr[b].values()[i] * h.lambda[a].values()[i];
            let r = curl - 2.0 * wedge;
            sum += r * r;
        }
    }
    (sum * grid.cell_volume()).sqrt()
}

/// Phase angle on the `[0, 2π)` branch.
pub fn phase_angle(z: Complex64) -> f64 {
    let t = z.im.atan2(z.re);
    if t < 0.0 {
        let w = t + TAU;
        // atan2 of a tiny negative imaginary part can round up to 2π
        if w >= TAU {
            0.0
        } else {
            w
        }
    } else {
        t
    }
}

/// `ψ̃ = √ρ e^{i(1−τ)θ}` off the vacuum set, `ψ̃ = ψ` on it.
pub fn phase_damping_update(psi: &ComplexField, tau: f64, delta_vac: f64) -> Result<ComplexField> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(QhdError::param("tau", format!("damping must lie in (0, 1), got {tau}")));
    }
    let keep = 1.0 - tau;
    let values = psi
        .values()
        .iter()
        .map(|&v| {
            let a = v.norm();
            if a <= delta_vac || a == 0.0 {
                v
            } else {
                Complex64::from_polar(a, keep * phase_angle(v))
            }
        })
        .collect();
    Ok(ComplexField::from_raw(psi.grid(), values))
}

/// Fraction of off-vacuum points whose phase lies within [`CUT_BAND`] of the branch cut.
pub fn cut_proximity(psi: &ComplexField, delta_vac: f64) -> f64 {
    let mut near = 0usize;
    let mut total = 0usize;
    for &v in psi.values() {
        if v.norm() <= delta_vac || v.norm() == 0.0 {
            continue;
        }
        total += 1;
        let t = phase_angle(v);
        if t < CUT_BAND || (TAU - t) < CUT_BAND {
            near += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        near as f64 / total as f64
    }
}

/// Circulation of the velocity `Λ/√ρ` around the axis-aligned square of
/// half-width `half_width` grid cells centred on grid index `center` (2D).
///
/// Vacuum points contribute zero. Returned in units of `2πħ`.
pub fn circulation(h: &HydroFields, center: [usize; 2], half_width: usize) -> Result<f64> {
    let grid = h.rho.grid();
    if grid.dim() != 2 {
        return Err(QhdError::Unavailable("circulation is defined for 2D grids only".into()));
    }
    let n = grid.points_per_axis();
    let hx = grid.spacing();
    let vel = |axis: usize, i0: usize, i1: usize| -> f64 {
        let flat = (i0 % n) * n + (i1 % n);
        if h.vacuum_mask[flat] {
            0.0
        } else {
            h.lambda[axis].values()[flat] / h.sqrt_rho.values()[flat]
        }
    };
    let (c0, c1) = (center[0] + n, center[1] + n);
    let (lo0, hi0, lo1, hi1) = (c0 - half_width, c0 + half_width, c1 - half_width, c1 + half_width);
    let mut gamma = 0.0;
    // counter-clockwise in the (x0, x1) plane, midpoint-free rectangle rule
    for i0 in lo0..hi0 {
        gamma += vel(0, i0, lo1) * hx;
    }
    for i1 in lo1..hi1 {
        gamma += vel(1, hi0, i1) * hx;
    }
    for i0 in (lo0 + 1..=hi0).rev() {
        gamma -= vel(0, i0, hi1) * hx;
    }
    for i1 in (lo1 + 1..=hi1).rev() {
        gamma -= vel(1, lo0, i1) * hx;
    }
    Ok(gamma / (TAU * h.hbar))
}
