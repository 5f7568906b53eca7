//! Strang-split integrator for
//! `iħ∂_tψ + (ħ²/2)Δψ = (|ψ|^{p−1} + V + g)ψ`, `−ΔV = |ψ|² − C`.
//!
//! A step is `P(dt/2) K(dt) P(dt/2)`. The potential substep multiplies by a
//! unimodular phase computed from the current `|ψ|`, which it leaves
//! unchanged, so it is exact and the Poisson solve inside it is consistent
//! on both ends. The kinetic substep is diagonal in Fourier space.

use num_complex::Complex64;

use crate::error::{QhdError, Result};
use crate::field::{ComplexField, RealField};
use crate::params::PhysicsParams;
use crate::polar::{default_vacuum_threshold, hydrodynamic_fields};
use crate::spectral::{dealias, real_gradient, solve_poisson, spectral_gradient};

#[derive(Clone, Debug)]
pub struct WaveState {
    pub psi: ComplexField,
    pub t: f64,
    pub hbar: f64,
}

impl WaveState {
    pub fn new(psi: ComplexField, t: f64, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(QhdError::param("hbar", format!("must be positive, got {hbar}")));
        }
        if !psi.is_finite() {
            return Err(QhdError::NonFinite {
                stage: "initial state".into(),
            });
        }
        Ok(Self { psi, t, hbar })
    }
}

/// Energy functional split into its parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyTerms {
    /// `∫ (ħ²/2)|∇ψ|²`
    pub kinetic: f64,
    /// `∫ (2/(p+1))|ψ|^{p+1}`
    pub internal: f64,
    /// `½∫|∇V|²`
    pub coulomb: f64,
    /// `½∫V(ρ − ρ̄ − C + C̄)`, equal to `coulomb` in the zero-mean gauge.
    pub coulomb_alt: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.kinetic + self.internal + self.coulomb
    }
}

#[derive(Clone, Debug, Default)]
pub struct StripDiagnostics {
    pub times: Vec<f64>,
    pub masses: Vec<f64>,
    pub energies: Vec<f64>,
    /// Every substep state, including both ends, when requested.
    pub snapshots: Vec<WaveState>,
    /// Largest `g` growth-bound ratio seen in the strip (0 when `g ≡ 0`).
    pub g_bound_ratio: f64,
}

/// Cell-volume-weighted `Σ|ψ|²`.
pub fn mass(state: &WaveState) -> f64 {
    state.psi.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * state.psi.grid().cell_volume()
}

/// Electrostatic potential of the current density.
pub fn potential(psi: &ComplexField, params: &PhysicsParams) -> RealField {
    solve_poisson(&psi.density(), params.doping.as_ref())
}

pub fn schrodinger_energy_terms(state: &WaveState, params: &PhysicsParams) -> EnergyTerms {
    let psi = &state.psi;
    let grid = psi.grid();
    let dv = grid.cell_volume();
    let h2 = state.hbar * state.hbar;

    let grad = spectral_gradient(psi);
    let kinetic = 0.5 * h2 * grad.iter().flat_map(|g| g.values()).map(|v| v.norm_sqr()).sum::<f64>() * dv;

    let power = 0.5 * (params.p + 1.0);
    let internal = 2.0 / (params.p + 1.0) * psi.values().iter().map(|v| v.norm_sqr().powf(power)).sum::<f64>() * dv;

    let rho = psi.density();
    let v = solve_poisson(&rho, params.doping.as_ref());
    let coulomb = 0.5 * crate::field::vector_l2_squared(&real_gradient(&v));

    let rho_mean = rho.mean();
    let c_mean = params.doping.as_ref().map_or(0.0, |c| c.mean());
    let coulomb_alt = 0.5
        * (0..grid.len())
            .map(|i| {
                let c = params.doping.as_ref().map_or(0.0, |c| c.values()[i]);
                v.values()[i] * (rho.values()[i] - rho_mean - c + c_mean)
            })
            .sum::<f64>()
        * dv;

    EnergyTerms {
        kinetic,
        internal,
        coulomb,
        coulomb_alt,
    }
}

pub fn schrodinger_energy(state: &WaveState, params: &PhysicsParams) -> f64 {
    schrodinger_energy_terms(state, params).total()
}

/// Potential substep: `ψ ← ψ exp(−i dt (|ψ|^{p−1} + V + g)/ħ)`.
///
/// Returns the `g` growth-bound ratio (0 when `g ≡ 0`).
pub fn potential_phase_step(psi: &mut ComplexField, dt: f64, hbar: f64, params: &PhysicsParams) -> f64 {
    let rho = psi.density();
    let v = solve_poisson(&rho, params.doping.as_ref());
    let (g, ratio) = if params.g.is_zero() {
        (None, 0.0)
    } else {
        let hydro = hydrodynamic_fields(psi, hbar, default_vacuum_threshold(psi));
        let g = params.g.evaluate(&rho, Some(&hydro));
        let ratio = params.g.growth_bound_ratio(&g, &hydro);
        (Some(g), ratio)
    };
    let e = params.nonlinear_exponent();
    let scale = -dt / hbar;
    for (i, z) in psi.values_mut().iter_mut().enumerate() {
        let r = rho.values()[i];
        let mut w = if e == 0.0 { 1.0 } else { r.powf(e) } + v.values()[i];
        if let Some(g) = &g {
            w += g.values()[i];
        }
        *z *= Complex64::from_polar(1.0, scale * w);
    }
    ratio
}

/// Free flow over `dt`: `ψ̂ ← ψ̂ exp(−iħ|k|²dt/2)`.
pub fn kinetic_step(psi: &mut ComplexField, dt: f64, hbar: f64) {
    let grid = psi.grid().clone();
    let values = psi.values_mut();
    grid.fft_forward(values);
    let c = -0.5 * hbar * dt;
    for (z, &k2) in values.iter_mut().zip(grid.k_squared()) {
        *z *= Complex64::from_polar(1.0, c * k2);
    }
    grid.fft_inverse(values);
}

fn check_finite(psi: &ComplexField, stage: &str) -> Result<()> {
    if psi.is_finite() {
        Ok(())
    } else {
        Err(QhdError::NonFinite {
            stage: format!("strang step, {stage} substep"),
        })
    }
}

/// One Strang step. Negative `dt` integrates backwards.
pub fn strang_step(state: &WaveState, dt: f64, params: &PhysicsParams) -> Result<WaveState> {
    strang_step_with_ratio(state, dt, params).map(|(s, _)| s)
}

fn strang_step_with_ratio(state: &WaveState, dt: f64, params: &PhysicsParams) -> Result<(WaveState, f64)> {
    if !(dt.is_finite() && dt != 0.0) {
        return Err(QhdError::param("dt", format!("must be finite and non-zero, got {dt}")));
    }
    let hbar = state.hbar;
    let mut psi = state.psi.clone();

    let r1 = potential_phase_step(&mut psi, 0.5 * dt, hbar, params);
    if params.dealias {
        dealias(&mut psi);
    }
    check_finite(&psi, "first potential")?;

    kinetic_step(&mut psi, dt, hbar);
    check_finite(&psi, "kinetic")?;

    let r2 = potential_phase_step(&mut psi, 0.5 * dt, hbar, params);
    if params.dealias {
        dealias(&mut psi);
    }
    check_finite(&psi, "second potential")?;

    Ok((
        WaveState {
            psi,
            t: state.t + dt,
            hbar,
        },
        r1.max(r2),
    ))
}

/// Number of substeps in a strip, requiring `tau/dt` to be an integer.
pub fn substeps_per_strip(tau: f64, dt: f64) -> Result<usize> {
    if !(tau > 0.0 && dt > 0.0 && tau.is_finite() && dt.is_finite()) {
        return Err(QhdError::param("dt", format!("tau and dt must be positive (tau={tau}, dt={dt})")));
    }
    if dt > tau * (1.0 + 1e-12) {
        return Err(QhdError::param("dt", format!("dt={dt} exceeds tau={tau}")));
    }
    let ratio = tau / dt;
    let m = ratio.round();
    if (ratio - m).abs() > 1e-9 * ratio.max(1.0) || m < 1.0 {
        return Err(QhdError::param("dt", format!("tau/dt = {ratio} is not an integer")));
    }
    Ok(m as usize)
}

/// Evolves one strip of length `tau` with `tau/dt` Strang steps.
///
/// The returned state sits at the end of the strip, before any collision update.
pub fn evolve_strip(
    state: &WaveState,
    tau: f64,
    dt: f64,
    params: &PhysicsParams,
    keep_snapshots: bool,
) -> Result<(WaveState, StripDiagnostics)> {
    let steps = substeps_per_strip(tau, dt)?;
    let h = tau / steps as f64;
    let t0 = state.t;
    let mut diag = StripDiagnostics::default();
    let mut current = state.clone();
    let record = |s: &WaveState, diag: &mut StripDiagnostics| {
        diag.times.push(s.t);
        diag.masses.push(mass(s));
        diag.energies.push(schrodinger_energy(s, params));
        if keep_snapshots {
            diag.snapshots.push(s.clone());
        }
    };
    record(&current, &mut diag);
    for j in 0..steps {
        let (mut next, ratio) = strang_step_with_ratio(&current, h, params)?;
        // pin strip times to the exact multiples
        next.t = t0 + (j + 1) as f64 * h;
        diag.g_bound_ratio = diag.g_bound_ratio.max(ratio);
        record(&next, &mut diag);
        current = next;
    }
    current.t = t0 + tau;
    if let Some(last) = diag.snapshots.last_mut() {
        last.t = current.t;
    }
    if let Some(last) = diag.times.last_mut() {
        *last = current.t;
    }
    Ok((current, diag))
}
