//! Space-time weak forms of the mass and momentum balance laws evaluated on
//! a fractional-step trajectory.
//!
//! Time integrals use the trapezoid rule strip by strip over the stored
//! samples, so the update jumps at strip boundaries enter through the
//! separate `kτ−` and `kτ+` samples. Space integrals are exact cell sums.

use crate::driver::Trajectory;
use crate::error::{QhdError, Result};
use crate::field::RealField;
use crate::polar::{default_vacuum_threshold, hydrodynamic_fields, HydroFields};
use crate::spectral::real_gradient;
use crate::stepper::{potential, WaveState};

use super::testfn::{SpatialTables, TestFunction};
use super::thermo::pressure;

/// Trapezoid weights for increasing sample times.
pub fn sample_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = times[i] - times[i - 1];
        w[i - 1] += 0.5 * h;
        w[i] += 0.5 * h;
    }
    w
}

fn dot_integral(a: &RealField, b: &RealField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>() * a.grid().cell_volume()
}

fn triple_integral(a: &RealField, b: &RealField, c: &RealField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .zip(c.values())
        .map(|((x, y), z)| x * y * z)
        .sum::<f64>()
        * a.grid().cell_volume()
}

fn project(v: &[RealField], d: &[f64; 3]) -> RealField {
    let grid = v[0].grid();
    let mut out = vec![0.0; grid.len()];
    for (k, comp) in v.iter().enumerate() {
        if d[k] != 0.0 {
            out.iter_mut().zip(comp.values()).for_each(|(o, c)| *o += d[k] * c);
        }
    }
    RealField::new(grid, out).expect("same grid")
}

fn hydro(state: &WaveState) -> HydroFields {
    hydrodynamic_fields(&state.psi, state.hbar, default_vacuum_threshold(&state.psi))
}

fn check_window(traj: &Trajectory, f: &TestFunction) -> Result<()> {
    let (_, hi) = f.time.support();
    let t_end = traj.final_time();
    if hi > t_end + 1e-12 * t_end.max(1.0) {
        return Err(QhdError::param(
            "test_function",
            format!("time support ends at {hi}, after the trajectory end {t_end}"),
        ));
    }
    if traj.samples.is_empty() {
        return Err(QhdError::Unavailable("trajectory has no strip samples".into()));
    }
    Ok(())
}

/// Walks every stored sample with its trapezoid weight, skipping samples
/// where the time profile and its derivative both vanish.
fn for_each_weighted_sample(
    traj: &Trajectory,
    f: &TestFunction,
    mut visit: impl FnMut(&WaveState, f64, [f64; 4]),
) {
    for strip in &traj.samples {
        let times: Vec<f64> = strip.states.iter().map(|s| s.t).collect();
        let weights = sample_weights(&times);
        for (state, w) in strip.states.iter().zip(weights) {
            let jet = f.time_jet(state.t);
            if w == 0.0 || (jet[0] == 0.0 && jet[1] == 0.0) {
                continue;
            }
            visit(state, w, jet);
        }
    }
}

/// `∫∫ ρ ∂_tη + J·∇η dx dt + ∫ ρ₀ η(0) dx`.
pub fn continuity_residual(traj: &Trajectory, eta: &TestFunction) -> Result<f64> {
    check_window(traj, eta)?;
    let tables = eta.spatial_tables(traj.grid())?;
    let mut total = 0.0;
    for_each_weighted_sample(traj, eta, |state, w, jet| {
        let h = hydro(state);
        let mass_part = dot_integral(&h.rho, &tables.value);
        let flux_part: f64 = h
            .current
            .iter()
            .zip(&tables.gradient)
            .map(|(j, g)| dot_integral(j, g))
            .sum();
        total += w * (jet[1] * mass_part + jet[0] * flux_part);
    });
    let t0 = traj.records[0].psi_minus.t;
    let eta0 = eta.time_jet(t0)[0];
    if eta0 != 0.0 {
        let rho0 = traj.records[0].psi_minus.psi.density();
        total += eta0 * dot_integral(&rho0, &tables.value);
    }
    Ok(total)
}

/// Individual contributions to the momentum weak form. Their sum is the
/// residual.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MomentumTerms {
    /// `∫∫ J·∂_tζ`
    pub time_derivative: f64,
    /// `∫∫ Λ⊗Λ : ∇ζ`
    pub convective: f64,
    /// `∫∫ P(ρ) div ζ`
    pub pressure: f64,
    /// `−∫∫ ρ∇V·ζ`
    pub electrostatic: f64,
    /// `−α∫∫ J·ζ`
    pub collision: f64,
    /// `∫∫ g (∇ρ·ζ + ρ div ζ)`
    pub forcing: f64,
    /// `ħ²∫∫ ∇√ρ⊗∇√ρ : ∇ζ`
    pub quantum_stress: f64,
    /// `−(ħ²/4)∫∫ ρ Δ div ζ`
    pub dispersive: f64,
    /// `∫ J₀·ζ(0)`
    pub initial: f64,
}

impl MomentumTerms {
    pub fn total(&self) -> f64 {
        self.time_derivative
            + self.convective
            + self.pressure
            + self.electrostatic
            + self.collision
            + self.forcing
            + self.quantum_stress
            + self.dispersive
            + self.initial
    }
}

struct MomentumIntegrand {
    time_derivative: f64,
    convective: f64,
    pressure: f64,
    electrostatic: f64,
    collision: f64,
    forcing: f64,
    quantum_stress: f64,
    dispersive: f64,
}

fn momentum_integrand(
    state: &WaveState,
    traj: &Trajectory,
    tables: &SpatialTables,
    d: &[f64; 3],
) -> MomentumIntegrand {
    let params = &traj.params;
    let h = hydro(state);
    let hbar2 = state.hbar * state.hbar;
    let j_d = project(&h.current, d);
    let lam_d = project(&h.lambda, d);
    let div_zeta = project(&tables.gradient, d);
    let lap_div_zeta = project(&tables.laplacian_gradient, d);

    let convective: f64 = h
        .lambda
        .iter()
        .zip(&tables.gradient)
        .map(|(lj, gj)| triple_integral(lj, gj, &lam_d))
        .sum();
    let grad_sqrt_d = project(&h.grad_sqrt_rho, d);
    let quantum_stress: f64 = h
        .grad_sqrt_rho
        .iter()
        .zip(&tables.gradient)
        .map(|(aj, gj)| triple_integral(aj, gj, &grad_sqrt_d))
        .sum::<f64>()
        * hbar2;

    let v = potential(&state.psi, params);
    let grad_v_d = project(&real_gradient(&v), d);

    let forcing = if params.g.is_zero() {
        0.0
    } else {
        let g = params.g.evaluate(&h.rho, Some(&h));
        let grad_rho_d = project(&real_gradient(&h.rho), d);
        triple_integral(&g, &grad_rho_d, &tables.value) + triple_integral(&g, &h.rho, &div_zeta)
    };

    MomentumIntegrand {
        time_derivative: dot_integral(&j_d, &tables.value),
        convective,
        pressure: dot_integral(&pressure(&h.rho, params.p), &div_zeta),
        electrostatic: -triple_integral(&h.rho, &grad_v_d, &tables.value),
        collision: -params.effective_alpha() * dot_integral(&j_d, &tables.value),
        forcing,
        quantum_stress,
        dispersive: -0.25 * hbar2 * dot_integral(&h.rho, &lap_div_zeta),
    }
}

/// Term-by-term momentum weak form for `ζ = η d`.
pub fn momentum_terms(traj: &Trajectory, zeta: &TestFunction) -> Result<MomentumTerms> {
    check_window(traj, zeta)?;
    let tables = zeta.spatial_tables(traj.grid())?;
    let d = zeta.direction_or_default();
    let mut out = MomentumTerms::default();
    for_each_weighted_sample(traj, zeta, |state, w, jet| {
        let i = momentum_integrand(state, traj, &tables, &d);
        out.time_derivative += w * jet[1] * i.time_derivative;
        let c = w * jet[0];
        out.convective += c * i.convective;
        out.pressure += c * i.pressure;
        out.electrostatic += c * i.electrostatic;
        out.collision += c * i.collision;
        out.forcing += c * i.forcing;
        out.quantum_stress += c * i.quantum_stress;
        out.dispersive += c * i.dispersive;
    });
    let first = &traj.records[0].psi_minus;
    let zeta0 = zeta.time_jet(first.t)[0];
    if zeta0 != 0.0 {
        let j0 = project(&hydro(first).current, &d);
        out.initial = zeta0 * dot_integral(&j0, &tables.value);
    }
    Ok(out)
}

/// Sum of the momentum weak-form terms; zero for an exact weak solution.
pub fn momentum_residual(traj: &Trajectory, zeta: &TestFunction) -> Result<f64> {
    Ok(momentum_terms(traj, zeta)?.total())
}
