//! Fractional-step construction: strips of collisionless Schrödinger–Poisson
//! flow separated by phase-damping updates at `t = kτ`, plus the discrete
//! energy ledger.
//!
//! Record `k = 0` is the initial state (no update). Record `k ≥ 1` holds the
//! states just before (`kτ−`) and just after (`kτ+`) the `k`-th update.

use crate::error::{QhdError, Result};
use crate::params::PhysicsParams;
use crate::polar::{cut_proximity, default_vacuum_threshold, hydrodynamic_fields, phase_damping_update, HydroFields};
use crate::stepper::{evolve_strip, mass, schrodinger_energy, substeps_per_strip, WaveState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotPolicy {
    /// Keep only the strip-boundary states.
    Boundaries,
    /// Keep every substep state (needed by the dispersive monitors).
    Substeps,
}

#[derive(Clone, Debug)]
pub struct StripRecord {
    pub index: usize,
    pub psi_minus: WaveState,
    pub psi_plus: WaveState,
    pub hydro_minus: HydroFields,
    pub hydro_plus: HydroFields,
    pub energy_minus: f64,
    pub energy_plus: f64,
    /// `‖Λ(kτ−)‖²_{L²}`
    pub lambda_l2_minus: f64,
    pub mass: f64,
    /// Fraction of the support within the phase-cut band before the update.
    pub cut_proximity: f64,
    /// Max `|ρ(kτ+) − ρ(kτ−)|`.
    pub density_jump: f64,
}

/// Time-ordered states inside one strip, from `kτ+` to `(k+1)τ−`.
#[derive(Clone, Debug)]
pub struct StripSamples {
    pub strip: usize,
    pub states: Vec<WaveState>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: PhysicsParams,
    pub tau: f64,
    pub dt: f64,
    pub records: Vec<StripRecord>,
    pub initial_energy: f64,
    pub initial_mass: f64,
    pub policy: SnapshotPolicy,
    pub samples: Vec<StripSamples>,
    /// Per-substep mass and energy, all strips concatenated.
    pub substep_times: Vec<f64>,
    pub substep_masses: Vec<f64>,
    pub substep_energies: Vec<f64>,
    pub g_bound_ratio: f64,
}

impl Trajectory {
    pub fn strip_count(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.psi_plus.t)
    }

    pub fn grid(&self) -> &crate::grid::Grid {
        self.records[0].psi_minus.psi.grid()
    }

    /// Largest relative mass deviation from the initial mass over every stored instant.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.initial_mass;
        let scale = if m0 > 0.0 { m0 } else { 1.0 };
        self.substep_masses
            .iter()
            .chain(self.records.iter().map(|r| &r.mass))
            .fold(0.0, |w: f64, m| w.max((m - m0).abs() / scale))
    }
}

/// Failure inside a run; keeps what was computed for post-mortem.
#[derive(Debug)]
pub struct RunFailure {
    pub partial: Box<Trajectory>,
    pub source: QhdError,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "run failed after {} strips: {}",
            self.partial.strip_count(),
            self.source
        )
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Applies the collision update: phase damping by `α_eff τ`, identity when `α = 0`.
pub fn collision_update(state: &WaveState, tau: f64, params: &PhysicsParams) -> Result<WaveState> {
    let s = params.effective_alpha() * tau;
    if s >= 1.0 {
        return Err(QhdError::param(
            "alpha",
            format!("alpha_eff * tau = {s} must be < 1"),
        ));
    }
    if s <= 0.0 {
        return Ok(state.clone());
    }
    let psi = phase_damping_update(&state.psi, s, default_vacuum_threshold(&state.psi))?;
    Ok(WaveState {
        psi,
        t: state.t,
        hbar: state.hbar,
    })
}

fn make_record(index: usize, minus: WaveState, plus: WaveState, params: &PhysicsParams) -> StripRecord {
    let hm = hydrodynamic_fields(&minus.psi, minus.hbar, default_vacuum_threshold(&minus.psi));
    let hp = hydrodynamic_fields(&plus.psi, plus.hbar, default_vacuum_threshold(&plus.psi));
    let density_jump = hm.rho.max_distance(&hp.rho);
    StripRecord {
        index,
        energy_minus: schrodinger_energy(&minus, params),
        energy_plus: schrodinger_energy(&plus, params),
        lambda_l2_minus: hm.lambda_l2_squared(),
        mass: mass(&plus),
        cut_proximity: cut_proximity(&minus.psi, default_vacuum_threshold(&minus.psi)),
        density_jump,
        hydro_minus: hm,
        hydro_plus: hp,
        psi_minus: minus,
        psi_plus: plus,
    }
}

/// Runs strips of length `tau` up to `t_final` (rounded up to a whole strip).
pub fn run_fractional_step(
    psi0: &WaveState,
    t_final: f64,
    tau: f64,
    dt: f64,
    params: &PhysicsParams,
    policy: SnapshotPolicy,
) -> std::result::Result<Trajectory, RunFailure> {
    let early = |source: QhdError| RunFailure {
        partial: Box::new(empty_trajectory(psi0, tau, dt, params, policy)),
        source,
    };
    params.validate().map_err(early)?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(early(QhdError::param("t_final", format!("must be positive, got {t_final}"))));
    }
    if tau > t_final * (1.0 + 1e-12) {
        return Err(early(QhdError::param("tau", format!("tau={tau} exceeds T={t_final}"))));
    }
    substeps_per_strip(tau, dt).map_err(early)?;
    if params.effective_alpha() * tau >= 1.0 {
        return Err(early(QhdError::param("alpha", "alpha_eff * tau must be < 1")));
    }

    let strips = ((t_final / tau) - 1e-9).ceil().max(1.0) as usize;
    let mut traj = empty_trajectory(psi0, tau, dt, params, policy);
    let mut current = psi0.clone();
    for k in 0..strips {
        let (end, diag) = match evolve_strip(&current, tau, dt, params, policy == SnapshotPolicy::Substeps) {
            Ok(v) => v,
            Err(source) => {
                return Err(RunFailure {
                    partial: Box::new(traj),
                    source,
                })
            }
        };
        traj.substep_times.extend_from_slice(&diag.times);
        traj.substep_masses.extend_from_slice(&diag.masses);
        traj.substep_energies.extend_from_slice(&diag.energies);
        traj.g_bound_ratio = traj.g_bound_ratio.max(diag.g_bound_ratio);
        let states = match policy {
            SnapshotPolicy::Substeps => diag.snapshots,
            SnapshotPolicy::Boundaries => vec![current.clone(), end.clone()],
        };
        traj.samples.push(StripSamples { strip: k, states });

        let minus = end;
        let plus = match collision_update(&minus, tau, params) {
            Ok(p) => p,
            Err(source) => {
                return Err(RunFailure {
                    partial: Box::new(traj),
                    source,
                })
            }
        };
        traj.records.push(make_record(k + 1, minus, plus.clone(), params));
        current = plus;
    }
    Ok(traj)
}

fn empty_trajectory(
    psi0: &WaveState,
    tau: f64,
    dt: f64,
    params: &PhysicsParams,
    policy: SnapshotPolicy,
) -> Trajectory {
    let first = make_record(0, psi0.clone(), psi0.clone(), params);
    Trajectory {
        params: params.clone(),
        tau,
        dt,
        initial_energy: first.energy_minus,
        initial_mass: first.mass,
        records: vec![first],
        policy,
        samples: Vec::new(),
        substep_times: Vec::new(),
        substep_masses: Vec::new(),
        substep_energies: Vec::new(),
        g_bound_ratio: 0.0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpRow {
    pub k: usize,
    pub jump: f64,
    /// `−(s/2)‖Λ(kτ−)‖²` with `s = α_eff τ`.
    pub bound: f64,
    /// `((1 − s)² − 1)/2 · ‖Λ(kτ−)‖²`, the jump of the exact update.
    pub exact: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CumulativeRow {
    pub k: usize,
    pub energy_minus: f64,
    pub bound_minus: f64,
    pub energy_plus: f64,
    pub bound_plus: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerReport {
    pub tolerance: f64,
    pub jumps: Vec<JumpRow>,
    pub cumulative: Vec<CumulativeRow>,
    pub jump_violations: usize,
    pub cumulative_violations: usize,
    /// The remainder terms of the approximate update are identically zero
    /// with the exact pointwise update; reported for completeness.
    pub remainder_norm: f64,
}

impl LedgerReport {
    pub fn passed(&self) -> bool {
        self.jump_violations == 0 && self.cumulative_violations == 0
    }

    /// Largest `jump − bound` over all updates (≤ tolerance when passing).
    pub fn worst_excess(&self) -> f64 {
        self.jumps.iter().map(|j| j.jump - j.bound).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Checks every update jump against `−(s/2)‖Λ(kτ−)‖²` and the cumulative
/// bound `E(t) ≤ −(s/2)Σ_{j≤N}‖Λ(jτ−)‖² + (1 + τ)E₀` at each boundary,
/// both with additive slack `tolerance`.
pub fn discrete_energy_ledger(traj: &Trajectory, tolerance: f64) -> LedgerReport {
    let s = traj.params.effective_alpha() * traj.tau;
    let e0 = traj.initial_energy;
    let ceiling = (1.0 + traj.tau) * e0;
    let mut jumps = Vec::new();
    let mut cumulative = Vec::new();
    let mut dissipated = 0.0;
    for r in traj.records.iter().skip(1) {
        let lam2 = r.lambda_l2_minus;
        let jump = r.energy_plus - r.energy_minus;
        let bound = -0.5 * s * lam2;
        let exact = 0.5 * ((1.0 - s).powi(2) - 1.0) * lam2;
        let violation = jump > bound + tolerance;
        jumps.push(JumpRow {
            k: r.index,
            jump,
            bound,
            exact,
            violation,
        });

        let bound_minus = ceiling - 0.5 * s * dissipated;
        dissipated += lam2;
        let bound_plus = ceiling - 0.5 * s * dissipated;
        let violation = r.energy_minus > bound_minus + tolerance || r.energy_plus > bound_plus + tolerance;
        cumulative.push(CumulativeRow {
            k: r.index,
            energy_minus: r.energy_minus,
            bound_minus,
            energy_plus: r.energy_plus,
            bound_plus,
            violation,
        });
    }
    LedgerReport {
        tolerance,
        jump_violations: jumps.iter().filter(|j| j.violation).count(),
        cumulative_violations: cumulative.iter().filter(|c| c.violation).count(),
        jumps,
        cumulative,
        remainder_norm: 0.0,
    }
}
