//! Single runs with diagnostics, and the τ and ε sweeps.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{discrete_energy_ledger, run_fractional_step, SnapshotPolicy, Trajectory};
use crate::field::RealField;
use crate::polar::HydroFields;
use crate::spectral::solve_poisson;
use crate::stepper::{schrodinger_energy, WaveState};
use crate::verification::{
    continuity_residual, local_smoothing_norm, momentum_residual, qhd_energy, strichartz_monitor, sample_weights,
    Exponent,
};

use super::config::{ConfigError, ConfigErrorCode, RunConfig, SnapshotConfig};
use super::initial::build_initial_condition;
use super::HarnessError;

pub const MASS_DRIFT_LIMIT: f64 = 1e-10;
pub const ENERGY_EQUIVALENCE_LIMIT: f64 = 1e-8;
pub const DENSITY_JUMP_LIMIT: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    /// Reported without a pass/fail threshold.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Diagnostic {
    fn check(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            status: if value <= threshold { Status::Pass } else { Status::Fail },
            value: Some(value),
            threshold: Some(threshold),
            detail: String::new(),
        }
    }

    fn info(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            status: Status::Info,
            value: Some(value),
            threshold: None,
            detail: String::new(),
        }
    }

    fn skipped(name: &str, why: &str) -> Self {
        Self {
            name: name.into(),
            status: Status::Skipped,
            value: None,
            threshold: None,
            detail: why.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripSummary {
    pub k: usize,
    pub time: f64,
    pub mass: f64,
    pub energy_minus: f64,
    pub energy_plus: f64,
    pub lambda_l2_minus: f64,
    pub jump: f64,
    pub bound: f64,
    pub cut_proximity: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub run_seconds: f64,
    pub diagnostics_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub config_hash: String,
    /// Periodic Poisson closure used for `V`.
    pub poisson_gauge: String,
    pub initial_condition: String,
    pub initial_energy: f64,
    pub initial_mass: f64,
    pub strips: usize,
    pub final_time: f64,
    pub warnings: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
    pub strip_rows: Vec<StripSummary>,
    pub timings: Timings,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.diagnostics.iter().all(|d| d.status != Status::Fail)
    }

    pub fn diagnostic(&self, name: &str) -> Option<&Diagnostic> {
        self.diagnostics.iter().find(|d| d.name == name)
    }

    /// Copy with timings zeroed, for reproducibility comparisons.
    pub fn without_timings(&self) -> Self {
        Self {
            timings: Timings::default(),
            ..self.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always serializable")
    }
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub trajectory: Trajectory,
    pub manifest: RunManifest,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn energy_equivalence(traj: &Trajectory) -> f64 {
    let params = &traj.params;
    let gap = |state: &WaveState, h: &HydroFields| {
        let v = solve_poisson(&h.rho, params.doping.as_ref());
        relative_gap(qhd_energy(h, &v, params.p), schrodinger_energy(state, params))
    };
    traj.records
        .iter()
        .map(|r| gap(&r.psi_minus, &r.hydro_minus).max(gap(&r.psi_plus, &r.hydro_plus)))
        .fold(0.0, f64::max)
}

fn strip_rows(traj: &Trajectory) -> Vec<StripSummary> {
    let s = traj.params.effective_alpha() * traj.tau;
    traj.records
        .iter()
        .skip(1)
        .map(|r| StripSummary {
            k: r.index,
            time: r.psi_minus.t,
            mass: r.mass,
            energy_minus: r.energy_minus,
            energy_plus: r.energy_plus,
            lambda_l2_minus: r.lambda_l2_minus,
            jump: r.energy_plus - r.energy_minus,
            bound: -0.5 * s * r.lambda_l2_minus,
            cut_proximity: r.cut_proximity,
        })
        .collect()
}

fn run_diagnostics(config: &RunConfig, traj: &Trajectory) -> Vec<Diagnostic> {
    let d = &config.diagnostics;
    let mut out = vec![Diagnostic::check("mass_drift", traj.mass_drift(), MASS_DRIFT_LIMIT)];

    if d.ledger {
        let tol = d.ledger_tolerance * traj.initial_energy.abs();
        let ledger = discrete_energy_ledger(traj, tol);
        let mut diag = Diagnostic::check("energy_ledger", ledger.worst_excess().max(0.0), tol);
        diag.status = if ledger.passed() { Status::Pass } else { Status::Fail };
        diag.detail = format!(
            "{} jump violations, {} cumulative violations",
            ledger.jump_violations, ledger.cumulative_violations
        );
        out.push(diag);
    } else {
        out.push(Diagnostic::skipped("energy_ledger", "disabled"));
    }

    out.push(Diagnostic::check("energy_equivalence", energy_equivalence(traj), ENERGY_EQUIVALENCE_LIMIT));
    let max_rho = traj.records.iter().map(|r| r.hydro_minus.rho.max_abs()).fold(0.0, f64::max);
    let jump = traj.records.iter().map(|r| r.density_jump).fold(0.0, f64::max);
    out.push(Diagnostic::check("density_continuity", jump, DENSITY_JUMP_LIMIT * max_rho));
    out.push(Diagnostic::info(
        "cut_proximity",
        traj.records.iter().map(|r| r.cut_proximity).fold(0.0, f64::max),
    ));
    if !traj.params.g.is_zero() {
        out.push(Diagnostic::info("forcing_growth_ratio", traj.g_bound_ratio));
    }

    if d.residuals {
        match config.test_function() {
            Ok(f) => {
                for (name, value) in [
                    ("continuity_residual", continuity_residual(traj, &f)),
                    ("momentum_residual", momentum_residual(traj, &f)),
                ] {
                    out.push(match value {
                        Ok(v) => {
                            let mut d = Diagnostic::info(name, v);
                            if traj.policy == SnapshotPolicy::Boundaries {
                                d.detail = "time quadrature over strip boundaries only".into();
                            }
                            d
                        }
                        Err(e) => Diagnostic::skipped(name, &e.to_string()),
                    });
                }
            }
            Err(e) => {
                out.push(Diagnostic::skipped("continuity_residual", &e));
                out.push(Diagnostic::skipped("momentum_residual", &e));
            }
        }
    } else {
        out.push(Diagnostic::skipped("continuity_residual", "disabled"));
        out.push(Diagnostic::skipped("momentum_residual", "disabled"));
    }

    let monitor_names = ["strichartz_inf_2", "strichartz_2_6", "local_smoothing"];
    if !d.monitors {
        out.extend(monitor_names.iter().map(|n| Diagnostic::skipped(n, "disabled")));
    } else if traj.policy != SnapshotPolicy::Substeps {
        out.extend(
            monitor_names
                .iter()
                .map(|n| Diagnostic::skipped(n, "needs substep snapshots")),
        );
    } else {
        let pairs = [
            (Exponent::Infinity, Exponent::integer(2)),
            (Exponent::integer(2), Exponent::integer(6)),
        ];
        match strichartz_monitor(traj, &pairs) {
            Ok(reports) => {
                for (name, rep) in monitor_names.iter().zip(reports) {
                    out.push(Diagnostic::info(name, rep.value));
                }
            }
            Err(e) => {
                out.push(Diagnostic::skipped(monitor_names[0], &e.to_string()));
                out.push(Diagnostic::skipped(monitor_names[1], &e.to_string()));
            }
        }
        let smoothing = config
            .test_function()
            .and_then(|f| local_smoothing_norm(traj, &f).map_err(|e| e.to_string()));
        out.push(match smoothing {
            Ok(v) => Diagnostic::info(monitor_names[2], v),
            Err(e) => Diagnostic::skipped(monitor_names[2], &e),
        });
    }
    out
}

/// Validates `config`, builds the initial data, runs the fractional-step
/// scheme and evaluates every enabled diagnostic.
pub fn run_experiment(config: &RunConfig) -> Result<Experiment, HarnessError> {
    let warnings = config.validate()?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let grid = config.grid()?;
    let params = config.physics_params(&grid)?;
    let init = build_initial_condition(&config.initial, &grid, &params)?;
    log::info!(
        "{} data: E0 = {:.6e}, mass = {:.6e}",
        config.initial.name(),
        init.energy,
        init.mass
    );

    let started = Instant::now();
    let traj = run_fractional_step(
        &init.state,
        config.time.final_time,
        config.time.tau,
        config.dt(),
        &params,
        config.diagnostics.snapshots.into(),
    )?;
    let run_seconds = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let diagnostics = run_diagnostics(config, &traj);
    let diagnostics_seconds = started.elapsed().as_secs_f64();

    let manifest = RunManifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        poisson_gauge: "periodic, neutralizing mean subtracted (zero-mean V)".into(),
        initial_condition: config.initial.name().into(),
        initial_energy: traj.initial_energy,
        initial_mass: traj.initial_mass,
        strips: traj.strip_count(),
        final_time: traj.final_time(),
        warnings,
        diagnostics,
        strip_rows: strip_rows(&traj),
        timings: Timings {
            run_seconds,
            diagnostics_seconds,
        },
        config: config.clone(),
    };
    Ok(Experiment {
        trajectory: traj,
        manifest,
    })
}

fn sweep_error(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(ConfigError::new(ConfigErrorCode::Sweep, msg))
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| sweep_error(format!("cannot start worker pool: {e}")))
}

/// Least-squares slope of `log|y|` against `log x`.
pub fn fit_order(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, v)| v.abs() > 0.0)
        .map(|(a, v)| (a.ln(), v.abs().ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `(∫ ‖f_a(t) − f_b(t)‖²_{L²} dt)^{1/2}` over paired samples at shared times.
fn l2_time_distance(times: &[f64], a: &[RealField], b: &[RealField]) -> f64 {
    sample_weights(times)
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (fa, fb))| w * fa.l2_distance(fb).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauStudy {
    pub taus: Vec<f64>,
    pub continuity: Vec<f64>,
    pub momentum: Vec<f64>,
    pub continuity_order: f64,
    pub momentum_order: f64,
    /// `‖√ρ^{τ_i} − √ρ^{τ_{i+1}}‖_{L²_t L²_x}` at the coarser strip boundaries.
    pub cauchy: Vec<f64>,
    pub mass_drifts: Vec<f64>,
}

/// Runs `config` once per `τ`, keeping `τ/dt` fixed and storing every
/// substep, and tabulates the weak-form residuals and Cauchy distances.
pub fn tau_convergence_study(config: &RunConfig, taus: &[f64]) -> Result<TauStudy, HarnessError> {
    if taus.len() < 3 {
        return Err(sweep_error(format!("need at least 3 tau values, got {}", taus.len())));
    }
    let mut taus = taus.to_vec();
    taus.sort_by(|a, b| b.total_cmp(a));
    let ratio = taus[0] / taus[1];
    for w in taus.windows(2) {
        let r = w[0] / w[1];
        if !(r > 1.0) || (r - ratio).abs() > 1e-9 * ratio {
            return Err(sweep_error(format!("tau values {taus:?} are not a geometric progression")));
        }
    }
    if (ratio - ratio.round()).abs() > 1e-9 * ratio {
        return Err(sweep_error(format!("tau ratio {ratio} must be an integer")));
    }
    let q = ratio.round() as usize;
    let substeps = (config.time.tau / config.dt()).round();
    let configs: Vec<RunConfig> = taus
        .iter()
        .map(|&tau| {
            let mut c = config.clone();
            c.time.tau = tau;
            c.time.dt = Some(tau / substeps);
            c.diagnostics.monitors = false;
            // residual quadrature needs every substep
            c.diagnostics.snapshots = SnapshotConfig::Substeps;
            c
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let f = config
        .test_function()
        .map_err(|e| HarnessError::Config(ConfigError::new(ConfigErrorCode::Diagnostics, e)))?;

    let pool = thread_pool(config.run.threads)?;
    let runs: Vec<Result<(Trajectory, f64, f64), HarnessError>> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| {
                let grid = c.grid()?;
                let params = c.physics_params(&grid)?;
                let init = build_initial_condition(&c.initial, &grid, &params)?;
                let traj = run_fractional_step(
                    &init.state,
                    c.time.final_time,
                    c.time.tau,
                    c.dt(),
                    &params,
                    c.diagnostics.snapshots.into(),
                )?;
                let cr = continuity_residual(&traj, &f)?;
                let mr = momentum_residual(&traj, &f)?;
                Ok((traj, cr, mr))
            })
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;

    let continuity: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let momentum: Vec<f64> = runs.iter().map(|r| r.2).collect();
    let cauchy = runs
        .windows(2)
        .map(|w| {
            let (coarse, fine) = (&w[0].0, &w[1].0);
            let n = coarse.records.len().min((fine.records.len() - 1) / q + 1);
            let times: Vec<f64> = coarse.records[..n].iter().map(|r| r.psi_plus.t).collect();
            let a: Vec<RealField> = coarse.records[..n].iter().map(|r| r.hydro_plus.sqrt_rho.clone()).collect();
            let b: Vec<RealField> = (0..n).map(|k| fine.records[k * q].hydro_plus.sqrt_rho.clone()).collect();
            l2_time_distance(&times, &a, &b)
        })
        .collect();
    Ok(TauStudy {
        continuity_order: fit_order(&taus, &continuity),
        momentum_order: fit_order(&taus, &momentum),
        mass_drifts: runs.iter().map(|r| r.0.mass_drift()).collect(),
        taus,
        continuity,
        momentum,
        cauchy,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationStudy {
    pub epsilons: Vec<f64>,
    /// `‖ρ^{ε_i} − ρ^{ε_{i+1}}‖_{L²_t L²_x}` at strip boundaries.
    pub distances: Vec<f64>,
    /// Time average of `‖J^ε‖_{L²}`.
    pub current_averages: Vec<f64>,
    pub current_monotone: bool,
}

/// Runs `config` once per relaxation time `ε` (decreasing, each `> ατ`).
pub fn relaxation_sweep(config: &RunConfig, epsilons: &[f64]) -> Result<RelaxationStudy, HarnessError> {
    if epsilons.len() < 2 {
        return Err(sweep_error(format!("need at least 2 epsilon values, got {}", epsilons.len())));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(sweep_error(format!("epsilon values {epsilons:?} must be strictly decreasing")));
    }
    let limit = config.physics.alpha * config.time.tau;
    if let Some(&bad) = epsilons.iter().find(|&&e| !(e > limit)) {
        return Err(sweep_error(format!("epsilon {bad} must exceed alpha*tau = {limit}")));
    }
    let configs: Vec<RunConfig> = epsilons
        .iter()
        .map(|&e| {
            let mut c = config.clone();
            c.physics.epsilon = Some(e);
            c
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let pool = thread_pool(config.run.threads)?;
    let runs: Vec<Result<Trajectory, HarnessError>> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| {
                let grid = c.grid()?;
                let params = c.physics_params(&grid)?;
                let init = build_initial_condition(&c.initial, &grid, &params)?;
                Ok(run_fractional_step(
                    &init.state,
                    c.time.final_time,
                    c.time.tau,
                    c.dt(),
                    &params,
                    SnapshotPolicy::Boundaries,
                )?)
            })
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;

    let times: Vec<f64> = runs[0].records.iter().map(|r| r.psi_plus.t).collect();
    let span = times.last().copied().unwrap_or(0.0) - times[0];
    let distances = runs
        .windows(2)
        .map(|w| {
            let a: Vec<RealField> = w[0].records.iter().map(|r| r.hydro_plus.rho.clone()).collect();
            let b: Vec<RealField> = w[1].records.iter().map(|r| r.hydro_plus.rho.clone()).collect();
            l2_time_distance(&times, &a, &b)
        })
        .collect();
    let current_averages: Vec<f64> = runs
        .iter()
        .map(|t| {
            let norms: Vec<f64> = t
                .records
                .iter()
                .map(|r| crate::field::vector_l2_squared(&r.hydro_plus.current).sqrt())
                .collect();
            let integral: f64 = sample_weights(&times).iter().zip(&norms).map(|(w, n)| w * n).sum();
            if span > 0.0 {
                integral / span
            } else {
                0.0
            }
        })
        .collect();
    let current_monotone = current_averages.windows(2).all(|w| w[1] <= w[0]);
    Ok(RelaxationStudy {
        epsilons: epsilons.to_vec(),
        distances,
        current_averages,
        current_monotone,
    })
}
