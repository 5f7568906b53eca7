//! Initial wave functions.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QhdError, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::params::PhysicsParams;
use crate::stepper::{mass, schrodinger_energy, WaveState};

/// `offset + amplitude·shape(2π m·x/L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    #[serde(default)]
    pub offset: f64,
    pub amplitude: f64,
    pub modes: Vec<i64>,
    #[serde(default)]
    pub shape: Shape,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    #[default]
    Cos,
    Sin,
}

impl Profile {
    pub fn eval(&self, x: [f64; 3], l: f64) -> f64 {
        let arg: f64 = self.modes.iter().zip(x).map(|(&m, xi)| m as f64 * xi).sum::<f64>() * TAU / l;
        let s = match self.shape {
            Shape::Cos => arg.cos(),
            Shape::Sin => arg.sin(),
        };
        self.offset + self.amplitude * s
    }

    /// Gradient of the profile.
    pub fn gradient(&self, x: [f64; 3], l: f64) -> [f64; 3] {
        let arg: f64 = self.modes.iter().zip(x).map(|(&m, xi)| m as f64 * xi).sum::<f64>() * TAU / l;
        let ds = match self.shape {
            Shape::Cos => -arg.sin(),
            Shape::Sin => arg.cos(),
        };
        let mut g = [0.0; 3];
        for (gi, &m) in g.iter_mut().zip(&self.modes) {
            *gi = self.amplitude * ds * m as f64 * TAU / l;
        }
        g
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `A e^{i k·x}`; `k` must be a grid wavevector.
    PlaneWave { amplitude: f64, wavevector: Vec<f64> },
    /// `A exp(−|x−x₀|²/2σ²) exp(i(k₀·(x−x₀) + phase))`, offsets taken modulo the box.
    Gaussian {
        amplitude: f64,
        sigma: f64,
        center: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        wavevector: Option<Vec<f64>>,
        #[serde(default)]
        phase: f64,
    },
    /// `√ρ₀ e^{iS₀/ħ}`.
    Wkb { density: Profile, action: Profile },
    /// `A (r/w)^{|m|} exp(−r²/2w²) e^{imθ}` centred in the box; 2D only.
    Vortex { charge: i32, amplitude: f64, width: f64 },
    Zero,
}

#[derive(Clone, Debug)]
pub struct InitialData {
    pub state: WaveState,
    pub energy: f64,
    pub mass: f64,
}

fn wrap(d: f64, l: f64) -> f64 {
    (d + 0.5 * l).rem_euclid(l) - 0.5 * l
}

impl InitialSpec {
    pub fn name(&self) -> &'static str {
        match self {
            InitialSpec::PlaneWave { .. } => "plane_wave",
            InitialSpec::Gaussian { .. } => "gaussian",
            InitialSpec::Wkb { .. } => "wkb",
            InitialSpec::Vortex { .. } => "vortex",
            InitialSpec::Zero => "zero",
        }
    }

    pub fn validate(&self, grid: &Grid) -> std::result::Result<(), String> {
        let dim = grid.dim();
        let l = grid.box_length();
        let axes = |v: &[f64], what: &str| {
            if v.len() == dim {
                Ok(())
            } else {
                Err(format!("{what} has {} entries, grid has {dim} axes", v.len()))
            }
        };
        match self {
            InitialSpec::PlaneWave { amplitude, wavevector } => {
                axes(wavevector, "wavevector")?;
                if !amplitude.is_finite() {
                    return Err("amplitude must be finite".into());
                }
                for &k in wavevector {
                    let m = k * l / TAU;
                    if (m - m.round()).abs() > 1e-9 * m.abs().max(1.0) {
                        return Err(format!("wavevector component {k} is not a multiple of 2π/L"));
                    }
                    if m.round().abs() >= (grid.points_per_axis() / 2) as f64 {
                        return Err(format!("wavevector component {k} is not resolved on the grid"));
                    }
                }
                Ok(())
            }
            InitialSpec::Gaussian {
                amplitude,
                sigma,
                center,
                wavevector,
                phase,
            } => {
                axes(center, "center")?;
                if let Some(k) = wavevector {
                    axes(k, "wavevector")?;
                }
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(format!("sigma must be positive, got {sigma}"));
                }
                if *sigma > l / 12.0 * (1.0 + 1e-12) {
                    return Err(format!("sigma = {sigma} exceeds L/12 = {}", l / 12.0));
                }
                if !(amplitude.is_finite() && phase.is_finite()) {
                    return Err("amplitude and phase must be finite".into());
                }
                Ok(())
            }
            InitialSpec::Wkb { density, action } => {
                if density.modes.len() != dim || action.modes.len() != dim {
                    return Err(format!("profiles need {dim} modes"));
                }
                if density.offset - density.amplitude.abs() < 0.0 {
                    return Err("density profile must be non-negative".into());
                }
                Ok(())
            }
            InitialSpec::Vortex { charge, width, .. } => {
                if dim != 2 {
                    return Err(format!("vortex data needs a 2D grid, got {dim}D"));
                }
                if *charge == 0 {
                    return Err("vortex charge must be non-zero".into());
                }
                if !(*width > 0.0 && *width <= l / 12.0 * (1.0 + 1e-12)) {
                    return Err(format!("vortex width must lie in (0, L/12], got {width}"));
                }
                Ok(())
            }
            InitialSpec::Zero => Ok(()),
        }
    }

    pub fn build_field(&self, grid: &Grid, hbar: f64) -> Result<ComplexField> {
        self.validate(grid)
            .map_err(|e| QhdError::InvalidParameter { name: "initial", reason: e })?;
        let dim = grid.dim();
        let l = grid.box_length();
        let field = match self {
            InitialSpec::PlaneWave { amplitude, wavevector } => {
                let a = *amplitude;
                ComplexField::from_fn(grid, |x| {
                    let arg: f64 = wavevector.iter().zip(x).map(|(k, xi)| k * xi).sum();
                    Complex64::from_polar(a, arg)
                })
            }
            InitialSpec::Gaussian {
                amplitude,
                sigma,
                center,
                wavevector,
                phase,
            } => {
                let a = *amplitude;
                let s2 = sigma * sigma;
                ComplexField::from_fn(grid, |x| {
                    let mut r2 = 0.0;
                    let mut arg = *phase;
                    for ax in 0..dim {
                        let d = wrap(x[ax] - center[ax], l);
                        r2 += d * d;
                        if let Some(k) = wavevector {
                            arg += k[ax] * d;
                        }
                    }
                    Complex64::from_polar(a * (-0.5 * r2 / s2).exp(), arg)
                })
            }
            InitialSpec::Wkb { density, action } => ComplexField::from_fn(grid, |x| {
                let rho = density.eval(x, l).max(0.0);
                Complex64::from_polar(rho.sqrt(), action.eval(x, l) / hbar)
            }),
            InitialSpec::Vortex {
                charge,
                amplitude,
                width,
            } => {
                let m = *charge;
                let (a, w) = (*amplitude, *width);
                ComplexField::from_fn(grid, |x| {
                    let dx = wrap(x[0] - 0.5 * l, l);
                    let dy = wrap(x[1] - 0.5 * l, l);
                    let r = dx.hypot(dy);
                    let theta = dy.atan2(dx);
                    let radial = (r / w).powi(m.abs()) * (-0.5 * r * r / (w * w)).exp();
                    Complex64::from_polar(a * radial, m as f64 * theta)
                })
            }
            InitialSpec::Zero => ComplexField::zeros(grid),
        };
        if !field.is_finite() {
            return Err(QhdError::NonFinite {
                stage: "initial condition".into(),
            });
        }
        Ok(field)
    }
}

/// Builds `ψ₀` at `t = 0` and reports its energy and mass.
pub fn build_initial_condition(spec: &InitialSpec, grid: &Grid, params: &PhysicsParams) -> Result<InitialData> {
    let psi = spec.build_field(grid, params.hbar)?;
    let state = WaveState::new(psi, 0.0, params.hbar)?;
    Ok(InitialData {
        energy: schrodinger_energy(&state, params),
        mass: mass(&state),
        state,
    })
}
