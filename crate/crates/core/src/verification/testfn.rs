//! Separable space-time test functions built from a raised-cosine window.
//!
//! The 1D profile is `b(u) = ((1 + cos πu)/2)²` on `|u| < 1` and zero outside.
//! It is `C³` across the support boundary, where the value and the first
//! three derivatives all vanish.

use std::f64::consts::PI;

use crate::error::{QhdError, Result};
use crate::field::{RealField, VectorField};
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineBump {
    pub center: f64,
    pub radius: f64,
}

impl CosineBump {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && center.is_finite()) {
            return Err(QhdError::param("radius", format!("bump radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// Value and first three derivatives at offset `u` from the center, in
    /// units of `s` (not `u/r`).
    fn jet_at_offset(&self, offset: f64) -> [f64; 4] {
        let r = self.radius;
        let u = offset / r;
        if u.abs() >= 1.0 {
            return [0.0; 4];
        }
        let (s, c) = (PI * u).sin_cos();
        let d0 = 0.25 * (1.0 + c) * (1.0 + c);
        let d1 = -0.5 * PI * (1.0 + c) * s;
        let d2 = 0.5 * PI * PI * (1.0 - c - 2.0 * c * c);
        let d3 = 0.5 * PI.powi(3) * s * (1.0 + 4.0 * c);
        [d0, d1 / r, d2 / (r * r), d3 / (r * r * r)]
    }

    /// Value and first three derivatives at `s`.
    pub fn jet(&self, s: f64) -> [f64; 4] {
        self.jet_at_offset(s - self.center)
    }

    /// Same as [`jet`](Self::jet) with the offset wrapped into `[−P/2, P/2)`.
    pub fn jet_periodic(&self, s: f64, period: f64) -> [f64; 4] {
        let off = (s - self.center + 0.5 * period).rem_euclid(period) - 0.5 * period;
        self.jet_at_offset(off)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// `η(t, x) = b_t(t) Π_i b_i(x_i)`, optionally carrying a fixed direction
/// `d` so that `ζ = η d`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub time: CosineBump,
    pub space: Vec<CosineBump>,
    pub direction: Option<[f64; 3]>,
}

/// Spatial factor of a test function sampled on a grid.
#[derive(Clone, Debug)]
pub struct SpatialTables {
    pub value: RealField,
    pub gradient: VectorField,
    /// `Δ ∂_k S` for each axis `k`.
    pub laplacian_gradient: VectorField,
}

impl TestFunction {
    pub fn scalar(time: CosineBump, space: Vec<CosineBump>) -> Result<Self> {
        if space.is_empty() || space.len() > 3 {
            return Err(QhdError::param("space", "one bump per axis, 1 to 3 axes"));
        }
        Ok(Self {
            time,
            space,
            direction: None,
        })
    }

    pub fn vector(time: CosineBump, space: Vec<CosineBump>, direction: [f64; 3]) -> Result<Self> {
        let mut f = Self::scalar(time, space)?;
        if direction.iter().any(|d| !d.is_finite()) {
            return Err(QhdError::param("direction", "must be finite"));
        }
        f.direction = Some(direction);
        Ok(f)
    }

    pub fn time_jet(&self, t: f64) -> [f64; 4] {
        self.time.jet(t)
    }

    pub fn direction_or_default(&self) -> [f64; 3] {
        self.direction.unwrap_or([1.0, 0.0, 0.0])
    }

    /// Samples the spatial factor and its derivatives on `grid`.
    pub fn spatial_tables(&self, grid: &Grid) -> Result<SpatialTables> {
        let dim = grid.dim();
        if self.space.len() != dim {
            return Err(QhdError::param(
                "space",
                format!("test function has {} axes, grid has {dim}", self.space.len()),
            ));
        }
        let l = grid.box_length();
        if let Some(b) = self.space.iter().find(|b| b.radius > 0.5 * l) {
            return Err(QhdError::param(
                "radius",
                format!("spatial radius {} exceeds half the box {}", b.radius, 0.5 * l),
            ));
        }
        let n = grid.len();
        let mut value = vec![0.0; n];
        let mut gradient = vec![vec![0.0; n]; dim];
        let mut lap_grad = vec![vec![0.0; n]; dim];
        for (idx, v) in value.iter_mut().enumerate() {
            let x = grid.coordinates(idx);
            let jets: Vec<[f64; 4]> = (0..dim).map(|a| self.space[a].jet_periodic(x[a], l)).collect();
            let mixed = |orders: &[usize]| -> f64 { (0..dim).map(|a| jets[a][orders[a]]).product() };
            let mut orders = [0usize; 3];
            *v = mixed(&orders[..dim]);
            for k in 0..dim {
                orders = [0; 3];
                orders[k] = 1;
                gradient[k][idx] = mixed(&orders[..dim]);
                let mut acc = 0.0;
                for j in 0..dim {
                    let mut o = [0usize; 3];
                    o[k] += 1;
                    o[j] += 2;
                    acc += mixed(&o[..dim]);
                }
                lap_grad[k][idx] = acc;
            }
        }
        let wrap = |v: Vec<f64>| RealField::new(grid, v);
        Ok(SpatialTables {
            value: wrap(value)?,
            gradient: gradient.into_iter().map(wrap).collect::<Result<_>>()?,
            laplacian_gradient: lap_grad.into_iter().map(wrap).collect::<Result<_>>()?,
        })
    }
}
