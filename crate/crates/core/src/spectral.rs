//! Spectral transforms and Fourier multipliers on a periodic grid.
//!
//! Normalization: the forward transform is the plain DFT sum, the inverse
//! carries the `1/N^d` factor. With this convention Parseval reads
//! `Σ|f|² = N^{-d} Σ|f̂|²`.
//!
//! First-derivative multipliers drop the unpaired Nyquist mode so that
//! derivatives of real fields stay real.

use num_complex::Complex64;

use crate::field::{ComplexField, RealField, VectorField};
use crate::grid::Grid;

/// Fourier coefficients of a field, in FFT storage order.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Discrete L² norm of the represented field, via Parseval.
    pub fn l2_norm(&self) -> f64 {
        let n = self.coeffs.len() as f64;
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / n * self.grid.cell_volume()).sqrt()
    }
}

pub fn forward(field: &ComplexField) -> SpectralField {
    let mut coeffs = field.values().to_vec();
    field.grid().fft_forward(&mut coeffs);
    SpectralField {
        grid: field.grid().clone(),
        coeffs,
    }
}

pub fn inverse(spec: &SpectralField) -> ComplexField {
    let mut values = spec.coeffs.clone();
    spec.grid.fft_inverse(&mut values);
    ComplexField::from_raw(&spec.grid, values)
}

/// Forward/inverse pair of `field`.
pub fn transform_pair(field: &ComplexField) -> (SpectralField, ComplexField) {
    let spec = forward(field);
    let back = inverse(&spec);
    (spec, back)
}

/// Multiplies the spectrum by `m(|k|²)`.
pub fn apply_radial_multiplier(field: &ComplexField, m: impl Fn(f64) -> f64) -> ComplexField {
    let grid = field.grid();
    let mut data = field.values().to_vec();
    grid.fft_forward(&mut data);
    for (c, &k2) in data.iter_mut().zip(grid.k_squared()) {
        *c *= m(k2);
    }
    grid.fft_inverse(&mut data);
    ComplexField::from_raw(grid, data)
}

fn derivative_in_place(grid: &Grid, spec: &mut [Complex64], axis: usize) {
    for (flat, c) in spec.iter_mut().enumerate() {
        if grid.is_nyquist(flat, axis) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, grid.wavevector_component(flat, axis));
        }
    }
}

/// `∇f`, one component per axis, each the inverse transform of `i k_j f̂`.
pub fn spectral_gradient(field: &ComplexField) -> Vec<ComplexField> {
    let grid = field.grid();
    let mut spec = field.values().to_vec();
    grid.fft_forward(&mut spec);
    (0..grid.dim())
        .map(|axis| {
            let mut d = spec.clone();
            derivative_in_place(grid, &mut d, axis);
            grid.fft_inverse(&mut d);
            ComplexField::from_raw(grid, d)
        })
        .collect()
}

/// Gradient of a real field.
pub fn real_gradient(field: &RealField) -> VectorField {
    spectral_gradient(&field.to_complex())
        .into_iter()
        .map(|c| real_part(&c))
        .collect()
}

/// `∂f/∂x_axis` of a real field.
pub fn real_derivative(field: &RealField, axis: usize) -> RealField {
    let grid = field.grid();
    let mut spec: Vec<Complex64> = field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft_forward(&mut spec);
    derivative_in_place(grid, &mut spec, axis);
    grid.fft_inverse(&mut spec);
    RealField::from_raw(grid, spec.iter().map(|c| c.re).collect())
}

/// Divergence of a real vector field.
pub fn divergence(v: &[RealField]) -> RealField {
    let grid = v[0].grid();
    let mut out = vec![0.0; grid.len()];
    for (axis, comp) in v.iter().enumerate() {
        let d = real_derivative(comp, axis);
        for (o, x) in out.iter_mut().zip(d.values()) {
            *o += x;
        }
    }
    RealField::from_raw(grid, out)
}

/// Spectral Laplacian of a real field.
pub fn laplacian(field: &RealField) -> RealField {
    let lap = apply_radial_multiplier(&field.to_complex(), |k2| -k2);
    real_part(&lap)
}

pub(crate) fn real_part(c: &ComplexField) -> RealField {
    RealField::from_raw(c.grid(), c.values().iter().map(|v| v.re).collect())
}

/// Solves `−ΔV = (ρ − ρ̄) − (C − C̄)` with the zero-mean gauge.
///
/// Subtracting the mean charge is the neutralizing background required
/// for solvability on the torus.
pub fn solve_poisson(rho: &RealField, doping: Option<&RealField>) -> RealField {
    let grid = rho.grid();
    let mut data: Vec<Complex64> = match doping {
        Some(c) => rho
            .values()
            .iter()
            .zip(c.values())
            .map(|(r, c)| Complex64::new(r - c, 0.0))
            .collect(),
        None => rho.values().iter().map(|&r| Complex64::new(r, 0.0)).collect(),
    };
    grid.fft_forward(&mut data);
    for (c, &k2) in data.iter_mut().zip(grid.k_squared()) {
        if k2 == 0.0 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c /= k2;
        }
    }
    grid.fft_inverse(&mut data);
    RealField::from_raw(grid, data.iter().map(|c| c.re).collect())
}

/// `(I − Δ)^{1/4} f`.
pub fn bessel_quarter_power(field: &ComplexField) -> ComplexField {
    apply_radial_multiplier(field, |k2| (1.0 + k2).powf(0.25))
}

/// Zeroes every mode with `|m| > N/3` on any axis (2/3 rule).
pub fn dealias(field: &mut ComplexField) {
    let grid = field.grid().clone();
    let n = grid.points_per_axis();
    let cutoff = n / 3;
    let values = field.values_mut();
    grid.fft_forward(values);
    for (flat, c) in values.iter_mut().enumerate() {
        let idx = grid.multi_index(flat);
        let outside = (0..grid.dim()).any(|a| {
            let m = if idx[a] < n / 2 { idx[a] } else { n - idx[a] };
            m > cutoff
        });
        if outside {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    grid.fft_inverse(values);
}
