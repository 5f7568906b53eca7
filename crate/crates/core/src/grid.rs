//! Periodic box discretization.
//!
//! A [`Grid`] is a `dim`-dimensional torus of side `L` sampled with `N`
//! points per axis. Values are stored row-major: the last axis is contiguous.
//! The grid also owns the FFT plans for its axis length, so cloning it is
//! cheap and every field built on it shares the same plans.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{QhdError, Result};

/// Smallest admissible number of points per axis.
pub const MIN_POINTS: usize = 8;

#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    length: f64,
    /// Signed wavenumbers `2πm/L` in FFT storage order.
    wavenumbers: Vec<f64>,
    /// `|k|²` per flat index.
    k_squared: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Builds a grid of `points_per_axis^dim` points on a box of side `box_length`.
pub fn make_grid(dim: usize, points_per_axis: usize, box_length: f64) -> Result<Grid> {
    Grid::new(dim, points_per_axis, box_length)
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(QhdError::InvalidGrid(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if n < MIN_POINTS || n % 2 != 0 {
            return Err(QhdError::InvalidGrid(format!(
                "points per axis must be even and >= {MIN_POINTS}, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(QhdError::InvalidGrid(format!("box length must be positive, got {length}")));
        }

        let wavenumbers: Vec<f64> = (0..n)
            .map(|i| {
                let m = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
                TAU * m / length
            })
            .collect();

        let total = n.pow(dim as u32);
        let mut k_squared = vec![0.0; total];
        for (flat, k2) in k_squared.iter_mut().enumerate() {
            let mut rem = flat;
            let mut acc = 0.0;
            for _ in 0..dim {
                let k = wavenumbers[rem % n];
                acc += k * k;
                rem /= n;
            }
            *k2 = acc;
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                length,
                wavenumbers,
                k_squared,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.inner.n
    }

    pub fn box_length(&self) -> f64 {
        self.inner.length
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.inner.k_squared.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.inner.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.inner.length.powi(self.inner.dim as i32)
    }

    /// Per-axis wavenumber table in FFT storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// `|k|²` for every flat index.
    pub fn k_squared(&self) -> &[f64] {
        &self.inner.k_squared
    }

    /// Largest wavenumber magnitude on one axis (the Nyquist mode).
    pub fn max_wavenumber(&self) -> f64 {
        TAU * (self.inner.n / 2) as f64 / self.inner.length
    }

    /// Stride of `axis` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.inner.n.pow((self.inner.dim - 1 - axis) as u32)
    }

    /// Per-axis integer index of a flat index.
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.inner.n;
        let mut out = [0; 3];
        let mut rem = flat;
        for axis in (0..self.inner.dim).rev() {
            out[axis] = rem % n;
            rem /= n;
        }
        out
    }

    /// Physical coordinates of a grid point; unused axes are zero.
    pub fn coordinates(&self, flat: usize) -> [f64; 3] {
        let h = self.spacing();
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.inner.dim {
            x[axis] = idx[axis] as f64 * h;
        }
        x
    }

    /// Wavevector component along `axis` at a flat spectral index.
    pub fn wavevector_component(&self, flat: usize, axis: usize) -> f64 {
        let i = (flat / self.stride(axis)) % self.inner.n;
        self.inner.wavenumbers[i]
    }

    /// True when the per-axis index is the unpaired Nyquist mode.
    pub fn is_nyquist(&self, flat: usize, axis: usize) -> bool {
        (flat / self.stride(axis)) % self.inner.n == self.inner.n / 2
    }

    /// Same discretization (not necessarily the same allocation).
    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.length == other.inner.length)
    }

    /// In-place unnormalized forward DFT over all axes.
    pub(crate) fn fft_forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.forward);
    }

    /// In-place inverse DFT over all axes, normalized by the total point count.
    pub(crate) fn fft_inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        let n = self.inner.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // the contiguous axis is processed as a batch of consecutive lines
        plan.process_with_scratch(data, &mut scratch);

        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.inner.dim - 1 {
            let stride = self.stride(axis);
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[start + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[start + j * stride] = *v;
                    }
                }
            }
        }
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("points_per_axis", &self.inner.n)
            .field("box_length", &self.inner.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_box_wavenumbers_are_integers() {
        let g = make_grid(1, 8, TAU).unwrap();
        let mut ks: Vec<f64> = g.wavenumbers().to_vec();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected: Vec<f64> = (-4..4).map(|m| m as f64).collect();
        for (k, e) in ks.iter().zip(&expected) {
            assert!((k - e).abs() < 1e-14, "{k} vs {e}");
        }
    }

    #[test]
    fn two_dimensional_counts() {
        let g = make_grid(2, 16, 1.0).unwrap();
        assert_eq!(g.len(), 256);
        assert!((g.cell_volume() - (1.0f64 / 16.0).powi(2)).abs() < 1e-16);
    }

    #[test]
    fn three_dimensional_counts() {
        let g = make_grid(3, 64, 10.0).unwrap();
        assert_eq!(g.len(), 262_144);
        // scripted oracle: 2π·32/10
        let kmax = g.wavenumbers().iter().fold(0.0f64, |m, k| m.max(k.abs()));
        assert!((kmax - 20.106_192_982_974_676).abs() < 1e-12);
        assert!((g.max_wavenumber() - kmax).abs() < 1e-14);
    }

    #[test]
    fn wavenumber_table_is_symmetric_except_nyquist() {
        let g = make_grid(1, 16, 3.0).unwrap();
        let ks = g.wavenumbers();
        for (i, &k) in ks.iter().enumerate() {
            if i == 8 {
                continue;
            }
            assert!(ks.iter().any(|&q| (q + k).abs() < 1e-12));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(make_grid(1, 9, 1.0).is_err());
        assert!(make_grid(1, 6, 1.0).is_err());
        assert!(make_grid(1, 8, 0.0).is_err());
        assert!(make_grid(1, 8, -1.0).is_err());
        assert!(make_grid(4, 8, 1.0).is_err());
    }

    #[test]
    fn multi_index_round_trip() {
        let g = make_grid(3, 8, 1.0).unwrap();
        let flat = 3 * 64 + 5 * 8 + 7;
        assert_eq!(g.multi_index(flat), [3, 5, 7]);
        assert_eq!(g.stride(0), 64);
        assert_eq!(g.stride(2), 1);
    }
}
