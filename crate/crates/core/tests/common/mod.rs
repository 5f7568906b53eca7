#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use qhd::harness::RunConfig;
use qhd::{ComplexField, Grid};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Direct `O(N²)` DFT along every axis, unnormalized, `e^{−2πi jk/N}` kernel.
pub fn dense_dft(values: &[Complex64], dim: usize, n: usize) -> Vec<Complex64> {
    let mut out = values.to_vec();
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let mut next = vec![Complex64::new(0.0, 0.0); out.len()];
        for (flat, slot) in next.iter_mut().enumerate() {
            let k = (flat / stride) % n;
            let base = flat - k * stride;
            for j in 0..n {
                let w = Complex64::from_polar(1.0, -TAU * ((j * k) % n) as f64 / n as f64);
                *slot += w * out[base + j * stride];
            }
        }
        out = next;
    }
    out
}

/// Periodic Fourier-collocation second-derivative matrix on `N` points of
/// `[0, L)`, from its closed-form entries (even `N`).
pub fn dense_second_derivative(n: usize, l: f64) -> Vec<Vec<f64>> {
    let h = TAU / n as f64;
    let scale = (TAU / l).powi(2);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let v = if i == j {
                        -PI * PI / (3.0 * h * h) - 1.0 / 6.0
                    } else {
                        let d = i as f64 - j as f64;
                        let sign = if (i + n - j) % 2 == 0 { 1.0 } else { -1.0 };
                        -sign / (2.0 * (d * h / 2.0).sin().powi(2))
                    };
                    v * scale
                })
                .collect()
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// 8th-order central difference of periodic samples with spacing `h`.
pub fn fd8(f: &[f64], h: f64) -> Vec<f64> {
    const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let n = f.len();
    (0..n)
        .map(|i| {
            C.iter()
                .enumerate()
                .map(|(m, c)| c * (f[(i + m + 1) % n] - f[(i + n - m - 1) % n]))
                .sum::<f64>()
                / h
        })
        .collect()
}

/// Random band-limited field `1 + Σ a_m e^{i k_m·x}` with `Σ|a_m| = spread < 1`,
/// so `|ψ| ≥ 1 − spread` everywhere.
pub fn band_limited(rng: &mut ChaCha8Rng, grid: &Grid, kmax: i64, spread: f64) -> ComplexField {
    let dim = grid.dim();
    let l = grid.box_length();
    let mut modes: Vec<([i64; 3], Complex64)> = Vec::new();
    let range = -kmax..=kmax;
    for a in range.clone() {
        for b in if dim >= 2 { range.clone() } else { 0..=0 } {
            for c in if dim >= 3 { range.clone() } else { 0..=0 } {
                if [a, b, c] != [0, 0, 0] {
                    let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    modes.push(([a, b, c], z));
                }
            }
        }
    }
    let total: f64 = modes.iter().map(|m| m.1.norm()).sum();
    for m in &mut modes {
        m.1 *= spread / total;
    }
    ComplexField::from_fn(grid, |x| {
        let mut z = Complex64::new(1.0, 0.0);
        for (k, a) in &modes {
            let arg: f64 = (0..3).map(|i| k[i] as f64 * x[i]).sum::<f64>() * TAU / l;
            z += a * Complex64::from_polar(1.0, arg);
        }
        z
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    qhd::harness::fit_order(x, y)
}

/// 1D Gaussian packet run, phase `π`, small amplitude.
pub fn gaussian_config(n: usize, tau: f64, substeps: usize, t_final: f64, alpha: f64) -> RunConfig {
    let text = format!(
        r#"
[grid]
dim = 1
points = {n}
length = 40.0

[physics]
alpha = {alpha:?}

[time]
tau = {tau:?}
dt = {dt:?}
final = {t_final:?}

[initial]
kind = "gaussian"
amplitude = 0.1
sigma = 2.0
center = [20.0]
phase = 3.141592653589793

[diagnostics]
monitors = false
"#,
        dt = tau / substeps as f64,
    );
    RunConfig::from_toml_str(&text).expect("valid test configuration")
}
