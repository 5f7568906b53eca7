//! Spectral kernels against independent dense or closed-form references.

mod common;

use std::f64::consts::TAU;

use num_complex::Complex64;
use qhd::spectral::{bessel_quarter_power, forward, inverse, real_gradient, solve_poisson, spectral_gradient};
use qhd::stepper::strang_step;
use qhd::verification::{mixed_norm, Exponent, TimedField};
use qhd::{make_grid, ComplexField, PhysicsParams, RealField, WaveState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{dense_dft, dense_second_derivative, dense_solve, fd8};

fn random_field(rng: &mut ChaCha8Rng, dim: usize, n: usize, l: f64) -> ComplexField {
    let grid = make_grid(dim, n, l).unwrap();
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    ComplexField::new(&grid, values).unwrap()
}

#[test]
fn forward_transform_matches_direct_dft_in_three_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let f = random_field(&mut rng, 3, 8, 2.0);
    let slow = dense_dft(f.values(), 3, 8);
    let fast = forward(&f);
    for (a, b) in fast.coeffs().iter().zip(&slow) {
        assert!((a - b).norm() < 1e-12 * 512.0);
    }
}

#[test]
fn inverse_undoes_forward() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for dim in 1..=3 {
        let f = random_field(&mut rng, dim, 16, 7.0);
        let back = inverse(&forward(&f));
        assert!(back.max_distance(&f) < 1e-14);
    }
}

#[test]
fn poisson_matches_dense_solve_with_doping() {
    let n = 16;
    let l = 3.5;
    let grid = make_grid(1, n, l).unwrap();
    let rho = RealField::from_fn(&grid, |x| 1.0 + 0.4 * (TAU * x[0] / l).sin().exp());
    let doping = RealField::from_fn(&grid, |x| 0.7 + 0.2 * (2.0 * TAU * x[0] / l).cos());
    let v = solve_poisson(&rho, Some(&doping));

    let net: Vec<f64> = rho.values().iter().zip(doping.values()).map(|(r, c)| r - c).collect();
    let mean = net.iter().sum::<f64>() / n as f64;
    let a = dense_second_derivative(n, l)
        .iter()
        .map(|row| row.iter().map(|v| -v + 1.0).collect())
        .collect();
    let dense = dense_solve(a, net.iter().map(|v| v - mean).collect());
    for (x, y) in v.values().iter().zip(&dense) {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
    assert!(v.mean().abs() < 1e-15);
}

#[test]
fn gradients_match_high_order_differences_in_two_dimensions() {
    let n = 128;
    let grid = make_grid(2, n, TAU).unwrap();
    let f = RealField::from_fn(&grid, |x| (x[0].sin() * x[1].cos()).exp());
    let grad = real_gradient(&f);
    let h = grid.spacing();
    // axis 1 is contiguous
    for row in 0..n {
        let line: Vec<f64> = f.values()[row * n..(row + 1) * n].to_vec();
        let fd = fd8(&line, h);
        for (j, d) in fd.iter().enumerate() {
            assert!((grad[1].values()[row * n + j] - d).abs() < 1e-6);
        }
    }
}

#[test]
fn bessel_multiplier_matches_dense_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let n = 16;
    let l = 4.0;
    let f = random_field(&mut rng, 1, n, l);
    let got = bessel_quarter_power(&f);
    let coeffs = dense_dft(f.values(), 1, n);
    for (j, g) in got.values().iter().enumerate() {
        let mut z = Complex64::new(0.0, 0.0);
        for (m, c) in coeffs.iter().enumerate() {
            let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            let k = TAU * signed / l;
            let w = Complex64::from_polar(1.0, TAU * (m * j) as f64 / n as f64);
            z += c * (1.0 + k * k).powf(0.25) * w;
        }
        z /= n as f64;
        assert!((g - z).norm() < 1e-12);
    }
}

#[test]
fn complex_gradient_of_product_of_modes() {
    let l = 5.0;
    let grid = make_grid(2, 32, l).unwrap();
    let (k1, k2) = (TAU * 3.0 / l, TAU * 2.0 / l);
    let f = ComplexField::from_fn(&grid, |x| {
        Complex64::from_polar(1.0, k1 * x[0]) * Complex64::new((k2 * x[1]).cos(), 0.0)
    });
    let g = spectral_gradient(&f);
    let expected = ComplexField::from_fn(&grid, |x| {
        Complex64::from_polar(1.0, k1 * x[0]) * Complex64::new(-k2 * (k2 * x[1]).sin(), 0.0)
    });
    assert!(g[1].max_distance(&expected) < 1e-10);
}

#[test]
fn strang_local_error_is_third_order() {
    let grid = make_grid(1, 64, TAU).unwrap();
    let psi = ComplexField::from_fn(&grid, |x| Complex64::from_polar((1.0 + 0.5 * x[0].cos()).sqrt(), x[0].sin()));
    let state = WaveState::new(psi, 0.0, 1.0).unwrap();
    let params = PhysicsParams {
        alpha: 0.0,
        ..PhysicsParams::default()
    };
    // step doubling: |one step − two half steps| shrinks by ~8 per halving
    let defect = |dt: f64| {
        let one = strang_step(&state, dt, &params).unwrap();
        let half = strang_step(&state, dt / 2.0, &params).unwrap();
        let two = strang_step(&half, dt / 2.0, &params).unwrap();
        one.psi.l2_distance(&two.psi)
    };
    let (a, b, c) = (defect(0.1), defect(0.05), defect(0.025));
    assert!(a / b > 7.0 && b / c > 7.0, "{a} {b} {c}");
}

#[test]
fn mixed_norm_matches_flat_quadrature_across_strips() {
    let grid = make_grid(1, 32, 2.0).unwrap();
    let mut samples = Vec::new();
    // two strips sharing the boundary instant t = 0.5
    for (strip, range) in [(0usize, 0..=10), (1, 10..=20)] {
        for j in range {
            let t = 0.05 * j as f64;
            samples.push(TimedField {
                t,
                strip,
                field: RealField::from_fn(&grid, |x| (1.0 + t * t) * (x[0] * 2.0).sin().exp()),
            });
        }
    }
    let q = 10.0 / 3.0;
    let r = 5.0;
    let got = mixed_norm(&samples, Exponent::ratio(10, 3), Exponent::integer(5)).unwrap();
    // independent evaluation: ordinary trapezoid over the 21 distinct instants
    let h = grid.spacing();
    let norm_at = |t: f64| {
        let s: f64 = (0..32)
            .map(|i| ((1.0 + t * t) * (2.0 * h * i as f64).sin().exp()).powf(r))
            .sum();
        (s * h).powf(1.0 / r)
    };
    let mut total = 0.0;
    for j in 0..20 {
        let (t0, t1) = (0.05 * j as f64, 0.05 * (j + 1) as f64);
        total += 0.5 * 0.05 * (norm_at(t0).powf(q) + norm_at(t1).powf(q));
    }
    let expected = total.powf(1.0 / q);
    assert!((got.value - expected).abs() < 1e-10 * expected);
    assert_eq!(got.partials.len(), 2);
}
