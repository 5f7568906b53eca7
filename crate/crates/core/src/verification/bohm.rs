//! Three equivalent forms of the dispersive (Bohm) term:
//!
//! * `A = (ħ²/2) ρ ∇(Δ√ρ / √ρ)`
//! * `B = (ħ²/4) ∇Δρ − ħ² div(∇√ρ ⊗ ∇√ρ)`
//! * `C = (ħ²/4) div(ρ ∇² log ρ)`

use crate::error::{QhdError, Result};
use crate::field::{RealField, VectorField};
use crate::spectral::{laplacian, real_derivative, real_gradient};

#[derive(Clone, Debug)]
pub struct BohmForms {
    pub quantum_potential: VectorField,
    pub stress_divergence: VectorField,
    pub log_hessian: VectorField,
}

fn mul(a: &RealField, b: &RealField) -> RealField {
    RealField::new(a.grid(), a.values().iter().zip(b.values()).map(|(x, y)| x * y).collect())
        .expect("same grid")
}

fn scaled(a: &RealField, c: f64) -> RealField {
    a.map(|v| c * v)
}

fn sub(a: &RealField, b: &RealField) -> RealField {
    RealField::new(a.grid(), a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect())
        .expect("same grid")
}

pub fn bohm_forms(rho: &RealField, hbar: f64) -> Result<BohmForms> {
    let max_rho = rho.max_abs();
    // δ_vac² with δ_vac = 1e−12·max √ρ
    let floor = 1e-24 * max_rho;
    let min_rho = rho.min();
    if !(min_rho > floor) {
        return Err(QhdError::Vacuum { min_rho });
    }
    let dim = rho.grid().dim();
    let h2 = hbar * hbar;
    let sqrt_rho = rho.map(f64::sqrt);

    let q = {
        let lap = laplacian(&sqrt_rho);
        RealField::new(
            rho.grid(),
            lap.values().iter().zip(sqrt_rho.values()).map(|(l, s)| l / s).collect(),
        )?
    };
    let grad_q = real_gradient(&q);
    let quantum_potential = grad_q.iter().map(|gq| scaled(&mul(rho, gq), 0.5 * h2)).collect();

    let grad_lap = real_gradient(&laplacian(rho));
    let dsr = real_gradient(&sqrt_rho);
    let stress_divergence = (0..dim)
        .map(|k| {
            let mut div = RealField::zeros(rho.grid());
            for j in 0..dim {
                let d = real_derivative(&mul(&dsr[j], &dsr[k]), j);
                div.values_mut().iter_mut().zip(d.values()).for_each(|(o, v)| *o += v);
            }
            sub(&scaled(&grad_lap[k], 0.25 * h2), &scaled(&div, h2))
        })
        .collect();

    let log_rho = rho.map(f64::ln);
    let dlog = real_gradient(&log_rho);
    let log_hessian = (0..dim)
        .map(|k| {
            let mut div = RealField::zeros(rho.grid());
            for j in 0..dim {
                let hess_jk = real_derivative(&dlog[k], j);
                let d = real_derivative(&mul(rho, &hess_jk), j);
                div.values_mut().iter_mut().zip(d.values()).for_each(|(o, v)| *o += v);
            }
            scaled(&div, 0.25 * h2)
        })
        .collect();

    Ok(BohmForms {
        quantum_potential,
        stress_divergence,
        log_hessian,
    })
}

fn vector_distance(a: &[RealField], b: &[RealField]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.l2_distance(y).powi(2)).sum::<f64>().sqrt()
}

/// Largest pairwise discrete-L² distance between the three forms.
pub fn bohm_form_residual(rho: &RealField, hbar: f64) -> Result<f64> {
    let f = bohm_forms(rho, hbar)?;
    let ab = vector_distance(&f.quantum_potential, &f.stress_divergence);
    let ac = vector_distance(&f.quantum_potential, &f.log_hessian);
    let bc = vector_distance(&f.stress_divergence, &f.log_hessian);
    Ok(ab.max(ac).max(bc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::TAU;

    #[test]
    fn constant_density_has_no_bohm_term() {
        let g = make_grid(2, 16, TAU).unwrap();
        let f = bohm_forms(&RealField::constant(&g, 2.0), 1.0).unwrap();
        for v in f.quantum_potential.iter().chain(&f.stress_divergence).chain(&f.log_hessian) {
            assert!(v.max_abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_vacuum() {
        let g = make_grid(1, 16, TAU).unwrap();
        let rho = RealField::from_fn(&g, |x| x[0].sin().powi(2));
        assert!(matches!(bohm_form_residual(&rho, 1.0), Err(QhdError::Vacuum { .. })));
    }
}
