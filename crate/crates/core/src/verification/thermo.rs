use crate::field::RealField;

/// `P(ρ) = ((p−1)/(p+1)) ρ^{(p+1)/2}`; tiny negative densities are clamped to 0.
pub fn pressure(rho: &RealField, p: f64) -> RealField {
    let c = (p - 1.0) / (p + 1.0);
    let e = 0.5 * (p + 1.0);
    rho.map(|r| c * r.max(0.0).powf(e))
}

/// `f(ρ) = (2/(p+1)) ρ^{(p+1)/2}`.
pub fn internal_energy(rho: &RealField, p: f64) -> RealField {
    let c = 2.0 / (p + 1.0);
    let e = 0.5 * (p + 1.0);
    rho.map(|r| c * r.max(0.0).powf(e))
}
