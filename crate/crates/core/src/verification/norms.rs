//! Mixed space-time Lebesgue norms and the dispersive monitors built on them.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::driver::{SnapshotPolicy, Trajectory};
use crate::error::{QhdError, Result};
use crate::field::{ComplexField, RealField};
use crate::spectral::{bessel_quarter_power, spectral_gradient};

use super::testfn::TestFunction;
use super::weak::sample_weights;

/// A Lebesgue exponent in `[1, ∞]`, kept exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Ratio<i64>),
    Infinity,
}

impl Exponent {
    pub fn integer(n: i64) -> Self {
        Exponent::Finite(Ratio::from_integer(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Exponent::Finite(Ratio::new(num, den))
    }

    pub fn reciprocal(&self) -> Ratio<i64> {
        match self {
            Exponent::Finite(r) => r.recip(),
            Exponent::Infinity => Ratio::from_integer(0),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinity => write!(f, "inf"),
            Exponent::Finite(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Exponent::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl FromStr for Exponent {
    type Err = QhdError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s, "inf" | "infinity" | "∞") {
            return Ok(Exponent::Infinity);
        }
        let bad = || QhdError::Format(format!("not an exponent: {s:?}"));
        let r = match s.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| bad())?;
                let d: i64 = d.trim().parse().map_err(|_| bad())?;
                if d == 0 {
                    return Err(bad());
                }
                Ratio::new(n, d)
            }
            None => Ratio::from_integer(s.parse().map_err(|_| bad())?),
        };
        if r < Ratio::from_integer(1) {
            return Err(bad());
        }
        Ok(Exponent::Finite(r))
    }
}

/// Whether `(q, r)` is a Schrödinger-admissible pair in `dim` space
/// dimensions: `2/q = dim(1/2 − 1/r)` with `2 ≤ q ≤ ∞` and `2 ≤ r ≤ 2d/(d−2)`
/// (`r < ∞` in 2D, `r ≤ ∞` in 1D).
pub fn admissible_pair_check(q: Exponent, r: Exponent, dim: usize) -> bool {
    let zero = Ratio::from_integer(0);
    let half = Ratio::new(1, 2);
    let (iq, ir) = (q.reciprocal(), r.reciprocal());
    if iq < zero || iq > half || ir < zero || ir > half {
        return false;
    }
    let d = Ratio::from_integer(dim as i64);
    if iq * 2 != d * (half - ir) {
        return false;
    }
    match dim {
        1 => true,
        2 => !r.is_infinite(),
        // 1/r ≥ (d−2)/(2d)
        _ => ir >= (d - 2) / (d * 2),
    }
}

/// A real field tagged with its sample time and strip index.
#[derive(Clone, Debug)]
pub struct TimedField {
    pub t: f64,
    pub strip: usize,
    pub field: RealField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub q: Exponent,
    pub r: Exponent,
    pub value: f64,
    /// Per strip: `∫_strip ‖f‖_r^q dt` for finite `q`, `max_strip ‖f‖_r` for `q = ∞`.
    pub partials: Vec<f64>,
}

fn spatial_norm(f: &RealField, r: Exponent) -> f64 {
    match r {
        Exponent::Infinity => f.max_abs(),
        Exponent::Finite(_) => {
            let rv = r.to_f64();
            let sum: f64 = f.values().iter().map(|v| v.abs().powf(rv)).sum();
            (sum * f.grid().cell_volume()).powf(1.0 / rv)
        }
    }
}

/// `‖f‖_{L^q_t L^r_x}` over the sampled interval. Samples must be ordered by
/// strip and time; the trapezoid rule is applied within each strip.
pub fn mixed_norm(samples: &[TimedField], q: Exponent, r: Exponent) -> Result<NormReport> {
    if samples.len() < 2 {
        return Err(QhdError::param("samples", "at least two time samples are needed"));
    }
    if let Some(w) = samples.windows(2).find(|w| (w[1].strip, w[1].t) < (w[0].strip, w[0].t)) {
        return Err(QhdError::param(
            "samples",
            format!("samples out of order at t={} (strip {})", w[1].t, w[1].strip),
        ));
    }
    let mut partials = Vec::new();
    let mut start = 0;
    while start < samples.len() {
        let strip = samples[start].strip;
        let end = samples[start..]
            .iter()
            .position(|s| s.strip != strip)
            .map_or(samples.len(), |p| start + p);
        let group = &samples[start..end];
        let norms: Vec<f64> = group.iter().map(|s| spatial_norm(&s.field, r)).collect();
        let partial = match q {
            Exponent::Infinity => norms.iter().cloned().fold(0.0, f64::max),
            Exponent::Finite(_) => {
                let qv = q.to_f64();
                let times: Vec<f64> = group.iter().map(|s| s.t).collect();
                sample_weights(&times).iter().zip(&norms).map(|(w, n)| w * n.powf(qv)).sum()
            }
        };
        partials.push(partial);
        start = end;
    }
    let value = match q {
        Exponent::Infinity => partials.iter().cloned().fold(0.0, f64::max),
        Exponent::Finite(_) => partials.iter().sum::<f64>().powf(1.0 / q.to_f64()),
    };
    Ok(NormReport { q, r, value, partials })
}

fn require_substeps(traj: &Trajectory) -> Result<()> {
    if traj.policy != SnapshotPolicy::Substeps {
        return Err(QhdError::Unavailable(
            "dispersive monitors need substep snapshots".into(),
        ));
    }
    Ok(())
}

fn gradient_magnitude(psi: &ComplexField) -> RealField {
    let grad = spectral_gradient(psi);
    let n = psi.grid().len();
    let values = (0..n)
        .map(|i| grad.iter().map(|g| g.values()[i].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    RealField::new(psi.grid(), values).expect("gradient stays finite")
}

/// Mixed norms of `|∇ψ|` along the trajectory, one report per pair.
pub fn strichartz_monitor(traj: &Trajectory, pairs: &[(Exponent, Exponent)]) -> Result<Vec<NormReport>> {
    require_substeps(traj)?;
    let dim = traj.grid().dim();
    if dim != 3 {
        log::warn!("admissible pairs are defined for 3D; monitoring a {dim}D run");
    }
    let samples: Vec<TimedField> = traj
        .samples
        .iter()
        .flat_map(|s| {
            s.states.iter().map(move |st| TimedField {
                t: st.t,
                strip: s.strip,
                field: gradient_magnitude(&st.psi),
            })
        })
        .collect();
    pairs.iter().map(|&(q, r)| mixed_norm(&samples, q, r)).collect()
}

/// `∫∫ χ(t,x)² |(I−Δ)^{1/4}∇ψ|² dx dt` for an arbitrary weight `χ`.
pub fn local_smoothing_weighted(traj: &Trajectory, chi: impl Fn(f64, [f64; 3]) -> f64) -> Result<f64> {
    require_substeps(traj)?;
    let grid = traj.grid();
    let dv = grid.cell_volume();
    let mut total = 0.0;
    for strip in &traj.samples {
        let times: Vec<f64> = strip.states.iter().map(|s| s.t).collect();
        for (state, w) in strip.states.iter().zip(sample_weights(&times)) {
            if w == 0.0 {
                continue;
            }
            let smoothed: Vec<ComplexField> = spectral_gradient(&state.psi)
                .iter()
                .map(bessel_quarter_power)
                .collect();
            let mut inner = 0.0;
            for i in 0..grid.len() {
                let c = chi(state.t, grid.coordinates(i));
                if c != 0.0 {
                    inner += c * c * smoothed.iter().map(|g| g.values()[i].norm_sqr()).sum::<f64>();
                }
            }
            total += w * inner * dv;
        }
    }
    Ok(total)
}

/// Local smoothing norm with the space-time bump `window` as `χ`.
pub fn local_smoothing_norm(traj: &Trajectory, window: &TestFunction) -> Result<f64> {
    let grid = traj.grid();
    let dim = grid.dim();
    if window.space.len() != dim {
        return Err(QhdError::param("window", "window axes must match the grid"));
    }
    let l = grid.box_length();
    local_smoothing_weighted(traj, |t, x| {
        let s: f64 = (0..dim).map(|a| window.space[a].jet_periodic(x[a], l)[0]).product();
        window.time_jet(t)[0] * s
    })
}
