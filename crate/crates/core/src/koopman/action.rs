//! Strict contact group acting on phase-space wavefunctions.

use super::grid::ClassicalWaveFunction;
use super::evolve::LEAKAGE_ABORT;
use crate::classical::{cocycle_integral, GroupElement, PhasePoint};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// `(g·ψ)(z) = exp(iħ⁻¹[κ + ∫₀^z (η*𝒜 − 𝒜)]) ψ(η(z))`; off-grid values of
/// `ψ` come from cubic interpolation. This is a right action:
/// `g₂·(g₁·ψ) = (g₁g₂)·ψ`.
pub fn kvh_group_action(psi: &ClassicalWaveFunction, g: &GroupElement) -> Result<ClassicalWaveFunction> {
    let grid = psi.grid();
    let hbar = psi.hbar();
    let mut out = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (q, p) = grid.coords(k);
        let z = PhasePoint::one(q, p);
        let moved = g.map.apply(&z);
        let value = grid.interpolate(psi.values(), moved.q[0], moved.p[0]);
        if value == C64::new(0.0, 0.0) {
            out.push(value);
            continue;
        }
        let phase = (g.kappa + cocycle_integral(&g.map, &z)?) / hbar;
        out.push(value * C64::from_polar(1.0, phase));
    }
    let result = psi.with_values(out);
    let before = psi.norm_sq();
    if before > 0.0 {
        let lost = 1.0 - result.norm_sq() / before;
        if lost > LEAKAGE_ABORT {
            return Err(Error::BoundaryLeakage { fraction: lost, threshold: LEAKAGE_ABORT });
        }
    }
    Ok(result)
}

/// `min_θ ‖a − e^{iθ} b‖ / ‖a‖` and the minimizing `θ`.
pub fn phase_fitted_distance(a: &ClassicalWaveFunction, b: &ClassicalWaveFunction) -> Result<(f64, f64)> {
    a.grid().same_as(b.grid())?;
    let w = a.grid().quadrature_weights();
    let overlap: C64 = (0..w.len()).map(|k| b.values()[k].conj() * a.values()[k] * w[k]).sum();
    let theta = overlap.arg();
    let rot = C64::from_polar(1.0, theta);
    let num: f64 = (0..w.len()).map(|k| w[k] * (a.values()[k] - rot * b.values()[k]).norm_sqr()).sum();
    Ok(((num / a.norm_sq()).sqrt(), theta))
}
