//! Weak-form Liouville checks and the classical right leg.

use super::flow::{hamilton_flow, step, Integrator, ParamPointFamily, WeightedEnsemble};
use super::hamiltonian::{bracket_at, HamiltonianSpec, PhaseFunction};
use crate::cochain::Cochain;
use crate::error::{Error, Result};

/// `⟨f, φ⟩ = Σₖ wₖ φ(zₖ)`.
pub fn ensemble_pairing(e: &WeightedEnsemble, phi: &dyn PhaseFunction) -> f64 {
    e.weights().iter().zip(e.points()).map(|(w, z)| w * phi.value(z)).sum()
}

/// `|d/dt ⟨f, φ⟩ − ⟨f, {φ, H}⟩|` at time `t`, with the time derivative taken
/// as a centered difference over one step on each side.
pub fn weak_liouville_residual(
    e0: &WeightedEnsemble,
    h: &HamiltonianSpec,
    phi: &dyn PhaseFunction,
    t: f64,
    dt: f64,
    integrator: Integrator,
) -> Result<f64> {
    if t < dt {
        return Err(Error::InvalidInput(format!("need t ≥ dt for a centered difference, got t={t}, dt={dt}")));
    }
    let before = hamilton_flow(e0, h, t - dt, dt, integrator)?;
    let now = before.map_points(|z| step(z, h, dt, integrator));
    let after = now.map_points(|z| step(z, h, dt, integrator));
    let rate = (ensemble_pairing(&after, phi) - ensemble_pairing(&before, phi)) / (2.0 * dt);
    let flux: f64 = now
        .weights()
        .iter()
        .zip(now.points())
        .map(|(w, z)| w * bracket_at(phi, h, z))
        .sum();
    Ok((rate - flux).abs())
}

/// Per-plaquette `Σₐ dq̄ᵃ ∧ dp̄ₐ`, from the diagonals of each cell:
/// `½ Σₐ (Δ₁qᵃ Δ₂pₐ − Δ₂qᵃ Δ₁pₐ)` with `Δ₁ = z(r+e₁+e₂) − z(r)` and
/// `Δ₂ = z(r+e₂) − z(r+e₁)`. Exact for affine families.
pub fn param_right_leg(fam: &ParamPointFamily) -> Result<Cochain> {
    let grid = fam.grid();
    if grid.dim() != 2 {
        return Err(Error::InvalidInput(format!("right leg needs a 2D parameter grid, got {}D", grid.dim())));
    }
    let mut out = Cochain::zeros(grid, 2)?;
    let pts = fam.points();
    for node in 0..grid.len() {
        let Some(c1) = grid.neighbor(node, 0, 1) else { continue };
        let Some(c2) = grid.neighbor(c1, 1, 1) else { continue };
        let Some(c3) = grid.neighbor(node, 1, 1) else { continue };
        let (z0, z1, z2, z3) = (&pts[node], &pts[c1], &pts[c2], &pts[c3]);
        let v: f64 = (0..z0.dim())
            .map(|a| {
                let (d1q, d1p) = (z2.q[a] - z0.q[a], z2.p[a] - z0.p[a]);
                let (d2q, d2p) = (z3.q[a] - z1.q[a], z3.p[a] - z1.p[a]);
                0.5 * (d1q * d2p - d2q * d1p)
            })
            .sum();
        out.set(0, node, v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::flow::PhasePoint;
    use crate::classical::hamiltonian::TestFunction;
    use crate::grid::{Boundary, ParameterGrid, WeightDensity};

    fn pair() -> WeightedEnsemble {
        WeightedEnsemble::new(vec![0.5, 0.5], vec![PhasePoint::one(1.0, 0.0), PhasePoint::one(-1.0, 0.0)]).unwrap()
    }

    #[test]
    fn pairing_examples() {
        let e = pair();
        assert_eq!(ensemble_pairing(&e, &TestFunction::Constant { value: 1.0 }), 1.0);
        assert_eq!(ensemble_pairing(&e, &TestFunction::monomial(2, 0)), 1.0);
        let single = WeightedEnsemble::new(vec![1.0], vec![PhasePoint::one(0.3, 2.0)]).unwrap();
        assert_eq!(ensemble_pairing(&single, &TestFunction::p()), 2.0);
    }

    #[test]
    fn residual_of_conserved_quantities() {
        let h = HamiltonianSpec::harmonic();
        let e = pair();
        let r = weak_liouville_residual(&e, &h, &h, 1.0, 0.01, Integrator::Midpoint).unwrap();
        assert!(r <= 1e-8, "{r}");
        let r = weak_liouville_residual(&e, &h, &TestFunction::Constant { value: 1.0 }, 1.0, 0.01, Integrator::Verlet)
            .unwrap();
        assert_eq!(r, 0.0);
    }

    fn family(f: impl Fn([f64; 3]) -> PhasePoint, boundary: Boundary) -> ParamPointFamily {
        let grid = ParameterGrid::uniform(2, 0.0, 1.0, 9, boundary).unwrap();
        ParamPointFamily::from_fn(WeightDensity::uniform_probability(grid).unwrap(), f).unwrap()
    }

    #[test]
    fn right_leg_examples() {
        let c = param_right_leg(&family(|_| PhasePoint::one(0.3, 0.1), Boundary::Open)).unwrap();
        assert_eq!(c.max_abs(), 0.0);
        let fam = family(|r| PhasePoint::one(r[0], r[1]), Boundary::Open);
        let h = fam.grid().spacing(0) * fam.grid().spacing(1);
        let c = param_right_leg(&fam).unwrap();
        assert!(c.cells().all(|(_, _, v)| (v - h).abs() < 1e-15));
    }
}
