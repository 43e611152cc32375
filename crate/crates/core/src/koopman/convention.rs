//! Startup check that selects the sign triple under which the KvH
//! identities hold.

use serde::Serialize;

use super::evolve::{cfl_bound, evolve_liouville, evolve_wave, EvolutionMode, EvolveConfig};
use super::grid::{ClassicalWaveFunction, PhaseGrid2D, StencilOrder};
use super::ops::{clebsch_density, commutator_defect, ClebschMode, Scheme, SignConvention};
use crate::classical::HamiltonianSpec;
use crate::error::Result;
use crate::linalg::C64;

/// Relative mismatch above which a triple is rejected.
pub const CONVENTION_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConventionReport {
    pub convention: SignConvention,
    /// `‖f_kvh(ψ(t)) − Liouville(f_kvh(ψ₀))‖ / ‖·‖`.
    pub clebsch_transport: f64,
    /// `commutator_defect(q, p)`.
    pub commutator: f64,
    pub pass: bool,
}

/// Gaussian packet with a quadratic phase used by the reference scenario.
pub fn reference_packet(grid: &PhaseGrid2D, hbar: f64) -> Result<ClassicalWaveFunction> {
    ClassicalWaveFunction::from_fn(grid.clone(), hbar, |q, p| {
        let r2 = (q + 0.6).powi(2) + (p - 0.4).powi(2);
        C64::from_polar((-r2 / 4.0).exp(), (0.5 * q + 0.25 * q * p) / hbar)
    })
}

/// KvH Clebsch transport error for one triple on a given grid.
pub fn clebsch_transport_error(
    psi0: &ClassicalWaveFunction,
    h: &HamiltonianSpec,
    t: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<f64> {
    let cfg = EvolveConfig::new(t, dt).with_scheme(scheme);
    let f0 = clebsch_density(psi0, ClebschMode::Kvh, scheme)?;
    let (psi_t, _) = evolve_wave(psi0, h, EvolutionMode::Kvh, &cfg)?;
    let (f_t, _) = evolve_liouville(&f0, h, &cfg)?;
    clebsch_density(&psi_t, ClebschMode::Kvh, scheme)?.relative_l2(&f_t)
}

pub fn evaluate_convention(convention: SignConvention) -> Result<ConventionReport> {
    let grid = PhaseGrid2D::square(6.0, 64)?;
    let scheme = Scheme { order: StencilOrder::Second, convention };
    let psi0 = reference_packet(&grid, 1.0)?;
    let h = HamiltonianSpec::harmonic();
    let dt = 0.9 * cfl_bound(&h, &grid);
    let clebsch = clebsch_transport_error(&psi0, &h, 0.5, dt, scheme)?;
    let commutator = commutator_defect(&HamiltonianSpec::linear(1.0, 0.0), &HamiltonianSpec::linear(0.0, 1.0), &psi0, scheme)?;
    let pass = clebsch <= CONVENTION_TOL && commutator <= CONVENTION_TOL;
    Ok(ConventionReport { convention, clebsch_transport: clebsch, commutator, pass })
}

/// Every triple with its verdict.
pub fn validate_conventions() -> Result<Vec<ConventionReport>> {
    SignConvention::all().into_iter().map(evaluate_convention).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_passes_literal_fails() {
        let good = evaluate_convention(SignConvention::default()).unwrap();
        assert!(good.pass, "{good:?}");
        let lit = evaluate_convention(SignConvention::LITERAL).unwrap();
        assert!(!lit.pass, "{lit:?}");
    }
}
