//! Koopman–von Neumann and Koopman–van Hove mechanics on a 2D phase grid.
//!
//! Conventions (default [`SignConvention`]): `{a, b} = ∂_q a ∂_p b − ∂_p a ∂_q b`,
//! `∂ₜf = {H, f}`, `X_H = (∂_p H, −∂_q H)`, `𝒜 = −p dq`, and the KvH phase
//! function `L = p ∂_p H − H`.

pub mod action;
pub mod convention;
pub mod evolve;
pub mod grid;
pub mod ops;
pub mod polar;

pub use action::{kvh_group_action, phase_fitted_distance};
pub use convention::{evaluate_convention, validate_conventions, ConventionReport};
pub use evolve::{cfl_bound, characteristic_pullback, evolve, evolve_liouville, evolve_wave, EvolutionMode, EvolveConfig, EvolveRecord, PhaseField};
pub use grid::{ClassicalWaveFunction, PhaseBoundary, PhaseDensity, PhaseGrid2D, StencilOrder};
pub use ops::{
    clebsch_density, commutator_defect, lagrangian_field, liouvillian_apply, poisson_bracket, prequantum_apply,
    ClebschMode, Scheme, SignConvention, SymplecticPotential,
};
pub use polar::{polar_residuals, PolarResiduals};
