//! Classical phase space: Hamiltonians, symplectic particle integration,
//! Klimontovich ensembles, and the strict contact (prequantum) group.

pub mod canonical;
pub mod flow;
pub mod hamiltonian;
pub mod quadrature;
pub mod weak;

pub use canonical::{cocycle_integral, group_compose, path_cocycle, CanonicalMap, GroupElement};
pub use flow::{hamilton_flow, step, FlowState, Integrator, ParamPointFamily, PhasePoint, WeightedEnsemble};
pub use hamiltonian::{HamiltonianKind, HamiltonianSpec, PhaseFunction, Polynomial, TestFunction};
pub use weak::{ensemble_pairing, param_right_leg, weak_liouville_residual};
