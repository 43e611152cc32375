//! Momentum maps and Clebsch representations for quantum and classical
//! mixed states.
//!
//! The crate is organized by representation space:
//!
//! * [`quantum`]: pure states, density operators and unitary evolution.
//! * [`mixtures`]: discrete/continuous mixtures and parameterized families.
//! * [`cochain`], [`berry`]: discrete forms on parameter grids, Berry
//!   connection and curvature.
//! * [`classical`]: Hamiltonian flows, Klimontovich ensembles and
//!   strict contact transformations.
//! * [`koopman`]: classical wavefunctions on phase-space grids.
//! * [`uhlmann`]: operator-valued representations of the density matrix.
//! * [`verify`]: representation-agnostic momentum map checks.
//! * [`suite`]: the verification suite and reference studies.
//! * [`io`]: CSV layouts for ensembles, fields, matrices and cochains.

pub mod berry;
pub mod catalog;
pub mod classical;
pub mod cochain;
pub mod convergence;
pub mod error;
pub mod grid;
pub mod io;
pub mod koopman;
pub mod linalg;
pub mod mixtures;
pub mod quantum;
pub mod suite;
pub mod uhlmann;
pub mod verify;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use grid::{Axis, Boundary, ParameterGrid, WeightDensity};
pub use linalg::{CMatrix, CVector, C64};
pub use quantum::{DensityOperator, HermitianOperator, SkewHermitianMoment, WaveFunction};
