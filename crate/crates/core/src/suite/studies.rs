//! Refinement studies and fixed-setup diagnostics behind the acceptance
//! criteria and the `converge` subcommand.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::berry::{berry_curvature, right_leg_pairing_check, total_flux, CurvatureBackend};
use crate::catalog;
use crate::classical::{
    ensemble_pairing, weak_liouville_residual, CanonicalMap, GroupElement, HamiltonianSpec, Integrator, PhaseFunction,
    PhasePoint, Polynomial, TestFunction, WeightedEnsemble,
};
use crate::convergence::ConvergenceTable;
use crate::error::{Error, Result};
use crate::grid::{Boundary, ParameterGrid, WeightDensity};
use crate::koopman::{
    cfl_bound, clebsch_density, commutator_defect, evolve_liouville, evolve_wave, kvh_group_action, phase_fitted_distance,
    ClassicalWaveFunction, ClebschMode, EvolutionMode, EvolveConfig, PhaseBoundary, PhaseGrid2D, Scheme, StencilOrder,
};
use crate::linalg::{self, max_abs, CMatrix, CVector, C64};
use crate::mixtures::{density_from_family, evolve_family, WaveFamily};
use crate::quantum::{evolve_density, HermitianOperator};
use crate::uhlmann::{evolve_hybrid, rho_from_w, HybridState, WOperator};
use crate::WaveFunction;

/// Half-width of the phase-space box in the transport studies.
pub const PHASE_BOX: f64 = 6.0;
pub const PACKET_SIGMA: f64 = 0.85;
pub const PACKET_CHIRP: f64 = 0.25;
/// Fraction of the CFL bound used as time step.
pub const CFL_FRACTION: f64 = 0.9;

fn spacing(n: usize) -> f64 {
    2.0 * PHASE_BOX / (n - 1) as f64
}

/// `max ‖density_from_family(evolve_family(fam)) − U ρ U†‖` for a random
/// `m`-level family on an open 1D grid.
pub fn mixture_commuting_square(nodes: usize, m: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = ParameterGrid::uniform(1, -1.0, 1.0, nodes, Boundary::Open)?;
    let w = WeightDensity::from_fn(grid.clone(), |r| (1.0 - r[0] * r[0]).powi(2))?;
    let states: Vec<CVector> = (0..nodes)
        .map(|_| {
            let v = linalg::random_vector(&mut rng, m);
            let n = v.norm();
            v / C64::new(n, 0.0)
        })
        .collect();
    let fam = WaveFamily::new(grid, states, 1.0)?;
    let h = HermitianOperator::new(linalg::random_hermitian(&mut rng, m))?;
    let t = 0.7;
    let lhs = density_from_family(&w, &evolve_family(&fam, &h, t)?)?;
    let rhs = evolve_density(&density_from_family(&w, &fam)?, &h, t, fam.hbar())?;
    Ok(max_abs(&(lhs.entries() - rhs.entries())))
}

#[derive(Debug, Clone, Serialize)]
pub struct BerryFluxStudy {
    /// Wilson-loop total flux divided by `2πħ`, per level.
    pub wilson_chern: Vec<f64>,
    /// Differential-backend flux relative error against `2πħ`.
    pub differential: ConvergenceTable,
}

pub fn berry_flux_study(nodes: &[usize], hbar: f64) -> Result<BerryFluxStudy> {
    let mut wilson = Vec::new();
    let mut err = Vec::new();
    let mut h = Vec::new();
    for &n in nodes {
        let fam = catalog::qwz_family(n, hbar)?;
        let quantum = 2.0 * PI * hbar;
        wilson.push(total_flux(&berry_curvature(&fam, CurvatureBackend::WilsonLoop)?, None)? / quantum);
        let d = total_flux(&berry_curvature(&fam, CurvatureBackend::Differential)?, None)?;
        err.push((d - quantum).abs() / quantum);
        h.push(fam.grid().spacing(0));
    }
    let dt = vec![0.0; h.len()];
    Ok(BerryFluxStudy { wilson_chern: wilson, differential: ConvergenceTable::new("berry_flux_differential", h, dt, err)? })
}

/// Relative error of the right-leg pairing identity per level.
pub fn pairing_study(nodes: &[usize], hbar: f64) -> Result<ConvergenceTable> {
    let mut h = Vec::new();
    let mut err = Vec::new();
    for &n in nodes {
        let (fam, w, gamma) = catalog::pairing_setup(n, hbar)?;
        err.push(right_leg_pairing_check(&fam, &w, &gamma)?.relative_error());
        h.push(fam.grid().spacing(0));
    }
    let dt = vec![0.0; h.len()];
    ConvergenceTable::new("right_leg_pairing", h, dt, err)
}

/// Sixteen particles with random positive weights in `[−1, 1]²`.
pub fn reference_ensemble(seed: u64) -> Result<WeightedEnsemble> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..16).map(|_| PhasePoint::one(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let w = (0..16).map(|_| rng.random_range(0.5..1.5)).collect();
    WeightedEnsemble::new(w, pts)
}

pub fn weak_test_functions() -> Vec<(&'static str, TestFunction)> {
    vec![
        ("q", TestFunction::q()),
        ("p", TestFunction::p()),
        ("q^2", TestFunction::monomial(2, 0)),
        ("qp", TestFunction::monomial(1, 1)),
    ]
}

/// Residuals below this are rounding; the identity then holds exactly for
/// the integrator and no slope is fitted.
pub const EXACT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct WeakStudy {
    pub test_function: String,
    pub dt: Vec<f64>,
    pub residual: Vec<f64>,
    pub exact: bool,
    pub slope: Option<f64>,
}

/// Verlet weak-Liouville residual at `t = 1` for the harmonic oscillator.
pub fn weak_liouville_study(dts: &[f64], seed: u64) -> Result<Vec<WeakStudy>> {
    let e = reference_ensemble(seed)?;
    let h = HamiltonianSpec::harmonic();
    weak_test_functions()
        .into_iter()
        .map(|(name, phi)| {
            let residual = dts
                .iter()
                .map(|dt| weak_liouville_residual(&e, &h, &phi, 1.0, *dt, Integrator::Verlet))
                .collect::<Result<Vec<_>>>()?;
            let exact = residual.iter().all(|r| *r < EXACT_FLOOR);
            let slope = if exact {
                None
            } else {
                ConvergenceTable::new(name, dts.to_vec(), dts.to_vec(), residual.clone())?.slope
            };
            Ok(WeakStudy { test_function: name.into(), dt: dts.to_vec(), residual, exact, slope })
        })
        .collect()
}

/// Every catalog map used by the equivariance checks.
pub fn catalog_maps() -> Vec<CanonicalMap> {
    let shear = CanonicalMap::linear([[1.0, 0.4], [0.0, 1.0]]).expect("unit determinant");
    vec![
        CanonicalMap::Identity,
        CanonicalMap::Translation { a: 0.3, b: -0.7 },
        CanonicalMap::Rotation { theta: 0.9 },
        CanonicalMap::Kick { s: 0.5 },
        CanonicalMap::Drift { s: -0.25 },
        shear.clone(),
        CanonicalMap::Kick { s: 0.3 }.then_after(&CanonicalMap::Rotation { theta: -0.4 }),
        CanonicalMap::Drift { s: 0.2 }.then_after(&shear),
    ]
}

struct Pullback<'a> {
    phi: &'a dyn PhaseFunction,
    eta: &'a CanonicalMap,
}

impl PhaseFunction for Pullback<'_> {
    fn value(&self, z: &PhasePoint) -> f64 {
        self.phi.value(&self.eta.apply(z))
    }

    fn gradient(&self, z: &PhasePoint) -> PhasePoint {
        let g = self.phi.gradient(&self.eta.apply(z));
        let jac = self.eta.jacobian(z);
        let mut out = PhasePoint::zeros(z.dim());
        for (i, m) in jac.iter().enumerate() {
            out.q[i] = g.q[i] * m[0][0] + g.p[i] * m[1][0];
            out.p[i] = g.q[i] * m[0][1] + g.p[i] * m[1][1];
        }
        out
    }
}

/// `max |⟨η(e), φ⟩ − ⟨e, φ∘η⟩| / max(|⟨η(e), φ⟩|, 1)` over catalog maps and
/// the weak-form test functions.
pub fn left_leg_equivariance(seed: u64) -> Result<f64> {
    let e = reference_ensemble(seed)?;
    let mut worst = 0.0f64;
    for eta in catalog_maps() {
        let moved = e.map_points(|z| eta.apply(z));
        for (_, phi) in weak_test_functions() {
            let lhs = ensemble_pairing(&moved, &phi);
            let rhs = ensemble_pairing(&e, &Pullback { phi: &phi, eta: &eta });
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportStudy {
    /// `|ψ(t)|²` (KvN) against Liouville transport of `|ψ₀|²`.
    KvnDensity,
    /// KvH Clebsch density of `ψ(t)` against Liouville transport of the
    /// Clebsch density of `ψ₀`.
    KvhClebsch,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportLevel {
    pub nodes: usize,
    pub h: f64,
    pub dt: f64,
    pub error: f64,
    /// `max_t |∫ f_kvh − ∫ |ψ|²|` over output times (KvH only).
    pub mass_gap: Option<f64>,
    pub max_leakage: f64,
    pub norm_drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportResult {
    pub study: TransportStudy,
    pub hamiltonian: String,
    pub levels: Vec<TransportLevel>,
    pub table: ConvergenceTable,
}

/// Centered chirped packet on the `n²` reference box.
pub fn transport_packet(n: usize, hbar: f64) -> Result<ClassicalWaveFunction> {
    let grid = PhaseGrid2D::square(PHASE_BOX, n)?;
    catalog::chirped_packet(&grid, hbar, [0.0, 0.0], PACKET_SIGMA, PACKET_CHIRP)
}

pub fn transport_level(study: TransportStudy, h: &HamiltonianSpec, n: usize, t: f64, outputs: usize) -> Result<TransportLevel> {
    let psi0 = transport_packet(n, 1.0)?;
    let grid = psi0.grid().clone();
    let scheme = Scheme::default();
    let dt = CFL_FRACTION * cfl_bound(h, &grid);
    let steps = (t / dt).ceil() as usize;
    let mut cfg = EvolveConfig::new(t, dt).with_scheme(scheme);
    cfg.record_every = (steps / outputs.max(1)).max(1);
    cfg.keep_snapshots = study == TransportStudy::KvhClebsch;
    let (mode, clebsch) = match study {
        TransportStudy::KvnDensity => (EvolutionMode::Kvn, ClebschMode::Modulus),
        TransportStudy::KvhClebsch => (EvolutionMode::Kvh, ClebschMode::Kvh),
    };
    let f0 = clebsch_density(&psi0, clebsch, scheme)?;
    let (psi_t, rec) = evolve_wave(&psi0, h, mode, &cfg)?;
    let (f_t, lrec) = evolve_liouville(&f0, h, &EvolveConfig::new(t, dt).with_scheme(scheme))?;
    let error = clebsch_density(&psi_t, clebsch, scheme)?.relative_l2(&f_t)?;
    let mass_gap = if cfg.keep_snapshots {
        let mut gap = 0.0f64;
        for snap in rec.snapshots.iter().cloned() {
            let psi = snap.wave().expect("wave snapshots");
            let f = clebsch_density(&psi, ClebschMode::Kvh, scheme)?;
            gap = gap.max((f.total() - psi.norm_sq()).abs());
        }
        Some(gap)
    } else {
        None
    };
    Ok(TransportLevel {
        nodes: n,
        h: spacing(n),
        dt: rec.dt_used,
        error,
        mass_gap,
        max_leakage: rec.max_leakage().max(lrec.max_leakage()),
        norm_drift: rec.max_mass_drift(),
    })
}

pub fn transport_study(study: TransportStudy, h: &HamiltonianSpec, nodes: &[usize], t: f64) -> Result<TransportResult> {
    let levels = nodes.iter().map(|&n| transport_level(study, h, n, t, 10)).collect::<Result<Vec<_>>>()?;
    let table = ConvergenceTable::new(
        format!("{study:?}"),
        levels.iter().map(|l| l.h).collect(),
        levels.iter().map(|l| l.dt).collect(),
        levels.iter().map(|l| l.error).collect(),
    )?;
    Ok(TransportResult { study, hamiltonian: format!("{:?}", h.kind()), levels, table })
}

/// Operator pairs of the prequantum homomorphism study.
pub fn commutator_pairs() -> Vec<(&'static str, HamiltonianSpec, HamiltonianSpec)> {
    let q = HamiltonianSpec::linear(1.0, 0.0);
    let p = HamiltonianSpec::linear(0.0, 1.0);
    let q2 = HamiltonianSpec::polynomial(Polynomial::new(vec![(1.0, 2, 0)]));
    let p2 = HamiltonianSpec::polynomial(Polynomial::new(vec![(1.0, 0, 2)]));
    vec![
        ("(q,p)", q.clone(), p),
        ("(q^2,p^2)", q2, p2),
        ("(H_harm,q)", HamiltonianSpec::harmonic(), q),
    ]
}

pub fn commutator_study(h: &HamiltonianSpec, k: &HamiltonianSpec, nodes: &[usize], name: &str) -> Result<ConvergenceTable> {
    let mut err = Vec::new();
    for &n in nodes {
        err.push(commutator_defect(h, k, &transport_packet(n, 1.0)?, Scheme::default())?);
    }
    let hs: Vec<f64> = nodes.iter().map(|&n| spacing(n)).collect();
    ConvergenceTable::new(name, hs, vec![0.0; nodes.len()], err)
}

/// `commutator_defect(H, H)` for the harmonic oscillator.
pub fn self_commutator(n: usize) -> Result<f64> {
    let h = HamiltonianSpec::harmonic();
    commutator_defect(&h, &h, &transport_packet(n, 1.0)?, Scheme::default())
}

/// KvH evolution under `H = αq` against the exact flow's group action.
/// Returns the phase-fitted relative error.
pub fn flow_action_consistency(alpha: f64, t: f64) -> Result<f64> {
    let grid = PhaseGrid2D::new((-PHASE_BOX, PHASE_BOX), (-PHASE_BOX, PHASE_BOX), 32, 481, PhaseBoundary::Open)?;
    let psi0 = ClassicalWaveFunction::from_fn(grid.clone(), 1.0, |q, p| {
        let r2 = q * q + (p - 0.5).powi(2);
        C64::from_polar((-r2 / (4.0 * 0.36)).exp(), 0.3 * q + 0.2 * p)
    })?;
    let h = HamiltonianSpec::linear(alpha, 0.0);
    let scheme = Scheme::with_order(StencilOrder::Fourth);
    let dt = CFL_FRACTION * cfl_bound(&h, &grid);
    let (psi_t, _) = evolve_wave(&psi0, &h, EvolutionMode::Kvh, &EvolveConfig::new(t, dt).with_scheme(scheme))?;
    let g = GroupElement::new(CanonicalMap::Translation { a: 0.0, b: alpha * t }, 0.0);
    let exact = kvh_group_action(&psi0, &g)?;
    Ok(phase_fitted_distance(&psi_t, &exact)?.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct UhlmannSummary {
    pub max_trace_commutator: f64,
    pub samples: usize,
    pub hybrid_square: f64,
    pub rho_square: f64,
    /// Smallest eigenvalue reported by the admissibility gate for the pinned
    /// instance, when it was rejected.
    pub rejected_eigenvalue: Option<f64>,
}

/// Pinned hybrid instance with `ρ = diag(1.25, −0.25)`.
pub fn pinned_inadmissible() -> Result<HybridState> {
    let psi = WaveFunction::from_slice(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], 1.0)?;
    let w = WOperator::new(CMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.0, 0.0].map(|v| C64::new(v, 0.0))), 1.0)?;
    HybridState::new(psi, w)
}

pub fn uhlmann_summary(samples: usize, seed: u64) -> Result<UhlmannSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let n = rng.random_range(1..=8);
        let w = linalg::random_matrix(&mut rng, n, n);
        worst = worst.max(linalg::commutator(&w, &w.adjoint()).trace().norm());
    }
    let n = 4;
    let h = HermitianOperator::new(linalg::random_hermitian(&mut rng, n))?;
    let t = 0.9;
    let w0 = WOperator::new(linalg::random_matrix(&mut rng, n, 3), 1.0)?;
    let rho_t = evolve_density(&rho_from_w(&w0), &h, t, 1.0)?;
    let rho_square = max_abs(&(rho_from_w(&crate::uhlmann::evolve_w(&w0, &h, t)?).entries() - rho_t.entries()));

    // ρ = V diag(3/4, 1/4, 0, …) V†: mixed and admissible.
    let v = linalg::random_unitary(&mut rng, n);
    let psi = WaveFunction::new(v.column(0).into_owned(), 1.0)?;
    let mut lower = CMatrix::zeros(n, n);
    lower[(1, 0)] = C64::new(0.5, 0.0);
    let s0 = HybridState::new(psi, WOperator::new(&v * lower * v.adjoint(), 1.0)?)?;
    let (_, rho) = evolve_hybrid(&s0, &h, t)?;
    let hybrid_square = max_abs(&(rho.entries() - evolve_density(&s0.density(), &h, t, 1.0)?.entries()));
    let pauli_x = HermitianOperator::new(linalg::pauli_x())?;
    let rejected_eigenvalue = match evolve_hybrid(&pinned_inadmissible()?, &pauli_x, t) {
        Err(Error::Inadmissible { eigenvalue }) => Some(eigenvalue),
        _ => None,
    };
    Ok(UhlmannSummary { max_trace_commutator: worst, samples, hybrid_square, rho_square, rejected_eigenvalue })
}
