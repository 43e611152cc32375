//! The verification suite: every module invariant plus corrupted-J
//! controls, shared by the command line and the acceptance tests.

pub mod samples;
pub mod studies;

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::berry::{berry_curvature, divergence_residual, stream_vector_field, CurvatureBackend};
use crate::catalog;
use crate::classical::{
    canonical::path_independence_defect, group_compose, hamilton_flow, param_right_leg, step, CanonicalMap,
    GroupElement, HamiltonianSpec, Integrator, ParamPointFamily, PhaseFunction, PhasePoint, Polynomial,
    TestFunction, WeightedEnsemble,
};
use crate::cochain::{exterior_derivative, Cochain};
use crate::error::{Error, Result};
use crate::grid::{Boundary, ParameterGrid, WeightDensity};
use crate::koopman::{clebsch_density, evaluate_convention, ClebschMode, Scheme, SignConvention};
use crate::linalg::{self, max_abs, CMatrix, CVector, C64, I};
use crate::mixtures::{density_from_family, density_from_mixture, DiscreteMixture, WaveFamily};
use crate::quantum::{evolve_density, symplectic_form, DensityOperator, HermitianOperator, WaveFunction};
use crate::uhlmann::{adjoint_momentum_map, WOperator};
use crate::verify::{
    corrupt, equivariance_check, hamiltonian_action_check, noether_check, value_identity_check, CheckReport,
    Convention, Corruption, Map, SymplecticSample, Vector,
};
use samples::{complex_to_real, matrix_to_real, real_to_complex, real_to_matrix};
use studies::TransportStudy;

/// Version of the JSON report layout.
pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Module {
    QuantumCore,
    Mixtures,
    Berry,
    ClassicalCore,
    Koopman,
    Uhlmann,
}

impl Module {
    pub const ALL: [Module; 6] =
        [Module::QuantumCore, Module::Mixtures, Module::Berry, Module::ClassicalCore, Module::Koopman, Module::Uhlmann];

    pub fn name(self) -> &'static str {
        match self {
            Module::QuantumCore => "quantum_core",
            Module::Mixtures => "mixtures",
            Module::Berry => "berry",
            Module::ClassicalCore => "classical_core",
            Module::Koopman => "koopman",
            Module::Uhlmann => "uhlmann",
        }
    }
}

/// Parses `all` or a module name into the modules to run.
pub fn parse_suite(name: &str) -> Result<Vec<Module>> {
    if name == "all" {
        return Ok(Module::ALL.to_vec());
    }
    Module::from_str(name).map(|m| vec![m])
}

impl FromStr for Module {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Module::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<_> = Module::ALL.iter().map(|m| m.name()).collect();
            Error::InvalidInput(format!("unknown suite '{s}'; expected all or one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Multiplies every residual tolerance.
    pub tol_scale: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: 20240611, tol_scale: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Check,
    /// Falsification control: must fail.
    Control,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub module: Module,
    pub role: Role,
    pub report: CheckReport,
    /// Checks pass, controls fail.
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub options: SuiteOptions,
    pub modules: Vec<Module>,
    pub entries: Vec<SuiteEntry>,
    pub checks_passed: bool,
    pub controls_failed: bool,
}

impl SuiteReport {
    pub fn success(&self) -> bool {
        self.checks_passed && self.controls_failed
    }

    pub fn exit_code(&self) -> i32 {
        if self.success() { 0 } else { 1 }
    }

    pub fn failures(&self) -> impl Iterator<Item = &SuiteEntry> {
        self.entries.iter().filter(|e| !e.ok)
    }
}

struct Runner {
    opts: SuiteOptions,
    module: Module,
    entries: Vec<SuiteEntry>,
}

impl Runner {
    fn tol(&self, t: f64) -> f64 {
        t * self.opts.tol_scale
    }

    fn seed(&self, k: u64) -> u64 {
        self.opts.seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn push(&mut self, role: Role, report: CheckReport) {
        let ok = match role {
            Role::Check => report.passed(),
            Role::Control => !report.passed(),
        };
        log::info!("[{}] {:?} {}: {}", self.module.name(), role, report.name, report.detail);
        self.entries.push(SuiteEntry { module: self.module, role, report, ok });
    }

    fn check(&mut self, report: CheckReport) {
        self.push(Role::Check, report);
    }

    fn control(&mut self, report: CheckReport) {
        self.push(Role::Control, report);
    }

    fn scalar(&mut self, name: &str, residual: f64, tol: f64) {
        let r = CheckReport::scalar(name, self.opts.seed, residual, self.tol(tol));
        self.check(r);
    }

    /// Runs an action check and its two corrupted-J controls.
    fn action_with_controls(
        &mut self,
        make: &dyn Fn() -> Result<SymplecticSample>,
        samples: usize,
        steps: &[f64],
        tol: f64,
        value_tol: Option<f64>,
        perturb_control: bool,
    ) -> Result<()> {
        let seed = self.seed(11);
        let tol = self.tol(tol);
        let s = make()?;
        self.check(hamiltonian_action_check(&s, samples, steps, tol, seed)?);
        if let Some(vt) = value_tol {
            self.check(value_identity_check(&s, samples, self.tol(vt), seed)?);
        }
        let mut controls = vec![Corruption::SignFlip];
        if perturb_control {
            controls.push(Corruption::Perturb { scale: 1e-2, seed: self.seed(13) });
        }
        for c in controls {
            let bad = make()?.corrupted(c);
            self.control(hamiltonian_action_check(&bad, samples, steps, tol, seed)?);
            if let Some(vt) = value_tol {
                self.control(value_identity_check(&bad, samples, self.tol(vt), seed)?);
            }
        }
        Ok(())
    }

    /// `J(Ux) = U J(x) U†` for a left `U(n)` action on fibres of length `n`,
    /// with a perturbed-J control.
    fn unitary_equivariance(&mut self, name: &str, make: &dyn Fn() -> Result<SymplecticSample>, n: usize, tol: f64) -> Result<()> {
        let seed = self.seed(17);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let group: Vec<CMatrix> = (0..4).map(|_| linalg::random_unitary(&mut rng, n)).collect();
        let push = |u: &CMatrix, x: &[f64]| -> Vector {
            let z = real_to_complex(x);
            complex_to_real(z.chunks_exact(n).flat_map(|c| (u * CVector::from_column_slice(c)).iter().copied().collect::<Vec<_>>()))
        };
        let coadjoint = |u: &CMatrix, mu: &[f64]| matrix_to_real(&(u * real_to_matrix(mu, n, n) * u.adjoint()));
        let tol = self.tol(tol);
        for role in [Role::Check, Role::Control] {
            let s = make()?;
            let j: Map = match role {
                Role::Check => s.momentum,
                Role::Control => corrupt(s.momentum, Corruption::Perturb { scale: 1e-2, seed: self.seed(19) }),
            };
            let sampler = s.sample_point;
            let label = if role == Role::Control { format!("{name} [perturbed control]") } else { name.to_string() };
            let r = equivariance_check(&label, &*j, &group, 8, &*sampler, &push, &coadjoint, tol, seed)?;
            self.push(role, r);
        }
        Ok(())
    }
}

/// Runs the selected modules.
pub fn run_suite(modules: &[Module], opts: SuiteOptions) -> Result<SuiteReport> {
    if !(opts.tol_scale > 0.0 && opts.tol_scale.is_finite()) {
        return Err(Error::InvalidInput(format!("tolerance scale must be positive, got {}", opts.tol_scale)));
    }
    let mut entries = Vec::new();
    for &module in modules {
        let mut r = Runner { opts, module, entries: Vec::new() };
        match module {
            Module::QuantumCore => quantum_suite(&mut r)?,
            Module::Mixtures => mixtures_suite(&mut r)?,
            Module::Berry => berry_suite(&mut r)?,
            Module::ClassicalCore => classical_suite(&mut r)?,
            Module::Koopman => koopman_suite(&mut r)?,
            Module::Uhlmann => uhlmann_suite(&mut r)?,
        }
        entries.extend(r.entries);
    }
    let checks_passed = entries.iter().filter(|e| e.role == Role::Check).all(|e| e.ok);
    let controls_failed = entries.iter().filter(|e| e.role == Role::Control).all(|e| e.ok);
    Ok(SuiteReport { schema: REPORT_SCHEMA, options: opts, modules: modules.to_vec(), entries, checks_passed, controls_failed })
}

const QUANTUM_DIM: usize = 4;
const QUANTUM_SAMPLES: usize = 32;
const QUANTUM_STEPS: [f64; 3] = [1e-1, 5e-2, 2.5e-2];

fn random_skew(seed: u64, n: usize) -> CMatrix {
    linalg::random_skew(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

fn quantum_suite(r: &mut Runner) -> Result<()> {
    let n = QUANTUM_DIM;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed(1));
    let mut anti = 0.0f64;
    for _ in 0..QUANTUM_SAMPLES {
        let a = WaveFunction::new(linalg::random_vector(&mut rng, n), 1.0)?;
        let b = WaveFunction::new(linalg::random_vector(&mut rng, n), 1.0)?;
        anti = anti.max((symplectic_form(&a, &b)? + symplectic_form(&b, &a)?).abs());
    }
    r.scalar("quantum: ω antisymmetry", anti, 1e-12);

    let xi = random_skew(r.seed(2), n);
    let make = || Ok(samples::quantum_pure(n, 1.0, xi.clone()));
    r.action_with_controls(&make, QUANTUM_SAMPLES, &QUANTUM_STEPS, 1e-11, Some(1e-12), true)?;
    let mut wrong = samples::quantum_pure(n, 1.0, xi.clone());
    wrong.convention = Convention::Right;
    wrong.name = format!("{} [wrong convention control]", wrong.name);
    let seed = r.seed(11);
    let tol = r.tol(1e-11);
    r.control(hamiltonian_action_check(&wrong, QUANTUM_SAMPLES, &QUANTUM_STEPS, tol, seed)?);
    r.unitary_equivariance("quantum: equivariance of J = −iħψψ†", &make, n, 1e-11)?;

    // Noether series along an exact density trajectory.
    let h = linalg::random_hermitian(&mut rng, n);
    let hop = HermitianOperator::new(h.clone())?;
    let w = linalg::random_matrix(&mut rng, n, n);
    let rho0 = DensityOperator::new(&w * w.adjoint() / C64::new((&w * w.adjoint()).trace().re, 0.0))?;
    let traj: Vec<Vector> = (0..=20)
        .map(|k| evolve_density(&rho0, &hop, 0.1 * k as f64, 1.0).map(|rho| matrix_to_real(rho.entries())))
        .collect::<Result<_>>()?;
    let j_of_rho = move |x: &[f64]| matrix_to_real(&(real_to_matrix(x, n, n) * C64::new(0.0, -1.0)));
    for (label, xi) in [("trace (ξ = i·1)", CMatrix::identity(n, n) * I), ("energy (ξ = −iH)", &h * (-I))] {
        let comm = max_abs(&linalg::commutator(&h, &xi));
        let xi_flat = matrix_to_real(&xi);
        let tol = r.tol(1e-11);
        for role in [Role::Check, Role::Control] {
            let j: Map = match role {
                Role::Check => Box::new(j_of_rho),
                Role::Control => corrupt(Box::new(j_of_rho), Corruption::Perturb { scale: 1e-2, seed: r.seed(23) }),
            };
            let pair = |x: &Vector| j(x).iter().zip(&xi_flat).map(|(a, b)| a * b).sum::<f64>();
            let suffix = if role == Role::Control { " [perturbed control]" } else { "" };
            let mut rep = noether_check(&format!("quantum: Noether {label}{suffix}"), &traj, &pair, tol, r.opts.seed)?;
            if comm > 1e-10 {
                rep.verdict = crate::verify::Verdict::Fail;
                rep.detail = format!("[H, ξ] = {comm:.3e} is not zero");
            }
            r.push(role, rep);
        }
    }

    // Spectrum and purity transport.
    let t = 1.3;
    let rho_t = evolve_density(&rho0, &hop, t, 1.0)?;
    let (e0, et) = (rho0.eigenvalues(), rho_t.eigenvalues());
    let spec = e0.iter().zip(&et).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.scalar("quantum: spectrum invariance", spec, 1e-10);
    r.scalar("quantum: purity transport", (rho_t.purity_defect() - rho0.purity_defect()).abs(), 1e-10);
    Ok(())
}

fn random_family(rng: &mut ChaCha8Rng, grid: ParameterGrid, m: usize) -> Result<WaveFamily> {
    let states = (0..grid.len())
        .map(|_| {
            let v = linalg::random_vector(rng, m);
            let n = v.norm();
            v / C64::new(n, 0.0)
        })
        .collect();
    WaveFamily::new(grid, states, 1.0)
}

fn mixtures_suite(r: &mut Runner) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed(3));
    let m = 4;
    let states: Vec<WaveFunction> = (0..5)
        .map(|_| {
            let v = linalg::random_vector(&mut rng, m);
            let n = v.norm();
            WaveFunction::new(v / C64::new(n, 0.0), 1.0)
        })
        .collect::<Result<_>>()?;
    let w1: Vec<f64> = (0..5).map(|_| rng.random_range(0.1..1.0)).collect();
    let w2: Vec<f64> = (0..5).map(|_| rng.random_range(0.1..1.0)).collect();
    let sum: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a + b).collect();
    let d = |w: &[f64]| -> Result<DensityOperator> { Ok(density_from_mixture(&DiscreteMixture::new(w.to_vec(), states.clone())?)) };
    let (r1, r2, rs) = (d(&w1)?, d(&w2)?, d(&sum)?);
    r.scalar("mixtures: linearity in weights", max_abs(&(rs.entries() - r1.entries() - r2.entries())), 1e-12);

    let grid = ParameterGrid::uniform(2, 0.0, 2.0 * PI, 12, Boundary::Periodic)?;
    let fam = random_family(&mut rng, grid.clone(), m)?;
    let w = WeightDensity::from_fn(grid.clone(), |x| 1.0 + 0.5 * x[0].sin() * x[1].cos())?;
    let rho = density_from_family(&w, &fam)?;
    let min_eig = [rho.min_eigenvalue(), r1.min_eigenvalue(), rs.min_eigenvalue()].into_iter().fold(f64::INFINITY, f64::min);
    r.scalar("mixtures: positivity of produced densities", (-min_eig).max(0.0), 1e-10);

    let mut perm: Vec<usize> = (0..grid.len()).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let pfam = fam.map_nodes(|i, _| fam.state(perm[i]).clone())?;
    let pw = WeightDensity::new(grid.clone(), perm.iter().map(|&j| w.values()[j]).collect())?;
    let prho = density_from_family(&pw, &pfam)?;
    r.scalar("mixtures: reparameterization invariance", max_abs(&(prho.entries() - rho.entries())) / max_abs(rho.entries()), 1e-13);

    let xi = random_skew(r.seed(4), m);
    let make = || samples::mixture_family(16, m, 1.0, xi.clone());
    r.action_with_controls(&make, 8, &QUANTUM_STEPS, 1e-11, Some(1e-12), true)?;
    r.unitary_equivariance("mixtures: left-leg equivariance", &make, m, 1e-11)?;
    r.scalar("mixtures: commuting square (64 nodes, m=4)", studies::mixture_commuting_square(64, 4, r.seed(5))?, 1e-11);
    Ok(())
}

fn berry_suite(r: &mut Runner) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed(6));
    let g3 = ParameterGrid::uniform(3, 0.0, 1.0, 6, Boundary::Open)?;
    let mut f0 = Cochain::zeros(&g3, 0)?;
    for i in 0..g3.len() {
        f0.set(0, i, rng.random_range(-1.0..1.0));
    }
    let df = exterior_derivative(&f0)?;
    let ddf = exterior_derivative(&df)?;
    r.scalar("berry: d∘d = 0", ddf.max_abs() / df.max_abs().max(f64::MIN_POSITIVE), 1e-12);

    let hbar = 1.0;
    let fam = catalog::qwz_family(64, hbar)?;
    let regauged = fam.map_nodes(|i, s| {
        let x = fam.grid().coord(i);
        s * C64::from_polar(1.0, (x[0].sin() + 2.0 * x[1].cos() + 0.3) / hbar)
    })?;
    for (backend, tol) in [(CurvatureBackend::WilsonLoop, 1e-12), (CurvatureBackend::Differential, 1e-10)] {
        let b = berry_curvature(&fam, backend)?;
        let bg = berry_curvature(&regauged, backend)?;
        r.scalar(&format!("berry: gauge invariance ({backend:?})"), b.max_diff(&bg)? / b.max_abs(), tol);
    }

    let flux = studies::berry_flux_study(&[32, 64, 128], hbar)?;
    let chern = flux.wilson_chern[1];
    r.scalar("berry: Wilson-loop flux quantization (64²)", (chern - chern.round()).abs().max((chern - 1.0).abs()), 1e-10);
    let diff = &flux.differential;
    r.scalar("berry: differential flux within 2% (64²)", diff.error[1], 0.02);
    r.check(CheckReport::slope_check("berry: differential flux convergence", r.opts.seed, &diff.error, &diff.h, 2.0, 0.3, None));

    let pairing = studies::pairing_study(&[32, 64, 128], hbar)?;
    r.scalar("berry: right-leg pairing (64²)", pairing.error[1], 1e-2);
    r.check(CheckReport::slope_check("berry: right-leg pairing convergence", r.opts.seed, &pairing.error, &pairing.h, 2.0, 0.3, None));

    let (pfam, w, gamma) = catalog::pairing_setup(64, hbar)?;
    let xi = stream_vector_field(&gamma, &w)?;
    r.scalar("berry: stream field is w-divergence free", divergence_residual(&xi, &w)?, 1e-12);

    let shifted = pfam.map_nodes(|i, _| {
        let mut j = pfam.grid().neighbor(i, 0, 3).expect("periodic");
        j = pfam.grid().neighbor(j, 1, 5).expect("periodic");
        pfam.state(j).clone()
    })?;
    let b = berry_curvature(&pfam, CurvatureBackend::WilsonLoop)?;
    let bs = berry_curvature(&shifted, CurvatureBackend::WilsonLoop)?;
    let expected = b.shifted(0, 3)?.shifted(1, 5)?;
    r.scalar("berry: equivariance under periodic shifts", bs.max_diff(&expected)?, 1e-13);

    let make = || samples::berry_right_leg(64, hbar);
    r.action_with_controls(&make, 4, &[4e-2, 2e-2, 1e-2], 1e-2, None, false)?;
    Ok(())
}

fn classical_suite(r: &mut Runner) -> Result<()> {
    let pts = [PhasePoint::one(0.3, -0.7), PhasePoint::one(-1.1, 0.4), PhasePoint::one(0.9, 1.3)];
    let defect = studies::catalog_maps()
        .iter()
        .flat_map(|m| pts.iter().map(move |z| m.symplectic_defect(z)))
        .fold(0.0, f64::max);
    r.scalar("classical: symplectic Jacobians of catalog maps", defect, 1e-10);

    let seed = r.seed(7);
    r.scalar("classical: left-leg equivariance (test-function pairing)", studies::left_leg_equivariance(seed)?, 1e-12);
    let e = studies::reference_ensemble(seed)?;
    let weights = e.weights().to_vec();
    let maps = studies::catalog_maps();
    let j = {
        let w = weights.clone();
        move |x: &[f64]| -> Vector { w.iter().zip(x.chunks_exact(2)).flat_map(|(w, z)| [*w, z[0], z[1]]).collect() }
    };
    let push = |m: &CanonicalMap, x: &[f64]| -> Vector {
        x.chunks_exact(2).flat_map(|z| m.apply(&PhasePoint::one(z[0], z[1])).to_vec()).collect()
    };
    let coadjoint = |m: &CanonicalMap, mu: &[f64]| -> Vector {
        mu.chunks_exact(3)
            .flat_map(|c| {
                let z = m.apply(&PhasePoint::one(c[1], c[2]));
                [c[0], z.q[0], z.p[0]]
            })
            .collect()
    };
    let sampler = |rng: &mut ChaCha8Rng| -> Vector { (0..32).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let tol = r.tol(1e-12);
    for role in [Role::Check, Role::Control] {
        let jm: Map = match role {
            Role::Check => Box::new(j.clone()),
            Role::Control => corrupt(Box::new(j.clone()), Corruption::Perturb { scale: 1e-2, seed: r.seed(29) }),
        };
        let label = if role == Role::Control {
            "classical: Klimontovich equivariance [perturbed control]"
        } else {
            "classical: Klimontovich equivariance (pushforward)"
        };
        let rep = equivariance_check(label, &*jm, &maps, 4, &sampler, &push, &coadjoint, tol, seed)?;
        r.push(role, rep);
    }

    let pgrid = ParameterGrid::uniform(2, 0.0, 2.0 * PI, 16, Boundary::Periodic)?;
    let pw = WeightDensity::uniform_probability(pgrid)?;
    let pfam = ParamPointFamily::from_fn(pw.clone(), |x| {
        PhasePoint::one(x[0].sin() + 0.3 * x[1].cos(), x[0].cos() * x[1].sin() + 0.2 * (x[0] + x[1]).sin())
    })?;
    let grid = pfam.grid().clone();
    let spts = (0..grid.len())
        .map(|i| {
            let j = grid.neighbor(grid.neighbor(i, 0, 2).expect("periodic"), 1, 7).expect("periodic");
            pfam.points()[j].clone()
        })
        .collect();
    let sfam = ParamPointFamily::new(pw, spts)?;
    let expected = param_right_leg(&pfam)?.shifted(0, 2)?.shifted(1, 7)?;
    r.scalar("classical: right-leg equivariance under periodic shifts", param_right_leg(&sfam)?.max_diff(&expected)?, 1e-14);

    let h = Polynomial::new(vec![(1.0, 3, 0), (0.5, 1, 2), (-0.7, 0, 3), (0.4, 2, 1)]);
    let make = || Ok(samples::klimontovich(weights.clone(), &h));
    r.action_with_controls(&make, 8, &[4e-3, 2e-3, 1e-3], 1e-4, None, true)?;

    for w in studies::weak_liouville_study(&[0.1, 0.05, 0.025], seed)? {
        let name = format!("classical: weak Liouville residual, φ = {}", w.test_function);
        if w.exact {
            r.scalar(&format!("{name} (exact for Verlet)"), w.residual.iter().cloned().fold(0.0, f64::max), studies::EXACT_FLOOR);
        } else {
            r.check(CheckReport::slope_check(name, r.opts.seed, &w.residual, &w.dt, 2.0, 0.3, None));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(r.seed(8));
    let random_map = |rng: &mut ChaCha8Rng| match rng.random_range(0..4) {
        0 => CanonicalMap::Translation { a: rng.random_range(-1.0..1.0), b: rng.random_range(-1.0..1.0) },
        1 => CanonicalMap::Rotation { theta: rng.random_range(-PI..PI) },
        2 => CanonicalMap::Kick { s: rng.random_range(-0.5..0.5) },
        _ => CanonicalMap::Drift { s: rng.random_range(-0.5..0.5) },
    };
    let mut worst = 0.0f64;
    let mut path = 0.0f64;
    for _ in 0..8 {
        let g: Vec<GroupElement> = (0..3).map(|_| GroupElement::new(random_map(&mut rng), rng.random_range(-1.0..1.0))).collect();
        let left = group_compose(&group_compose(&g[0], &g[1], 1)?, &g[2], 1)?;
        let right = group_compose(&g[0], &group_compose(&g[1], &g[2], 1)?, 1)?;
        worst = worst.max((left.kappa - right.kappa).abs());
        path = path.max(path_independence_defect(&g[0].map, &PhasePoint::one(0.4, -0.3))?);
    }
    r.scalar("classical: 2-cocycle identity", worst, 1e-8);
    r.scalar("classical: cocycle path independence", path, 1e-8);

    let h = HamiltonianSpec::harmonic();
    let dt = 0.05;
    let mut z = PhasePoint::one(1.0, 0.0);
    let e0 = h.value(&z);
    let steps = 1_000_000;
    let window = steps / 10;
    let (mut early, mut late) = (0.0f64, 0.0f64);
    for k in 0..steps {
        z = step(&z, &h, dt, Integrator::Verlet);
        let d = (h.value(&z) - e0).abs() / e0;
        if k < window {
            early = early.max(d);
        } else if k >= steps - window {
            late = late.max(d);
        }
    }
    r.scalar("classical: Verlet energy oscillation bounded by dt²", early.max(late), dt * dt);
    r.scalar("classical: Verlet energy has no secular drift", (late - early).max(0.0) / early.max(f64::MIN_POSITIVE), 1e-2);

    let ens = WeightedEnsemble::new(
        vec![1.0, 0.5, 2.0],
        vec![
            PhasePoint::new(vec![1.0, 0.2], vec![0.0, 0.7]),
            PhasePoint::new(vec![-0.4, 0.9], vec![0.3, -0.2]),
            PhasePoint::new(vec![0.1, -0.6], vec![-0.8, 0.4]),
        ],
    )?;
    let traj: Vec<Vector> = (0..=40)
        .map(|k| hamilton_flow(&ens, &h, 0.25 * k as f64, dt, Integrator::Verlet).map(|e| flatten_ensemble(&e)))
        .collect::<Result<_>>()?;
    let wts = ens.weights().to_vec();
    let angular = move |x: &[f64]| -> Vector {
        x.chunks_exact(4)
            .zip(&wts)
            .map(|(z, w)| w * TestFunction::AngularMomentum.value(&PhasePoint::new(vec![z[0], z[1]], vec![z[2], z[3]])))
            .collect()
    };
    let tol = r.tol(dt * dt);
    for role in [Role::Check, Role::Control] {
        let jm: Map = match role {
            Role::Check => Box::new(angular.clone()),
            Role::Control => corrupt(Box::new(angular.clone()), Corruption::Perturb { scale: 1e-2, seed: r.seed(31) }),
        };
        let pair = |x: &Vector| jm(x).iter().sum::<f64>();
        let label = if role == Role::Control {
            "classical: Noether angular momentum [perturbed control]"
        } else {
            "classical: Noether angular momentum (Verlet, isotropic H)"
        };
        let rep = noether_check(label, &traj, &pair, tol, r.opts.seed)?;
        r.push(role, rep);
    }
    Ok(())
}

fn flatten_ensemble(e: &WeightedEnsemble) -> Vector {
    e.points().iter().flat_map(|z| z.to_vec()).collect()
}

fn koopman_suite(r: &mut Runner) -> Result<()> {
    let good = evaluate_convention(SignConvention::default())?;
    let literal = evaluate_convention(SignConvention::LITERAL)?;
    for (role, rep, label) in [(Role::Check, good, "default"), (Role::Control, literal, "literal")] {
        let worst = rep.clebsch_transport.max(rep.commutator);
        let name = format!("koopman: sign convention {label} {:?}", rep.convention);
        let mut c = CheckReport::scalar(name, r.opts.seed, worst, crate::koopman::convention::CONVENTION_TOL);
        c.detail = format!("Clebsch transport {:.3e}, commutator {:.3e}", rep.clebsch_transport, rep.commutator);
        r.push(role, c);
    }

    let levels = [48, 96, 192];
    for h in [HamiltonianSpec::free(), HamiltonianSpec::harmonic()] {
        let res = studies::transport_study(TransportStudy::KvnDensity, &h, &levels, 1.0)?;
        let label = format!("{:?}", h.kind());
        let t = &res.table;
        r.check(CheckReport::slope_check(format!("koopman: KvN density consistency, {label}"), r.opts.seed, &t.error, &t.h, 2.0, 0.3, None));
        let drift = res.levels.iter().map(|l| l.norm_drift).fold(0.0, f64::max);
        r.scalar(&format!("koopman: KvN norm drift per unit time, {label}"), drift, 1e-6);
        let kvh = studies::transport_study(TransportStudy::KvhClebsch, &h, &levels, 1.0)?;
        let t = &kvh.table;
        r.check(CheckReport::slope_check(format!("koopman: KvH Clebsch transport, {label}"), r.opts.seed, &t.error, &t.h, 2.0, 0.3, None));
        let gap = kvh.levels.iter().filter_map(|l| l.mass_gap).fold(0.0, f64::max);
        r.scalar(&format!("koopman: ∫f_kvh = ∫|ψ|² along KvH evolution, {label}"), gap, 1e-8);
        let drift = kvh.levels.iter().map(|l| l.norm_drift).fold(0.0, f64::max);
        r.scalar(&format!("koopman: KvH norm drift per unit time, {label}"), drift, 1e-6);
    }

    let psi = studies::transport_packet(128, 1.0)?;
    let br = clebsch_density(&psi, ClebschMode::Bracket, Scheme::default())?;
    r.scalar("koopman: bracket density integrates to zero", br.total().abs(), 1e-8);

    for (name, h, k) in studies::commutator_pairs() {
        let t = studies::commutator_study(&h, &k, &[64, 128, 256], name)?;
        r.check(CheckReport::slope_check(format!("koopman: prequantum commutator {name}"), r.opts.seed, &t.error, &t.h, 2.0, 0.3, None));
    }
    r.scalar("koopman: prequantum commutator (H,H)", studies::self_commutator(128)?, 1e-10);
    r.scalar("koopman: KvH flow-action consistency (H = q)", studies::flow_action_consistency(1.0, 1.0)?, 1e-6);
    Ok(())
}

fn uhlmann_suite(r: &mut Runner) -> Result<()> {
    let summary = studies::uhlmann_summary(1000, r.seed(9))?;
    r.scalar("uhlmann: Tr[W, W†] = 0 (1000 samples)", summary.max_trace_commutator, 1e-12);
    r.scalar("uhlmann: ρ = WW† evolution commuting square", summary.rho_square, 1e-11);
    r.scalar("uhlmann: hybrid evolution commuting square", summary.hybrid_square, 1e-11);
    let mut gate = CheckReport::scalar("uhlmann: admissibility gate rejects diag(1.25, −0.25)", r.opts.seed, 0.0, 0.0);
    match summary.rejected_eigenvalue {
        Some(ev) => gate.detail = format!("rejected with smallest eigenvalue {ev:.6}"),
        None => {
            gate.verdict = crate::verify::Verdict::Fail;
            gate.detail = "pinned non-PSD instance was accepted".into();
        }
    }
    r.check(gate);

    let (n, m) = (4, 3);
    let xi = random_skew(r.seed(10), n);
    let make = || Ok(samples::uhlmann_left(n, m, 1.0, xi.clone()));
    r.action_with_controls(&make, 16, &QUANTUM_STEPS, 1e-11, Some(1e-12), true)?;
    r.unitary_equivariance("uhlmann: equivariance of ρ = WW†", &make, n, 1e-11)?;

    let seed = r.seed(12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let group: Vec<CMatrix> = (0..4).map(|_| linalg::random_unitary(&mut rng, n)).collect();
    let j = move |x: &[f64]| -> Vector {
        let w = WOperator::new(real_to_matrix(x, n, n), 1.0).expect("finite W");
        matrix_to_real(adjoint_momentum_map(&w).expect("square W").entries())
    };
    let push = |u: &CMatrix, x: &[f64]| matrix_to_real(&(u * real_to_matrix(x, n, n) * u.adjoint()));
    let coadjoint = |u: &CMatrix, mu: &[f64]| matrix_to_real(&(u * real_to_matrix(mu, n, n) * u.adjoint()));
    let sampler = |rng: &mut ChaCha8Rng| matrix_to_real(&linalg::random_matrix(rng, n, n));
    let tol = r.tol(1e-11);
    for role in [Role::Check, Role::Control] {
        let jm: Map = match role {
            Role::Check => Box::new(j),
            Role::Control => corrupt(Box::new(j), Corruption::Perturb { scale: 1e-2, seed: r.seed(37) }),
        };
        let label = if role == Role::Control {
            "uhlmann: adjoint momentum map equivariance [perturbed control]"
        } else {
            "uhlmann: adjoint momentum map equivariance"
        };
        let rep = equivariance_check(label, &*jm, &group, 8, &sampler, &push, &coadjoint, tol, seed)?;
        r.push(role, rep);
    }
    Ok(())
}
