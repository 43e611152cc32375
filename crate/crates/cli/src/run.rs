//! Scenario execution. Every runner returns its diagnostic series and the
//! files it wrote; the manifest is assembled by the caller.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use momlab_core::berry::{berry_connection, berry_curvature, total_flux, CurvatureBackend};
use momlab_core::catalog::{chirped_packet, qwz_family};
use momlab_core::classical::flow::step_plan;
use momlab_core::classical::{step, HamiltonianSpec, Integrator, PhaseFunction, PhasePoint, WeightedEnsemble};
use momlab_core::io::{self, DiagnosticsWriter};
use momlab_core::koopman::{
    cfl_bound, clebsch_density, evolve_liouville, evolve_wave, ClebschMode, ClassicalWaveFunction, EvolutionMode, EvolveConfig, EvolveRecord,
    PhaseBoundary, PhaseGrid2D, Scheme, StencilOrder,
};
use momlab_core::linalg::{self, max_abs, CMatrix, CVector, C64};
use momlab_core::mixtures::{density_from_family, evolve_family, WaveFamily};
use momlab_core::quantum::{dual_pairing, evolve_density};
use momlab_core::suite::studies::pinned_inadmissible;
use momlab_core::uhlmann::{evolve_hybrid, evolve_w, rho_from_w, HybridState, WOperator};
use momlab_core::{Boundary, DensityOperator, HermitianOperator, ParameterGrid, SkewHermitianMoment, WaveFunction, WeightDensity};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::scenario::{Initial, OperatorSpec, Scenario, System};

/// Default Courant fraction when a phase-grid scenario gives neither `dt`
/// nor `cfl_fraction`.
pub const DEFAULT_CFL_FRACTION: f64 = 0.9;

pub const DIAGNOSTICS_COLUMNS: [&str; 3] = ["t", "name", "value"];

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub series: Vec<Series>,
    pub files: Vec<OutputFile>,
    /// Quantities computed from the scenario before time stepping.
    pub derived: BTreeMap<String, Value>,
}

impl RunOutput {
    fn push(&mut self, name: &str, times: &[f64], values: Vec<f64>) {
        self.series.push(Series { name: name.into(), times: times.to_vec(), values });
    }

    fn derive(&mut self, key: &str, v: impl Serialize) {
        self.derived.insert(key.into(), serde_json::to_value(v).expect("serializable"));
    }

    /// `max_t |value|` per diagnostic.
    pub fn summary(&self) -> BTreeMap<String, f64> {
        self.series.iter().map(|s| (s.name.clone(), s.values.iter().map(|v| v.abs()).fold(0.0, f64::max))).collect()
    }
}

/// Independent random stream per purpose.
fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

const STREAM_OPERATOR: u64 = 1;
const STREAM_INITIAL: u64 = 2;

fn create(out: &Path, name: &str) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn columns(c: &[&str]) -> Vec<String> {
    c.iter().map(|s| s.to_string()).collect()
}

fn write_matrix(out: &Path, files: &mut Vec<OutputFile>, name: &str, m: &CMatrix) -> CliResult<()> {
    io::write_matrix(create(out, name)?, m)?;
    files.push(OutputFile { file: name.into(), columns: columns(&["row", "col", "re", "im"]) });
    Ok(())
}

fn operator(s: &Scenario) -> CliResult<HermitianOperator> {
    let spec = s.operator.as_ref().expect("validated");
    let m = match spec {
        OperatorSpec::Random { dim } => linalg::random_hermitian(&mut rng(s.seed, STREAM_OPERATOR), *dim),
        OperatorSpec::PauliX => linalg::pauli_x(),
        OperatorSpec::Diagonal { values } => linalg::real_diag(values),
    };
    Ok(HermitianOperator::new(m)?)
}

fn random_state(r: &mut ChaCha8Rng, n: usize, hbar: f64) -> CliResult<WaveFunction> {
    Ok(WaveFunction::new(linalg::random_vector(r, n).normalize(), hbar)?)
}

/// Sample times `k·dt`, `k = 0..=n`, landing exactly on `t_final`.
fn sample_times(s: &Scenario) -> CliResult<Vec<f64>> {
    let t = s.time.as_ref().expect("validated");
    let (n, dt) = step_plan(t.t_final, t.dt.expect("validated"))?;
    let mut ks: Vec<usize> = (0..=n).step_by(t.record_every).collect();
    if ks.last() != Some(&n) {
        ks.push(n);
    }
    Ok(ks.into_iter().map(|k| k as f64 * dt).collect())
}

pub fn run(s: &mut Scenario, out: &Path) -> CliResult<RunOutput> {
    match s.system {
        System::Kvn | System::Kvh | System::Liouville => run_phase_grid(s, out),
        System::Quantum => run_quantum(s, out),
        System::Mixture => run_mixture(s, out),
        System::Berry => run_berry(s, out),
        System::Klimontovich => run_klimontovich(s, out),
        System::Uhlmann => run_uhlmann(s, out),
        System::Hybrid => run_hybrid(s, out),
    }
}

/// Phase grid, Hamiltonian and initial wavefunction of a KvN/KvH/Liouville scenario.
pub fn phase_setup(s: &Scenario, nodes: usize) -> CliResult<(PhaseGrid2D, HamiltonianSpec, Scheme, ClassicalWaveFunction)> {
    let g = s.grid.as_ref().expect("validated");
    let hw = g.half_width.expect("validated");
    let grid = PhaseGrid2D::new((-hw, hw), (-hw, hw), nodes, nodes, g.boundary.unwrap_or(PhaseBoundary::Open))?;
    let h = HamiltonianSpec::new(s.hamiltonian.clone().expect("validated"))?;
    let scheme = Scheme::with_order(g.order.unwrap_or(StencilOrder::Second));
    let Initial::ChirpedPacket { center, sigma, chirp } = s.initial else { unreachable!("validated") };
    let psi0 = chirped_packet(&grid, s.hbar, center, sigma, chirp)?;
    Ok((grid, h, scheme, psi0))
}

/// Step size: explicit `dt`, else `cfl_fraction` times the Courant bound.
pub fn phase_dt(s: &Scenario, h: &HamiltonianSpec, grid: &PhaseGrid2D) -> f64 {
    let t = s.time.as_ref().expect("validated");
    t.dt.unwrap_or_else(|| t.cfl_fraction.unwrap_or(DEFAULT_CFL_FRACTION) * cfl_bound(h, grid))
}

fn run_phase_grid(s: &mut Scenario, out: &Path) -> CliResult<RunOutput> {
    let nodes = s.grid.as_ref().expect("validated").nodes;
    let (grid, h, scheme, psi0) = phase_setup(s, nodes)?;
    let dt = phase_dt(s, &h, &grid);
    let t = s.time.clone().expect("validated");
    let mut o = RunOutput::default();
    o.derive("cfl_bound", cfl_bound(&h, &grid));
    o.derive("h_q", grid.hq());
    o.derive("h_p", grid.hp());
    let mut cfg = EvolveConfig::new(t.t_final, dt).with_scheme(scheme);
    cfg.record_every = t.record_every;
    cfg.keep_snapshots = s.diagnostics.iter().any(|d| d == "clebsch_gap");
    let snapshots = s.output.snapshots;
    let field_cols = columns(&["node", "q", "p", "re_psi", "im_psi", "f"]);
    let rec: EvolveRecord = match s.system {
        System::Liouville => {
            let f0 = clebsch_density(&psi0, ClebschMode::Modulus, scheme)?;
            let (ft, rec) = evolve_liouville(&f0, &h, &cfg)?;
            if snapshots {
                io::write_field(create(out, "field_initial.csv")?, None, Some(&f0))?;
                io::write_field(create(out, "field_final.csv")?, None, Some(&ft))?;
            }
            rec
        }
        sys => {
            let (mode, clebsch) = if sys == System::Kvn { (EvolutionMode::Kvn, ClebschMode::Modulus) } else { (EvolutionMode::Kvh, ClebschMode::Kvh) };
            let (pt, rec) = evolve_wave(&psi0, &h, mode, &cfg)?;
            if snapshots {
                let f0 = clebsch_density(&psi0, clebsch, scheme)?;
                let ft = clebsch_density(&pt, clebsch, scheme)?;
                io::write_field(create(out, "field_initial.csv")?, Some(&psi0), Some(&f0))?;
                io::write_field(create(out, "field_final.csv")?, Some(&pt), Some(&ft))?;
            }
            rec
        }
    };
    if snapshots {
        for f in ["field_initial.csv", "field_final.csv"] {
            o.files.push(OutputFile { file: f.into(), columns: field_cols.clone() });
        }
    }
    o.derive("dt", rec.dt_used);
    o.derive("steps", rec.steps);
    let m0 = rec.mass[0];
    for d in s.diagnostics.clone() {
        let values = match d.as_str() {
            "mass" => rec.mass.clone(),
            "norm_drift" => rec.mass.iter().map(|m| (m - m0).abs() / m0).collect(),
            "leakage" => rec.leakage.clone(),
            "clebsch_gap" => rec
                .snapshots
                .iter()
                .cloned()
                .map(|f| {
                    let psi = f.wave().expect("wave snapshots");
                    Ok((clebsch_density(&psi, ClebschMode::Kvh, scheme)?.total() - psi.norm_sq()).abs())
                })
                .collect::<CliResult<Vec<_>>>()?,
            other => unreachable!("validated diagnostic {other}"),
        };
        o.push(&d, &rec.times, values);
    }
    if let Some(t) = s.time.as_mut() {
        if t.dt.is_none() && t.cfl_fraction.is_none() {
            t.cfl_fraction = Some(DEFAULT_CFL_FRACTION);
        }
    }
    if let Some(g) = s.grid.as_mut() {
        g.order = Some(scheme.order);
        g.boundary = Some(grid.boundary());
    }
    Ok(o)
}

fn purity(rho: &DensityOperator) -> f64 {
    (rho.entries() * rho.entries()).trace().re
}

fn energy(rho: &DensityOperator, h: &HermitianOperator) -> f64 {
    (rho.entries() * h.entries()).trace().re
}

fn run_quantum(s: &mut Scenario, out: &Path) -> CliResult<RunOutput> {
    let h = operator(s)?;
    let psi = random_state(&mut rng(s.seed, STREAM_INITIAL), h.dim(), s.hbar)?;
    let rho0 = DensityOperator::pure(&psi);
    let times = sample_times(s)?;
    let traj = times.iter().map(|&t| evolve_density(&rho0, &h, t, s.hbar)).collect::<Result<Vec<_>, _>>()?;
    let xi = SkewHermitianMoment::from_hermitian(&h);
    let mut o = RunOutput::default();
    for d in s.diagnostics.clone() {
        let values = match d.as_str() {
            "trace" => traj.iter().map(|r| r.trace()).collect(),
            "purity" => traj.iter().map(purity).collect(),
            "energy" => traj.iter().map(|r| energy(r, &h)).collect(),
            "noether_energy" => {
                let s0 = dual_pairing(&rho0.momentum(s.hbar), &xi)?;
                traj.iter().map(|r| Ok((dual_pairing(&r.momentum(s.hbar), &xi)? - s0).abs())).collect::<CliResult<Vec<_>>>()?
            }
            other => unreachable!("validated diagnostic {other}"),
        };
        o.push(&d, &times, values);
    }
    if s.output.snapshots {
        write_matrix(out, &mut o.files, "hamiltonian.csv", h.entries())?;
        write_matrix(out, &mut o.files, "rho_initial.csv", rho0.entries())?;
        write_matrix(out, &mut o.files, "rho_final.csv", traj.last().expect("t = 0 sample").entries())?;
    }
    Ok(o)
}

fn run_mixture(s: &mut Scenario, out: &Path) -> CliResult<RunOutput> {
    let h = operator(s)?;
    let n = h.dim();
    let nodes = s.grid.as_ref().expect("validated").nodes;
    let Initial::RandomFamily { modes } = s.initial else { unreachable!("validated") };
    let mut r = rng(s.seed, STREAM_INITIAL);
    let basis: Vec<CVector> = (0..modes).map(|_| linalg::random_vector(&mut r, n)).collect();
    let grid = ParameterGrid::uniform(1, -1.0, 1.0, nodes, Boundary::Open)?;
    let fam = WaveFamily::from_fn(grid.clone(), s.hbar, |x| {
        let v = basis.iter().enumerate().fold(CVector::zeros(n), |acc, (k, b)| acc + b * C64::new(x[0].powi(k as i32), 0.0));
        v.normalize()
    })?;
    let raw = WeightDensity::from_fn(grid, |x| {
        let u = 1.0 - x[0] * x[0];
        if u > 0.0 { (2.0 - 2.0 / u).exp() } else { 0.0 }
    })?;
    let w = raw.scaled(1.0 / raw.total())?;
    let rho0 = density_from_family(&w, &fam)?;
    let times = sample_times(s)?;
    let traj = times.iter().map(|&t| evolve_density(&rho0, &h, t, s.hbar)).collect::<Result<Vec<_>, _>>()?;
    let mut o = RunOutput::default();
    o.derive("weight_total_before_normalization", raw.total());
    for d in s.diagnostics.clone() {
        let values = match d.as_str() {
            "trace" => traj.iter().map(|r| r.trace()).collect(),
            "purity" => traj.iter().map(purity).collect(),
            "commuting_square" => times
                .iter()
                .zip(&traj)
                .map(|(&t, rho)| Ok(max_abs(&(density_from_family(&w, &evolve_family(&fam, &h, t)?)?.entries() - rho.entries()))))
                .collect::<CliResult<Vec<_>>>()?,
            other => unreachable!("validated diagnostic {other}"),
        };
        o.push(&d, &times, values);
    }
    if s.output.snapshots {
        io::write_family(create(out, "family.csv")?, &fam, &w)?;
        let mut cols = columns(&["node", "r0", "w"]);
        for c in 0..n {
            cols.push(format!("re_psi{c}"));
            cols.push(format!("im_psi{c}"));
        }
        o.files.push(OutputFile { file: "family.csv".into(), columns: cols });
        write_matrix(out, &mut o.files, "hamiltonian.csv", h.entries())?;
        write_matrix(out, &mut o.files, "rho_final.csv", traj.last().expect("t = 0 sample").entries())?;
    }
    Ok(o)
}

fn run_berry(s: &mut Scenario, out: &Path) -> CliResult<RunOutput> {
    let nodes = s.grid.as_ref().expect("validated").nodes;
    let fam = qwz_family(nodes, s.hbar)?;
    let quantum = std::f64::consts::TAU * s.hbar;
    let wilson = berry_curvature(&fam, CurvatureBackend::WilsonLoop)?;
    let diff = berry_curvature(&fam, CurvatureBackend::Differential)?;
    let mut o = RunOutput::default();
    for d in s.diagnostics.clone() {
        let v = match d.as_str() {
            "chern_wilson" => total_flux(&wilson, None)? / quantum,
            "chern_differential" => total_flux(&diff, None)? / quantum,
            other => unreachable!("validated diagnostic {other}"),
        };
        o.push(&d, &[0.0], vec![v]);
    }
    if s.output.snapshots {
        let cols = columns(&["degree", "component", "i0", "i1", "i2", "value"]);
        for (name, c) in [("connection.csv", berry_connection(&fam)?), ("curvature_wilson.csv", wilson), ("curvature_differential.csv", diff)] {
            io::write_cochain(create(out, name)?, &c)?;
            o.files.push(OutputFile { file: name.into(), columns: cols.clone() });
        }
    }
    Ok(o)
}

fn run_klimontovich(s: &mut Scenario, out: &Path) -> CliResult<RunOutput> {
    let h = HamiltonianSpec::new(s.hamiltonian.clone().expect("validated"))?;
    let t = s.time.clone().expect("validated");
    let integrator = t.integrator.unwrap_or(Integrator::Verlet);
    if integrator == Integrator::Verlet && !h.is_separable() {
        return Err(CliError::Schema("key `time.integrator` = verlet needs a separable hamiltonian".into()));
    }
    let Initial::GaussianEnsemble { particles, center, spread } = s.initial else { unreachable!("validated") };
    let mut r = rng(s.seed, STREAM_INITIAL);
    let mut normal = || -> f64 { StandardNormal.sample(&mut r) };
    let points: Vec<PhasePoint> = (0..particles).map(|_| PhasePoint::one(center[0] + spread * normal(), center[1] + spread * normal())).collect();
    let weights = vec![1.0 / particles as f64; particles];
    let e0 = WeightedEnsemble::new(weights, points)?;
    let (n, dt) = step_plan(t.t_final, t.dt.expect("validated"))?;
    let energy = |e: &WeightedEnsemble| -> f64 { e.weights().iter().zip(e.points()).map(|(w, z)| w * h.value(z)).sum() };
    let moment = |e: &WeightedEnsemble, q: bool| -> f64 {
        e.weights().iter().zip(e.points()).map(|(w, z)| w * if q { z.q[0] } else { z.p[0] }).sum::<f64>() / e.total_weight()
    };
    let mut e = e0.clone();
    let mut times = Vec::new();
    let mut states = Vec::new();
    for k in 0..=n {
        if k > 0 {
            e = e.map_points(|z| step(z, &h, dt, integrator));
            if e.points().iter().any(|z| !z.is_finite()) {
                return Err(CliError::Runtime(format!("ensemble diverged at step {k}")));
            }
        }
        if k % t.record_every == 0 || k == n {
            times.push(k as f64 * dt);
            states.push((energy(&e), e.total_weight(), moment(&e, true), moment(&e, false)));
        }
    }
    let e_init = states[0].0;
    let mut o = RunOutput::default();
    o.derive("dt", dt);
    o.derive("steps", n);
    o.derive("integrator", integrator);
    for d in s.diagnostics.clone() {
        let values = states
            .iter()
            .map(|st| match d.as_str() {
                "energy" => st.0,
                "energy_drift" => (st.0 - e_init).abs() / e_init.abs().max(f64::MIN_POSITIVE),
                "total_weight" => st.1,
                "mean_q" => st.2,
                "mean_p" => st.3,
                other => unreachable!("validated diagnostic {other}"),
            })
            .collect();
        o.push(&d, &times, values);
    }
    if s.output.snapshots {
        let cols = columns(&["w", "q0", "p0"]);
        for (name, ens) in [("ensemble_initial.csv", &e0), ("ensemble_final.csv", &e)] {
            io::write_ensemble(create(out, name)?, ens)?;
            o.files.push(OutputFile { file: name.into(), columns: cols.clone() });
        }
    }
    if let Some(t) = s.time.as_mut() {
        t.integrator = Some(integrator);
    }
    Ok(o)
}

fn run_uhlmann(s: &mut Scenario, out: &Path) -> CliResult<RunOutput> {
    let h = operator(s)?;
    let Initial::RandomW { cols, scale } = s.initial else { unreachable!("validated") };
    let w0 = WOperator::new(linalg::random_matrix(&mut rng(s.seed, STREAM_INITIAL), h.dim(), cols) * C64::new(scale, 0.0), s.hbar)?;
    let rho0 = rho_from_w(&w0);
    let times = sample_times(s)?;
    let traj = times.iter().map(|&t| evolve_w(&w0, &h, t)).collect::<Result<Vec<_>, _>>()?;
    let mut o = RunOutput::default();
    for d in s.diagnostics.clone() {
        let values = match d.as_str() {
            "trace_commutator" => traj
                .iter()
                .map(|w| {
                    let m = w.entries();
                    if m.is_square() {
                        linalg::commutator(m, &m.adjoint()).trace().norm()
                    } else {
                        ((m * m.adjoint()).trace() - (m.adjoint() * m).trace()).norm()
                    }
                })
                .collect(),
            "rho_square" => times
                .iter()
                .zip(&traj)
                .map(|(&t, w)| Ok(max_abs(&(rho_from_w(w).entries() - evolve_density(&rho0, &h, t, s.hbar)?.entries()))))
                .collect::<CliResult<Vec<_>>>()?,
            "trace" => traj.iter().map(|w| rho_from_w(w).trace()).collect(),
            other => unreachable!("validated diagnostic {other}"),
        };
        o.push(&d, &times, values);
    }
    if s.output.snapshots {
        write_matrix(out, &mut o.files, "hamiltonian.csv", h.entries())?;
        write_matrix(out, &mut o.files, "w_initial.csv", w0.entries())?;
        write_matrix(out, &mut o.files, "w_final.csv", traj.last().expect("t = 0 sample").entries())?;
    }
    Ok(o)
}

fn run_hybrid(s: &mut Scenario, out: &Path) -> CliResult<RunOutput> {
    let h = operator(s)?;
    let n = h.dim();
    let s0 = match s.initial {
        Initial::PinnedInadmissible => pinned_inadmissible()?,
        Initial::RandomHybrid { mixing } => {
            let mut r = rng(s.seed, STREAM_INITIAL);
            let psi = random_state(&mut r, n, s.hbar)?;
            let v = linalg::random_vector(&mut r, n);
            let phi = (&v - psi.components() * psi.components().dotc(&v)).normalize();
            let w = WOperator::new(linalg::outer(&phi, psi.components()) * C64::new(mixing.sqrt(), 0.0), s.hbar)?;
            HybridState::new(psi, w)?
        }
        _ => unreachable!("validated"),
    };
    let rho0 = s0.density();
    let times = sample_times(s)?;
    let traj = times.iter().map(|&t| evolve_hybrid(&s0, &h, t)).collect::<Result<Vec<_>, _>>()?;
    let mut o = RunOutput::default();
    for d in s.diagnostics.clone() {
        let values = match d.as_str() {
            "min_eigenvalue" => traj.iter().map(|(_, rho)| rho.min_eigenvalue()).collect(),
            "trace" => traj.iter().map(|(_, rho)| rho.trace()).collect(),
            "rho_square" => times
                .iter()
                .zip(&traj)
                .map(|(&t, (_, rho))| Ok(max_abs(&(rho.entries() - evolve_density(&rho0, &h, t, s.hbar)?.entries()))))
                .collect::<CliResult<Vec<_>>>()?,
            other => unreachable!("validated diagnostic {other}"),
        };
        o.push(&d, &times, values);
    }
    if s.output.snapshots {
        write_matrix(out, &mut o.files, "rho_initial.csv", rho0.entries())?;
        write_matrix(out, &mut o.files, "rho_final.csv", traj.last().expect("t = 0 sample").1.entries())?;
    }
    Ok(o)
}

pub fn write_diagnostics(out: &Path, o: &mut RunOutput) -> CliResult<()> {
    let mut w = DiagnosticsWriter::new(create(out, "diagnostics.csv")?)?;
    for s in &o.series {
        w.series(&s.name, &s.times, &s.values)?;
    }
    w.finish()?;
    o.files.insert(0, OutputFile { file: "diagnostics.csv".into(), columns: columns(&DIAGNOSTICS_COLUMNS) });
    Ok(())
}
