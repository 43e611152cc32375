//! RK4 time stepping of KvN, KvH and Liouville fields.

use serde::{Deserialize, Serialize};

use super::grid::{leakage_fraction, ClassicalWaveFunction, PhaseDensity, PhaseGrid2D};
use super::ops::{hamiltonian_gradients, lagrangian_field, Scheme};
use crate::classical::flow::{step, step_plan, Integrator, PhasePoint};
use crate::classical::HamiltonianSpec;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Courant number limit for `dt · max|X_H| / min(h_q, h_p)`.
pub const CFL_LIMIT: f64 = 0.5;
/// Edge mass fraction that aborts a run.
pub const LEAKAGE_ABORT: f64 = 1e-4;
/// Edge mass fraction below which a run counts as admissible.
pub const LEAKAGE_ADMISSIBLE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMode {
    /// `iħ ∂ₜψ = L_H ψ`.
    Kvn,
    /// `iħ ∂ₜψ = 𝓛_H ψ`.
    Kvh,
    /// `∂ₜf = {H, f}`.
    Liouville,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseField {
    Wave(ClassicalWaveFunction),
    Density(PhaseDensity),
}

impl PhaseField {
    pub fn grid(&self) -> &PhaseGrid2D {
        match self {
            PhaseField::Wave(w) => w.grid(),
            PhaseField::Density(d) => d.grid(),
        }
    }

    /// `∫|ψ|²` or `∫f`.
    pub fn mass(&self) -> f64 {
        match self {
            PhaseField::Wave(w) => w.norm_sq(),
            PhaseField::Density(d) => d.total(),
        }
    }

    pub fn wave(self) -> Option<ClassicalWaveFunction> {
        match self {
            PhaseField::Wave(w) => Some(w),
            PhaseField::Density(_) => None,
        }
    }

    pub fn density(self) -> Option<PhaseDensity> {
        match self {
            PhaseField::Density(d) => Some(d),
            PhaseField::Wave(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub t_final: f64,
    pub dt: f64,
    pub scheme: Scheme,
    /// Record a diagnostic sample every this many steps (and at the end).
    pub record_every: usize,
    /// Keep a field snapshot at every recorded sample.
    pub keep_snapshots: bool,
}

impl EvolveConfig {
    pub fn new(t_final: f64, dt: f64) -> Self {
        Self { t_final, dt, scheme: Scheme::default(), record_every: 1, keep_snapshots: false }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvolveRecord {
    pub times: Vec<f64>,
    /// `∫|ψ|²` (wave modes) or `∫f` (Liouville).
    pub mass: Vec<f64>,
    pub leakage: Vec<f64>,
    pub steps: usize,
    pub dt_used: f64,
    #[serde(skip)]
    pub snapshots: Vec<PhaseField>,
}

impl EvolveRecord {
    /// `max_t |m(t) − m(0)| / |m(0)|`.
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        self.mass.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max) / m0.abs().max(f64::MIN_POSITIVE)
    }

    pub fn max_leakage(&self) -> f64 {
        self.leakage.iter().cloned().fold(0.0, f64::max)
    }

    pub fn is_admissible(&self) -> bool {
        self.max_leakage() < LEAKAGE_ADMISSIBLE
    }
}

/// Largest stable step under the Courant limit.
pub fn cfl_bound(h: &HamiltonianSpec, grid: &PhaseGrid2D) -> f64 {
    let (hq, hp) = hamiltonian_gradients(h, grid);
    let vmax = hq.iter().zip(&hp).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
    if vmax == 0.0 {
        f64::INFINITY
    } else {
        CFL_LIMIT * grid.min_spacing() / vmax
    }
}

struct Generator {
    grid: PhaseGrid2D,
    cq: Vec<f64>,
    cp: Vec<f64>,
    phase: Vec<f64>,
    scheme: Scheme,
}

impl Generator {
    fn new(h: &HamiltonianSpec, grid: &PhaseGrid2D, mode: EvolutionMode, scheme: Scheme, hbar: f64) -> Self {
        let (hq, hp) = hamiltonian_gradients(h, grid);
        let s = scheme.convention.sb();
        let phase = match mode {
            EvolutionMode::Kvh => lagrangian_field(h, grid, scheme.convention).into_iter().map(|l| l / hbar).collect(),
            _ => vec![0.0; grid.len()],
        };
        Self {
            grid: grid.clone(),
            cq: hq.iter().map(|v| s * v).collect(),
            cp: hp.iter().map(|v| -s * v).collect(),
            phase,
            scheme,
        }
    }

    /// `s_b {H, ψ} + i (L/ħ) ψ`.
    fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let dq = self.grid.derivative(psi, 0, self.scheme.order);
        let dp = self.grid.derivative(psi, 1, self.scheme.order);
        (0..psi.len())
            .map(|k| dp[k] * self.cq[k] + dq[k] * self.cp[k] + C64::new(0.0, self.phase[k]) * psi[k])
            .collect()
    }

    fn rk4(&self, psi: &[C64], dt: f64) -> Vec<C64> {
        let axpy = |a: &[C64], s: f64, b: &[C64]| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| x + y * s).collect() };
        let k1 = self.apply(psi);
        let k2 = self.apply(&axpy(psi, 0.5 * dt, &k1));
        let k3 = self.apply(&axpy(psi, 0.5 * dt, &k2));
        let k4 = self.apply(&axpy(psi, dt, &k3));
        (0..psi.len())
            .map(|k| psi[k] + (k1[k] + k2[k] * 2.0 + k3[k] * 2.0 + k4[k]) * (dt / 6.0))
            .collect()
    }
}

/// Advances `field` to `t_final`. Wave modes need a [`PhaseField::Wave`],
/// Liouville a [`PhaseField::Density`].
pub fn evolve(field: &PhaseField, h: &HamiltonianSpec, mode: EvolutionMode, cfg: &EvolveConfig) -> Result<(PhaseField, EvolveRecord)> {
    let grid = field.grid().clone();
    let bound = cfl_bound(h, &grid);
    if cfg.dt > bound {
        return Err(Error::Cfl { dt: cfg.dt, bound });
    }
    let (n, dt) = step_plan(cfg.t_final, cfg.dt)?;
    let (mut values, hbar, is_wave) = match (field, mode) {
        (PhaseField::Wave(w), EvolutionMode::Kvn | EvolutionMode::Kvh) => (w.values().to_vec(), w.hbar(), true),
        (PhaseField::Density(d), EvolutionMode::Liouville) => {
            (d.values().iter().map(|v| C64::new(*v, 0.0)).collect(), 1.0, false)
        }
        _ => return Err(Error::InvalidInput(format!("mode {mode:?} does not match the field type"))),
    };
    let gen = Generator::new(h, &grid, mode, cfg.scheme, hbar);
    let wrap = |v: &[C64]| -> Result<PhaseField> {
        Ok(if is_wave {
            PhaseField::Wave(ClassicalWaveFunction::new(grid.clone(), v.to_vec(), hbar)?)
        } else {
            PhaseField::Density(PhaseDensity::new(grid.clone(), v.iter().map(|c| c.re).collect())?)
        })
    };
    let weights = grid.quadrature_weights();
    let mass_of = |v: &[C64]| -> (f64, f64) {
        let dens: Vec<f64> = if is_wave { v.iter().map(|c| c.norm_sqr()).collect() } else { v.iter().map(|c| c.re).collect() };
        (weights.iter().zip(&dens).map(|(w, d)| w * d).sum(), leakage_fraction(&grid, &dens))
    };
    let mut rec = EvolveRecord { steps: n, dt_used: dt, ..Default::default() };
    let every = cfg.record_every.max(1);
    let record = |step: usize, v: &[C64], rec: &mut EvolveRecord| -> Result<()> {
        let (m, leak) = mass_of(v);
        rec.times.push(step as f64 * dt);
        rec.mass.push(m);
        rec.leakage.push(leak);
        if cfg.keep_snapshots {
            rec.snapshots.push(wrap(v)?);
        }
        Ok(())
    };
    record(0, &values, &mut rec)?;
    for s in 1..=n {
        values = gen.rk4(&values, dt);
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite(format!("{mode:?} field at step {s}")));
        }
        let (_, leak) = mass_of(&values);
        if leak > LEAKAGE_ABORT {
            return Err(Error::BoundaryLeakage { fraction: leak, threshold: LEAKAGE_ABORT });
        }
        if s % every == 0 || s == n {
            record(s, &values, &mut rec)?;
        }
    }
    Ok((wrap(&values)?, rec))
}

pub fn evolve_wave(
    psi: &ClassicalWaveFunction,
    h: &HamiltonianSpec,
    mode: EvolutionMode,
    cfg: &EvolveConfig,
) -> Result<(ClassicalWaveFunction, EvolveRecord)> {
    let (f, r) = evolve(&PhaseField::Wave(psi.clone()), h, mode, cfg)?;
    Ok((f.wave().expect("wave mode returns a wave"), r))
}

pub fn evolve_liouville(f: &PhaseDensity, h: &HamiltonianSpec, cfg: &EvolveConfig) -> Result<(PhaseDensity, EvolveRecord)> {
    let (out, r) = evolve(&PhaseField::Density(f.clone()), h, EvolutionMode::Liouville, cfg)?;
    Ok((out.density().expect("Liouville returns a density"), r))
}

/// Oracle for Liouville transport: `f(t) = f₀ ∘ φ₋ₜ`, with the backward
/// characteristics integrated by RK4 at step `dt_fine`.
pub fn characteristic_pullback(
    grid: &PhaseGrid2D,
    h: &HamiltonianSpec,
    t: f64,
    dt_fine: f64,
    f0: impl Fn(f64, f64) -> f64,
) -> Result<PhaseDensity> {
    let (n, dt) = step_plan(t, dt_fine)?;
    let mut values = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (q, p) = grid.coords(k);
        let mut z = PhasePoint::one(q, p);
        for _ in 0..n {
            z = step(&z, h, -dt, Integrator::Rk4);
        }
        if !z.is_finite() {
            return Err(Error::NonFinite("backward characteristic".into()));
        }
        values.push(f0(z.q[0], z.p[0]));
    }
    PhaseDensity::new(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(g: &PhaseGrid2D) -> ClassicalWaveFunction {
        ClassicalWaveFunction::from_fn(g.clone(), 1.0, |q, p| {
            C64::from_polar((-((q + 0.5).powi(2) + (p - 0.3).powi(2)) / 2.0).exp(), 0.3 * q * p)
        })
        .unwrap()
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let g = PhaseGrid2D::square(6.0, 33).unwrap();
        let psi = packet(&g);
        let (out, rec) = evolve_wave(&psi, &HamiltonianSpec::zero(), EvolutionMode::Kvh, &EvolveConfig::new(1.0, 0.1)).unwrap();
        assert_eq!(out, psi);
        assert_eq!(rec.max_mass_drift(), 0.0);
    }

    #[test]
    fn cfl_violation_reports_bound() {
        let g = PhaseGrid2D::square(6.0, 33).unwrap();
        match evolve_wave(&packet(&g), &HamiltonianSpec::free(), EvolutionMode::Kvn, &EvolveConfig::new(1.0, 1.0)) {
            Err(Error::Cfl { bound, .. }) => assert!((bound - 0.5 * 0.375 / 6.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pullback_matches_exact_rotation() {
        let g = PhaseGrid2D::square(4.0, 21).unwrap();
        let f0 = |q: f64, p: f64| (-(q - 1.0).powi(2) - p * p).exp();
        let t = 0.7;
        let f = characteristic_pullback(&g, &HamiltonianSpec::harmonic(), t, 1e-2, f0).unwrap();
        for k in 0..g.len() {
            let (q, p) = g.coords(k);
            let exact = f0(q * t.cos() - p * t.sin(), q * t.sin() + p * t.cos());
            assert!((f.values()[k] - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn free_transport_follows_characteristics() {
        let mut errs = Vec::new();
        for n in [65, 129] {
            let g = PhaseGrid2D::square(6.0, n).unwrap();
            let psi = packet(&g);
            let dt = 0.9 * cfl_bound(&HamiltonianSpec::free(), &g);
            let (out, rec) = evolve_wave(&psi, &HamiltonianSpec::free(), EvolutionMode::Kvn, &EvolveConfig::new(1.0, dt)).unwrap();
            assert!(rec.max_mass_drift() < 1e-6);
            let exact = ClassicalWaveFunction::from_fn(g.clone(), 1.0, |q, p| {
                let q0 = q - p;
                C64::from_polar((-((q0 + 0.5).powi(2) + (p - 0.3).powi(2)) / 2.0).exp(), 0.3 * q0 * p)
            })
            .unwrap();
            let err = out.values().iter().zip(exact.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            errs.push(err);
        }
        let slope = (errs[0] / errs[1]).log2();
        assert!((slope - 2.0).abs() < 0.3, "{errs:?}");
    }

    #[test]
    fn leakage_aborts() {
        let g = PhaseGrid2D::square(3.0, 33).unwrap();
        let psi = ClassicalWaveFunction::from_fn(g.clone(), 1.0, |q, p| C64::new((-(q * q + (p - 1.0).powi(2))).exp(), 0.0)).unwrap();
        let dt = 0.5 * cfl_bound(&HamiltonianSpec::free(), &g);
        let r = evolve_wave(&psi, &HamiltonianSpec::free(), EvolutionMode::Kvn, &EvolveConfig::new(5.0, dt));
        assert!(matches!(r, Err(Error::BoundaryLeakage { .. })));
    }

    #[test]
    fn mode_must_match_field() {
        let g = PhaseGrid2D::square(6.0, 17).unwrap();
        let f = PhaseField::Wave(packet(&g));
        assert!(evolve(&f, &HamiltonianSpec::free(), EvolutionMode::Liouville, &EvolveConfig::new(0.1, 0.01)).is_err());
    }
}
