//! Hamiltonian particle flows and the Klimontovich data they carry.
//!
//! A weighted ensemble evolves under the collective Hamiltonian
//! `Σₖ wₖ H(zₖ)` with the symplectic form `Σₖ wₖ dqₖ∧dpₖ`; the weights
//! cancel and each point follows the one-particle flow `q̇ = ∂ₚH`,
//! `ṗ = −∂_qH`.

use serde::{Deserialize, Serialize};

use super::hamiltonian::{HamiltonianSpec, PhaseFunction};
use crate::error::{Error, Result};
use crate::grid::{ParameterGrid, WeightDensity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Self {
        assert_eq!(q.len(), p.len(), "q and p must have equal length");
        Self { q, p }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { q: vec![0.0; dim], p: vec![0.0; dim] }
    }

    pub fn one(q: f64, p: f64) -> Self {
        Self { q: vec![q], p: vec![p] }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(|x| x.is_finite())
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &PhasePoint) -> PhasePoint {
        PhasePoint {
            q: self.q.iter().zip(&other.q).map(|(a, b)| a + s * b).collect(),
            p: self.p.iter().zip(&other.p).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.p.iter().zip(&other.p))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Flattened `(q…, p…)`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }

    pub fn from_slice(v: &[f64]) -> PhasePoint {
        let d = v.len() / 2;
        PhasePoint { q: v[..d].to_vec(), p: v[d..].to_vec() }
    }
}

/// Klimontovich sample `f = Σₖ wₖ δ(z − zₖ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnsemble {
    weights: Vec<f64>,
    points: Vec<PhasePoint>,
}

impl WeightedEnsemble {
    pub fn new(weights: Vec<f64>, points: Vec<PhasePoint>) -> Result<Self> {
        if weights.len() != points.len() || points.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} points",
                weights.len(),
                points.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidInput(format!("particle weight must be positive, got {w}")));
        }
        let d = points[0].dim();
        if let Some(z) = points.iter().find(|z| z.dim() != d || !z.is_finite()) {
            return Err(Error::InvalidInput(format!("inconsistent or non-finite point {z:?}")));
        }
        Ok(Self { weights, points })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_admissible(&self) -> bool {
        (self.total_weight() - 1.0).abs() <= 1e-12
    }

    /// Image under a point map, weights unchanged.
    pub fn map_points(&self, f: impl Fn(&PhasePoint) -> PhasePoint) -> Self {
        Self { weights: self.weights.clone(), points: self.points.iter().map(f).collect() }
    }

    /// Weighted symplectic form `Σₖ wₖ (δq¹ₖ·δp²ₖ − δp¹ₖ·δq²ₖ)` on tangent
    /// vectors given as per-particle displacements.
    pub fn symplectic_form(&self, a: &[PhasePoint], b: &[PhasePoint]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| {
                w * (0..x.dim()).map(|i| x.q[i] * y.p[i] - x.p[i] * y.q[i]).sum::<f64>()
            })
            .sum()
    }
}

/// Parameterized point family `r ↦ (q̄(r), p̄(r))` with weight `w(r)`.
#[derive(Debug, Clone)]
pub struct ParamPointFamily {
    weight: WeightDensity,
    points: Vec<PhasePoint>,
}

impl ParamPointFamily {
    pub fn new(weight: WeightDensity, points: Vec<PhasePoint>) -> Result<Self> {
        if points.len() != weight.grid().len() {
            return Err(Error::DimensionMismatch { expected: weight.grid().len(), found: points.len() });
        }
        let d = points[0].dim();
        if points.iter().any(|z| z.dim() != d || !z.is_finite()) {
            return Err(Error::InvalidInput("inconsistent or non-finite family point".into()));
        }
        Ok(Self { weight, points })
    }

    pub fn from_fn(weight: WeightDensity, f: impl Fn([f64; 3]) -> PhasePoint) -> Result<Self> {
        let grid = weight.grid().clone();
        let points = (0..grid.len()).map(|i| f(grid.coord(i))).collect();
        Self::new(weight, points)
    }

    pub fn grid(&self) -> &ParameterGrid {
        self.weight.grid()
    }

    pub fn weight(&self) -> &WeightDensity {
        &self.weight
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    /// `⟨f, φ⟩ = ∫ w(r) φ(z̄(r)) dⁿr`.
    pub fn pairing(&self, phi: impl Fn(&PhasePoint) -> f64) -> f64 {
        self.weight
            .quadrature()
            .iter()
            .zip(&self.points)
            .map(|(q, z)| q * phi(z))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Kick–drift–kick leapfrog; separable Hamiltonians only.
    Verlet,
    /// Implicit midpoint, solved by fixed-point iteration.
    Midpoint,
    /// Classical fourth-order Runge–Kutta.
    Rk4,
}

fn vector_field(h: &HamiltonianSpec, z: &PhasePoint) -> PhasePoint {
    let g = h.gradient(z);
    PhasePoint { q: g.p, p: g.q.iter().map(|x| -x).collect() }
}

/// One step of size `dt`.
pub fn step(z: &PhasePoint, h: &HamiltonianSpec, dt: f64, integrator: Integrator) -> PhasePoint {
    match integrator {
        Integrator::Verlet => {
            let mut out = z.clone();
            let g = h.gradient(&out);
            for i in 0..out.dim() {
                out.p[i] -= 0.5 * dt * g.q[i];
            }
            let g = h.gradient(&out);
            for i in 0..out.dim() {
                out.q[i] += dt * g.p[i];
            }
            let g = h.gradient(&out);
            for i in 0..out.dim() {
                out.p[i] -= 0.5 * dt * g.q[i];
            }
            out
        }
        Integrator::Midpoint => {
            let mut next = z.axpy(dt, &vector_field(h, z));
            for _ in 0..200 {
                let mid = PhasePoint {
                    q: z.q.iter().zip(&next.q).map(|(a, b)| 0.5 * (a + b)).collect(),
                    p: z.p.iter().zip(&next.p).map(|(a, b)| 0.5 * (a + b)).collect(),
                };
                let candidate = z.axpy(dt, &vector_field(h, &mid));
                let change = candidate.distance(&next);
                next = candidate;
                if change <= 1e-15 * (1.0 + next.distance(&PhasePoint::zeros(next.dim()))) {
                    break;
                }
            }
            next
        }
        Integrator::Rk4 => {
            let k1 = vector_field(h, z);
            let k2 = vector_field(h, &z.axpy(0.5 * dt, &k1));
            let k3 = vector_field(h, &z.axpy(0.5 * dt, &k2));
            let k4 = vector_field(h, &z.axpy(dt, &k3));
            z.axpy(dt / 6.0, &k1)
                .axpy(dt / 3.0, &k2)
                .axpy(dt / 3.0, &k3)
                .axpy(dt / 6.0, &k4)
        }
    }
}

/// Anything made of phase points that a Hamiltonian flow can advance.
pub trait FlowState: Clone {
    fn for_each_point(&mut self, f: &mut dyn FnMut(&mut PhasePoint));
}

impl FlowState for PhasePoint {
    fn for_each_point(&mut self, f: &mut dyn FnMut(&mut PhasePoint)) {
        f(self)
    }
}

impl FlowState for WeightedEnsemble {
    fn for_each_point(&mut self, f: &mut dyn FnMut(&mut PhasePoint)) {
        self.points.iter_mut().for_each(f)
    }
}

impl FlowState for ParamPointFamily {
    fn for_each_point(&mut self, f: &mut dyn FnMut(&mut PhasePoint)) {
        self.points.iter_mut().for_each(f)
    }
}

/// Number of steps and the uniform step that lands exactly on `t`.
pub fn step_plan(t: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("final time must be non-negative, got {t}")));
    }
    let n = (t / dt - 1e-9).ceil().max(0.0) as usize;
    Ok(if n == 0 { (0, dt) } else { (n, t / n as f64) })
}

/// Advances every point to time `t`; the step is shrunk so `t` is hit exactly.
pub fn hamilton_flow<S: FlowState>(
    state: &S,
    h: &HamiltonianSpec,
    t: f64,
    dt: f64,
    integrator: Integrator,
) -> Result<S> {
    if integrator == Integrator::Verlet && !h.is_separable() {
        return Err(Error::InvalidInput("Verlet requires a separable Hamiltonian".into()));
    }
    let (n, dt) = step_plan(t, dt)?;
    let mut out = state.clone();
    let mut finite = true;
    out.for_each_point(&mut |z| {
        for _ in 0..n {
            *z = step(z, h, dt, integrator);
        }
        finite &= z.is_finite();
    });
    if !finite {
        return Err(Error::NonFinite("Hamiltonian flow".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::hamiltonian::{HamiltonianKind, Polynomial};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn harmonic_quarter_period() {
        let h = HamiltonianSpec::harmonic();
        for (dt, tol) in [(1e-2, 1e-4), (5e-3, 2.5e-5)] {
            let z = hamilton_flow(&PhasePoint::one(1.0, 0.0), &h, FRAC_PI_2, dt, Integrator::Verlet).unwrap();
            assert!(z.distance(&PhasePoint::one(0.0, -1.0)) < tol);
        }
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let z0 = PhasePoint::new(vec![0.3, -0.2], vec![1.0, 2.0]);
        for integ in [Integrator::Verlet, Integrator::Midpoint, Integrator::Rk4] {
            let z = hamilton_flow(&z0, &HamiltonianSpec::zero(), 3.0, 0.1, integ).unwrap();
            assert_eq!(z, z0);
        }
    }

    #[test]
    fn verlet_rejects_non_separable() {
        let h = HamiltonianSpec::new(HamiltonianKind::Polynomial { terms: Polynomial::new(vec![(1.0, 1, 1)]).terms })
            .unwrap();
        assert!(hamilton_flow(&PhasePoint::one(1.0, 0.0), &h, 1.0, 0.1, Integrator::Verlet).is_err());
        assert!(hamilton_flow(&PhasePoint::one(1.0, 0.0), &h, 1.0, 0.1, Integrator::Midpoint).is_ok());
    }

    #[test]
    fn weights_are_untouched() {
        let e = WeightedEnsemble::new(vec![0.25, 0.75], vec![PhasePoint::one(1.0, 0.0), PhasePoint::one(0.0, 1.0)]).unwrap();
        let moved = hamilton_flow(&e, &HamiltonianSpec::harmonic(), 1.0, 0.01, Integrator::Rk4).unwrap();
        assert_eq!(moved.weights(), e.weights());
        assert!(WeightedEnsemble::new(vec![-1.0], vec![PhasePoint::one(0.0, 0.0)]).is_err());
    }

    #[test]
    fn step_plan_hits_final_time() {
        let (n, dt) = step_plan(1.0, 0.3).unwrap();
        assert_eq!(n, 4);
        assert!((n as f64 * dt - 1.0).abs() < 1e-15);
        assert_eq!(step_plan(1.0, 0.25).unwrap().0, 4);
        assert!(step_plan(1.0, 0.0).is_err());
    }
}
