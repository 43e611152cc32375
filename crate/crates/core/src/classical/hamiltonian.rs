//! Closed-form phase-space functions with exact gradients.

use serde::{Deserialize, Serialize};

use super::flow::PhasePoint;
use crate::error::{Error, Result};

/// A smooth function on phase space with an analytic gradient.
pub trait PhaseFunction {
    fn value(&self, z: &PhasePoint) -> f64;
    /// `(∂φ/∂q, ∂φ/∂p)` packed as a phase point.
    fn gradient(&self, z: &PhasePoint) -> PhasePoint;
}

/// Canonical bracket `{a, b} = ∂_q a · ∂_p b − ∂_p a · ∂_q b` at a point.
pub fn bracket_at(a: &dyn PhaseFunction, b: &dyn PhaseFunction, z: &PhasePoint) -> f64 {
    let ga = a.gradient(z);
    let gb = b.gradient(z);
    (0..z.dim())
        .map(|i| ga.q[i] * gb.p[i] - ga.p[i] * gb.q[i])
        .sum()
}

/// Polynomial in one degree of freedom: `Σ c · qᵃ pᵇ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    /// `(coefficient, power of q, power of p)`.
    pub terms: Vec<(f64, u32, u32)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(f64, u32, u32)>) -> Self {
        Self { terms }.normalized()
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![(c, 0, 0)])
    }

    fn normalized(mut self) -> Self {
        self.terms.sort_by_key(|t| (t.1, t.2));
        let mut out: Vec<(f64, u32, u32)> = Vec::new();
        for t in self.terms {
            match out.last_mut() {
                Some(last) if last.1 == t.1 && last.2 == t.2 => last.0 += t.0,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.0 != 0.0);
        Self { terms: out }
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.terms.iter().map(|&(c, a, b)| c * q.powi(a as i32) * p.powi(b as i32)).sum()
    }

    pub fn dq(&self) -> Polynomial {
        Self::new(
            self.terms
                .iter()
                .filter(|t| t.1 > 0)
                .map(|&(c, a, b)| (c * a as f64, a - 1, b))
                .collect(),
        )
    }

    pub fn dp(&self) -> Polynomial {
        Self::new(
            self.terms
                .iter()
                .filter(|t| t.2 > 0)
                .map(|&(c, a, b)| (c * b as f64, a, b - 1))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut terms = Vec::new();
        for &(c1, a1, b1) in &self.terms {
            for &(c2, a2, b2) in &other.terms {
                terms.push((c1 * c2, a1 + a2, b1 + b2));
            }
        }
        Self::new(terms)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        Self::new(self.terms.iter().chain(&other.terms).cloned().collect())
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Self::new(self.terms.iter().map(|&(c, a, b)| (c * s, a, b)).collect())
    }

    /// Symbolic canonical bracket.
    pub fn bracket(&self, other: &Polynomial) -> Polynomial {
        self.dq().mul(&other.dp()).add(&self.dp().mul(&other.dq()).scale(-1.0))
    }

    pub fn is_separable(&self) -> bool {
        self.terms.iter().all(|t| t.1 == 0 || t.2 == 0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Catalog of Hamiltonians; separable members are `Σᵢ T(pᵢ) + V(qᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianKind {
    /// `(p² + ω² q²) / 2`.
    Harmonic { omega: f64 },
    /// `p² / 2`.
    Free,
    /// `p² / 2 + g (1 − cos q)`.
    Pendulum { g: f64 },
    /// `p² / 2 + k q⁴ / 4`.
    Quartic { k: f64 },
    /// `α q + β p`.
    Linear { alpha: f64, beta: f64 },
    /// User polynomial, one degree of freedom only.
    Polynomial { terms: Vec<(f64, u32, u32)> },
    /// `H = 0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    kind: HamiltonianKind,
}

fn sample_points(dim: usize) -> Vec<PhasePoint> {
    let base = [0.37, -0.81, 1.23, -0.45, 0.66];
    (0..4)
        .map(|k| {
            let q = (0..dim).map(|i| base[(i + k) % 5] * (1.0 + 0.1 * k as f64)).collect();
            let p = (0..dim).map(|i| base[(i + k + 2) % 5] * (1.0 - 0.15 * k as f64)).collect();
            PhasePoint::new(q, p)
        })
        .collect()
}

impl HamiltonianSpec {
    /// Builds the Hamiltonian and checks its analytic gradient against
    /// central differences on a few sample points.
    pub fn new(kind: HamiltonianKind) -> Result<Self> {
        let spec = Self { kind };
        for dim in [1, 2] {
            if dim > 1 && matches!(spec.kind, HamiltonianKind::Polynomial { .. }) {
                continue;
            }
            for z in sample_points(dim) {
                spec.check_gradient(&z)?;
            }
        }
        Ok(spec)
    }

    fn check_gradient(&self, z: &PhasePoint) -> Result<()> {
        let g = self.gradient(z);
        let eps = 1e-5;
        for i in 0..z.dim() {
            for momentum in [false, true] {
                let mut zp = z.clone();
                let mut zm = z.clone();
                let (exact, slot_p, slot_m) = if momentum {
                    (g.p[i], &mut zp.p[i], &mut zm.p[i])
                } else {
                    (g.q[i], &mut zp.q[i], &mut zm.q[i])
                };
                *slot_p += eps;
                *slot_m -= eps;
                let fd = (self.value(&zp) - self.value(&zm)) / (2.0 * eps);
                if (fd - exact).abs() > 1e-6 * exact.abs().max(1.0) {
                    return Err(Error::InvalidInput(format!(
                        "Hamiltonian gradient mismatch: analytic {exact}, finite difference {fd}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn harmonic() -> Self {
        Self { kind: HamiltonianKind::Harmonic { omega: 1.0 } }
    }

    pub fn free() -> Self {
        Self { kind: HamiltonianKind::Free }
    }

    pub fn zero() -> Self {
        Self { kind: HamiltonianKind::Zero }
    }

    pub fn linear(alpha: f64, beta: f64) -> Self {
        Self { kind: HamiltonianKind::Linear { alpha, beta } }
    }

    pub fn pendulum(g: f64) -> Self {
        Self { kind: HamiltonianKind::Pendulum { g } }
    }

    pub fn quartic(k: f64) -> Self {
        Self { kind: HamiltonianKind::Quartic { k } }
    }

    pub fn polynomial(p: Polynomial) -> Self {
        Self { kind: HamiltonianKind::Polynomial { terms: p.terms } }
    }

    pub fn kind(&self) -> &HamiltonianKind {
        &self.kind
    }

    pub fn is_separable(&self) -> bool {
        match &self.kind {
            HamiltonianKind::Polynomial { terms } => Polynomial::new(terms.clone()).is_separable(),
            _ => true,
        }
    }

    /// Polynomial form in one degree of freedom, when one exists.
    pub fn as_polynomial(&self) -> Option<Polynomial> {
        Some(match &self.kind {
            HamiltonianKind::Harmonic { omega } => Polynomial::new(vec![(0.5, 0, 2), (0.5 * omega * omega, 2, 0)]),
            HamiltonianKind::Free => Polynomial::new(vec![(0.5, 0, 2)]),
            HamiltonianKind::Quartic { k } => Polynomial::new(vec![(0.5, 0, 2), (0.25 * k, 4, 0)]),
            HamiltonianKind::Linear { alpha, beta } => Polynomial::new(vec![(*alpha, 1, 0), (*beta, 0, 1)]),
            HamiltonianKind::Polynomial { terms } => Polynomial::new(terms.clone()),
            HamiltonianKind::Zero => Polynomial::zero(),
            HamiltonianKind::Pendulum { .. } => return None,
        })
    }

    /// Value in one degree of freedom.
    pub fn value_1d(&self, q: f64, p: f64) -> f64 {
        match &self.kind {
            HamiltonianKind::Harmonic { omega } => 0.5 * (p * p + omega * omega * q * q),
            HamiltonianKind::Free => 0.5 * p * p,
            HamiltonianKind::Pendulum { g } => 0.5 * p * p + g * (1.0 - q.cos()),
            HamiltonianKind::Quartic { k } => 0.5 * p * p + 0.25 * k * q.powi(4),
            HamiltonianKind::Linear { alpha, beta } => alpha * q + beta * p,
            HamiltonianKind::Polynomial { terms } => Polynomial { terms: terms.clone() }.eval(q, p),
            HamiltonianKind::Zero => 0.0,
        }
    }

    /// `(∂H/∂q, ∂H/∂p)` in one degree of freedom.
    pub fn grad_1d(&self, q: f64, p: f64) -> (f64, f64) {
        match &self.kind {
            HamiltonianKind::Harmonic { omega } => (omega * omega * q, p),
            HamiltonianKind::Free => (0.0, p),
            HamiltonianKind::Pendulum { g } => (g * q.sin(), p),
            HamiltonianKind::Quartic { k } => (k * q.powi(3), p),
            HamiltonianKind::Linear { alpha, beta } => (*alpha, *beta),
            HamiltonianKind::Polynomial { terms } => {
                let poly = Polynomial { terms: terms.clone() };
                (poly.dq().eval(q, p), poly.dp().eval(q, p))
            }
            HamiltonianKind::Zero => (0.0, 0.0),
        }
    }
}

impl PhaseFunction for HamiltonianSpec {
    fn value(&self, z: &PhasePoint) -> f64 {
        if let HamiltonianKind::Polynomial { .. } = self.kind {
            return self.value_1d(z.q[0], z.p[0]);
        }
        (0..z.dim()).map(|i| self.value_1d(z.q[i], z.p[i])).sum()
    }

    fn gradient(&self, z: &PhasePoint) -> PhasePoint {
        let mut g = PhasePoint::zeros(z.dim());
        let n = if let HamiltonianKind::Polynomial { .. } = self.kind { 1 } else { z.dim() };
        for i in 0..n {
            let (dq, dp) = self.grad_1d(z.q[i], z.p[i]);
            g.q[i] = dq;
            g.p[i] = dp;
        }
        g
    }
}

/// Test functions for weak-form checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { value: f64 },
    /// `q_axisᵃ p_axisᵇ`.
    Monomial { axis: usize, q_power: u32, p_power: u32 },
    /// Angular momentum `q₀p₁ − q₁p₀` (needs `d ≥ 2`).
    AngularMomentum,
}

impl TestFunction {
    pub fn q() -> Self {
        Self::Monomial { axis: 0, q_power: 1, p_power: 0 }
    }

    pub fn p() -> Self {
        Self::Monomial { axis: 0, q_power: 0, p_power: 1 }
    }

    pub fn monomial(q_power: u32, p_power: u32) -> Self {
        Self::Monomial { axis: 0, q_power, p_power }
    }
}

fn pw(x: f64, n: u32) -> f64 {
    if n == 0 { 1.0 } else { x.powi(n as i32) }
}

impl PhaseFunction for TestFunction {
    fn value(&self, z: &PhasePoint) -> f64 {
        match *self {
            TestFunction::Constant { value } => value,
            TestFunction::Monomial { axis, q_power, p_power } => pw(z.q[axis], q_power) * pw(z.p[axis], p_power),
            TestFunction::AngularMomentum => z.q[0] * z.p[1] - z.q[1] * z.p[0],
        }
    }

    fn gradient(&self, z: &PhasePoint) -> PhasePoint {
        let mut g = PhasePoint::zeros(z.dim());
        match *self {
            TestFunction::Constant { .. } => {}
            TestFunction::Monomial { axis, q_power, p_power } => {
                let (q, p) = (z.q[axis], z.p[axis]);
                if q_power > 0 {
                    g.q[axis] = q_power as f64 * pw(q, q_power - 1) * pw(p, p_power);
                }
                if p_power > 0 {
                    g.p[axis] = p_power as f64 * pw(q, q_power) * pw(p, p_power - 1);
                }
            }
            TestFunction::AngularMomentum => {
                g.q[0] = z.p[1];
                g.q[1] = -z.p[0];
                g.p[0] = -z.q[1];
                g.p[1] = z.q[0];
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_gradients_pass_construction_check() {
        for kind in [
            HamiltonianKind::Harmonic { omega: 1.3 },
            HamiltonianKind::Free,
            HamiltonianKind::Pendulum { g: 2.0 },
            HamiltonianKind::Quartic { k: 0.5 },
            HamiltonianKind::Linear { alpha: 0.3, beta: -1.0 },
            HamiltonianKind::Polynomial { terms: vec![(1.0, 2, 1), (-0.5, 0, 3)] },
            HamiltonianKind::Zero,
        ] {
            HamiltonianSpec::new(kind).unwrap();
        }
    }

    #[test]
    fn symbolic_bracket() {
        let q = Polynomial::new(vec![(1.0, 1, 0)]);
        let p = Polynomial::new(vec![(1.0, 0, 1)]);
        assert_eq!(q.bracket(&p), Polynomial::constant(1.0));
        let q2 = Polynomial::new(vec![(1.0, 2, 0)]);
        let p2 = Polynomial::new(vec![(1.0, 0, 2)]);
        assert_eq!(q2.bracket(&p2), Polynomial::new(vec![(4.0, 1, 1)]));
        assert!(q2.bracket(&q2).is_zero());
        assert!(!Polynomial::new(vec![(1.0, 1, 1)]).is_separable());
    }

    #[test]
    fn bracket_of_coordinates_is_canonical() {
        let z = PhasePoint::new(vec![0.4], vec![-1.1]);
        assert_eq!(bracket_at(&TestFunction::q(), &TestFunction::p(), &z), 1.0);
    }
}
