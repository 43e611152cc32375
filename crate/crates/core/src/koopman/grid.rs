//! Two-dimensional phase grid `(q, p)`, stencils and sampled fields.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseBoundary {
    /// Compact support; zero ghost values outside the box.
    Open,
    /// Periodic in `q`, open in `p`.
    PeriodicQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl StencilOrder {
    pub fn reach(self) -> usize {
        match self {
            StencilOrder::Second => 1,
            StencilOrder::Fourth => 2,
        }
    }

    pub fn nominal(self) -> f64 {
        match self {
            StencilOrder::Second => 2.0,
            StencilOrder::Fourth => 4.0,
        }
    }
}

/// Node `(i, j)` sits at `(q_lo + i h_q, p_lo + j h_p)`; storage is
/// `i * n_p + j` (q slowest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid2D {
    q_range: (f64, f64),
    p_range: (f64, f64),
    nq: usize,
    np: usize,
    boundary: PhaseBoundary,
}

pub trait FieldValue: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl FieldValue for f64 {}
impl FieldValue for C64 {}

impl PhaseGrid2D {
    pub fn new(q_range: (f64, f64), p_range: (f64, f64), nq: usize, np: usize, boundary: PhaseBoundary) -> Result<Self> {
        if nq < MIN_NODES || np < MIN_NODES {
            return Err(Error::InvalidInput(format!("phase grid needs at least {MIN_NODES} nodes per axis, got {nq}×{np}")));
        }
        for (lo, hi) in [q_range, p_range] {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidInput(format!("bad phase-grid extent [{lo}, {hi}]")));
            }
        }
        Ok(Self { q_range, p_range, nq, np, boundary })
    }

    /// Square open box `[-half, half]²`.
    pub fn square(half: f64, nodes: usize) -> Result<Self> {
        Self::new((-half, half), (-half, half), nodes, nodes, PhaseBoundary::Open)
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn np(&self) -> usize {
        self.np
    }

    pub fn len(&self) -> usize {
        self.nq * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn boundary(&self) -> PhaseBoundary {
        self.boundary
    }

    pub fn q_range(&self) -> (f64, f64) {
        self.q_range
    }

    pub fn p_range(&self) -> (f64, f64) {
        self.p_range
    }

    pub fn hq(&self) -> f64 {
        let (lo, hi) = self.q_range;
        match self.boundary {
            PhaseBoundary::Open => (hi - lo) / (self.nq - 1) as f64,
            PhaseBoundary::PeriodicQ => (hi - lo) / self.nq as f64,
        }
    }

    pub fn hp(&self) -> f64 {
        (self.p_range.1 - self.p_range.0) / (self.np - 1) as f64
    }

    pub fn min_spacing(&self) -> f64 {
        self.hq().min(self.hp())
    }

    pub fn q(&self, i: usize) -> f64 {
        self.q_range.0 + i as f64 * self.hq()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_range.0 + j as f64 * self.hp()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.np + j
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        (self.q(k / self.np), self.p(k % self.np))
    }

    pub fn sample<T>(&self, f: impl Fn(f64, f64) -> T) -> Vec<T> {
        (0..self.len()).map(|k| { let (q, p) = self.coords(k); f(q, p) }).collect()
    }

    /// Per-node quadrature weights: uniform cell area on every node. This is
    /// the summation-by-parts partner of the zero-ghost central differences,
    /// so discrete integrals of brackets and divergences telescope.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        vec![self.hq() * self.hp(); self.len()]
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.quadrature_weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Within `cells` nodes of an open edge.
    pub fn near_boundary(&self, k: usize, cells: usize) -> bool {
        let (i, j) = (k / self.np, k % self.np);
        let near_p = j < cells || j + cells >= self.np;
        let near_q = self.boundary == PhaseBoundary::Open && (i < cells || i + cells >= self.nq);
        near_p || near_q
    }

    pub fn same_as(&self, other: &PhaseGrid2D) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch("phase grids differ".into()));
        }
        Ok(())
    }

    fn q_neighbor(&self, i: usize, s: isize) -> Option<usize> {
        let n = self.nq as isize;
        let t = i as isize + s;
        match self.boundary {
            PhaseBoundary::PeriodicQ => Some(t.rem_euclid(n) as usize),
            PhaseBoundary::Open => (0..n).contains(&t).then_some(t as usize),
        }
    }

    fn p_neighbor(&self, j: usize, s: isize) -> Option<usize> {
        let t = j as isize + s;
        (0..self.np as isize).contains(&t).then_some(t as usize)
    }

    /// Centered first derivative along `q` (axis 0) or `p` (axis 1).
    pub fn derivative<T: FieldValue>(&self, values: &[T], axis: usize, order: StencilOrder) -> Vec<T> {
        let h = if axis == 0 { self.hq() } else { self.hp() };
        let mut out = vec![T::default(); self.len()];
        for i in 0..self.nq {
            for j in 0..self.np {
                let at = |s: isize| -> T {
                    let k = if axis == 0 {
                        self.q_neighbor(i, s).map(|ii| self.idx(ii, j))
                    } else {
                        self.p_neighbor(j, s).map(|jj| self.idx(i, jj))
                    };
                    k.map_or(T::default(), |k| values[k])
                };
                out[self.idx(i, j)] = match order {
                    StencilOrder::Second => (at(1) - at(-1)) * (0.5 / h),
                    StencilOrder::Fourth => {
                        ((at(1) - at(-1)) * 8.0 - (at(2) - at(-2))) * (1.0 / (12.0 * h))
                    }
                };
            }
        }
        out
    }

    /// Tensor-product cubic Lagrange interpolation; zero outside the box.
    pub fn interpolate(&self, values: &[C64], q: f64, p: f64) -> C64 {
        let sq = (q - self.q_range.0) / self.hq();
        let sp = (p - self.p_range.0) / self.hp();
        let tol = 1e-9;
        if self.boundary == PhaseBoundary::Open && (sq < -tol || sq > (self.nq - 1) as f64 + tol) {
            return C64::new(0.0, 0.0);
        }
        if sp < -tol || sp > (self.np - 1) as f64 + tol {
            return C64::new(0.0, 0.0);
        }
        let (iq, wq) = cubic_weights(sq);
        let (ip, wp) = cubic_weights(sp);
        let mut acc = C64::new(0.0, 0.0);
        for (a, wa) in wq.iter().enumerate() {
            if *wa == 0.0 {
                continue;
            }
            let Some(i) = self.q_neighbor(0, iq + a as isize) else { continue };
            for (b, wb) in wp.iter().enumerate() {
                if *wb == 0.0 {
                    continue;
                }
                let Some(j) = self.p_neighbor(0, ip + b as isize) else { continue };
                acc += values[self.idx(i, j)] * (wa * wb);
            }
        }
        acc
    }
}

/// First stencil index and the four Lagrange weights for fractional index `s`.
fn cubic_weights(s: f64) -> (isize, [f64; 4]) {
    let r = s.round();
    if (s - r).abs() < 1e-12 {
        return (r as isize - 1, [0.0, 1.0, 0.0, 0.0]);
    }
    let base = s.floor();
    let t = s - base;
    let w = [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ];
    (base as isize - 1, w)
}

/// Phase-space wavefunction `ψ(q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalWaveFunction {
    grid: PhaseGrid2D,
    values: Vec<C64>,
    hbar: f64,
}

impl ClassicalWaveFunction {
    pub fn new(grid: PhaseGrid2D, values: Vec<C64>, hbar: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidInput(format!("ħ must be positive, got {hbar}")));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("classical wavefunction".into()));
        }
        Ok(Self { grid, values, hbar })
    }

    pub fn from_fn(grid: PhaseGrid2D, hbar: f64, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        let values = grid.sample(f);
        Self::new(grid, values, hbar)
    }

    pub fn grid(&self) -> &PhaseGrid2D {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn modulus_sq(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `∫|ψ|²`.
    pub fn norm_sq(&self) -> f64 {
        self.grid.integrate(&self.modulus_sq())
    }

    /// Fraction of `∫|ψ|²` carried within two cells of an open edge.
    pub fn leakage(&self) -> f64 {
        leakage_fraction(&self.grid, &self.modulus_sq())
    }

    pub(crate) fn with_values(&self, values: Vec<C64>) -> Self {
        Self { grid: self.grid.clone(), values, hbar: self.hbar }
    }
}

pub(crate) fn leakage_fraction(grid: &PhaseGrid2D, mass: &[f64]) -> f64 {
    let total: f64 = mass.iter().map(|m| m.abs()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let edge: f64 = (0..grid.len()).filter(|&k| grid.near_boundary(k, 2)).map(|k| mass[k].abs()).sum();
    edge / total
}

/// Real phase-space density `f(q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDensity {
    grid: PhaseGrid2D,
    values: Vec<f64>,
}

impl PhaseDensity {
    pub fn new(grid: PhaseGrid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("phase density".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: PhaseGrid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = grid.sample(f);
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &PhaseGrid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∫f`.
    pub fn total(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn leakage(&self) -> f64 {
        leakage_fraction(&self.grid, &self.values)
    }

    /// `‖self − other‖₂ / ‖other‖₂` under the grid quadrature.
    pub fn relative_l2(&self, other: &PhaseDensity) -> Result<f64> {
        self.grid.same_as(&other.grid)?;
        let w = self.grid.quadrature_weights();
        let num: f64 = w.iter().zip(self.values.iter().zip(&other.values)).map(|(w, (a, b))| w * (a - b).powi(2)).sum();
        let den: f64 = w.iter().zip(&other.values).map(|(w, b)| w * b * b).sum();
        Ok((num / den).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_coarse_grid() {
        assert!(PhaseGrid2D::square(1.0, 8).is_err());
    }

    #[test]
    fn stencils_exact_on_low_polynomials() {
        let g = PhaseGrid2D::square(2.0, 21).unwrap();
        let f = g.sample(|q, p| q * q * p + 3.0 * p);
        for order in [StencilOrder::Second, StencilOrder::Fourth] {
            let dq = g.derivative(&f, 0, order);
            let dp = g.derivative(&f, 1, order);
            for k in (0..g.len()).filter(|&k| !g.near_boundary(k, 2)) {
                let (q, p) = g.coords(k);
                assert!((dq[k] - 2.0 * q * p).abs() < 1e-12);
                assert!((dp[k] - (q * q + 3.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cubic_interpolation_reproduces_cubics() {
        let g = PhaseGrid2D::square(2.0, 21).unwrap();
        let f: Vec<C64> = g.sample(|q, p| C64::new(q * q * q - p * q, p * p));
        let v = g.interpolate(&f, 0.37, -0.52);
        let exact = C64::new(0.37f64.powi(3) + 0.52 * 0.37, 0.52 * 0.52);
        assert!((v - exact).norm() < 1e-12);
        assert_eq!(g.interpolate(&f, 3.0, 0.0), C64::new(0.0, 0.0));
    }

    #[test]
    fn periodic_quadrature_and_wrap() {
        let g = PhaseGrid2D::new((0.0, std::f64::consts::TAU), (-1.0, 1.0), 32, 17, PhaseBoundary::PeriodicQ).unwrap();
        let f = g.sample(|q, _| q.sin());
        let d = g.derivative(&f, 0, StencilOrder::Fourth);
        for k in 0..g.len() {
            let (q, _) = g.coords(k);
            assert!((d[k] - q.cos()).abs() < 1e-4);
        }
        let gauss = g.sample(|_, p| (-8.0 * p * p).exp());
        let exact = std::f64::consts::TAU * (std::f64::consts::PI / 8.0).sqrt() * 0.999_937;
        assert!((g.integrate(&gauss) - exact).abs() < 1e-3);
    }
}
