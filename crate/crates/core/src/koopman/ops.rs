//! Bracket, Liouvillian, prequantum operator and Clebsch densities.

use serde::{Deserialize, Serialize};

use super::grid::{ClassicalWaveFunction, PhaseDensity, PhaseGrid2D, StencilOrder};
use crate::classical::{HamiltonianSpec, Polynomial};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Orientation triple: bracket `s_b (∂_q a ∂_p b − ∂_p a ∂_q b)`, potential
/// `𝒜 = −s_A p dq`, Lagrangian `L = s_L ι_{X_H}𝒜 − H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignConvention {
    pub bracket: i8,
    pub potential: i8,
    pub lagrangian: i8,
}

impl Default for SignConvention {
    fn default() -> Self {
        Self { bracket: 1, potential: 1, lagrangian: -1 }
    }
}

impl SignConvention {
    /// Signs read literally off `L = X_H·𝒜 − H` with `𝒜 = −p dq`.
    pub const LITERAL: SignConvention = SignConvention { bracket: 1, potential: 1, lagrangian: 1 };

    pub fn all() -> Vec<SignConvention> {
        let mut out = Vec::new();
        for bracket in [1, -1] {
            for potential in [1, -1] {
                for lagrangian in [1, -1] {
                    out.push(SignConvention { bracket, potential, lagrangian });
                }
            }
        }
        out
    }

    pub fn sb(&self) -> f64 {
        self.bracket as f64
    }

    pub fn sa(&self) -> f64 {
        self.potential as f64
    }

    pub fn sl(&self) -> f64 {
        self.lagrangian as f64
    }
}

/// Stencil order plus sign convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scheme {
    pub order: StencilOrder,
    pub convention: SignConvention,
}

impl Default for Scheme {
    fn default() -> Self {
        Self { order: StencilOrder::Second, convention: SignConvention::default() }
    }
}

impl Scheme {
    pub fn with_order(order: StencilOrder) -> Self {
        Self { order, ..Self::default() }
    }
}

/// `𝒜 = −s_A p dq` sampled on the grid, with `𝕁 = [[0, 1], [−1, 0]]`.
#[derive(Debug, Clone)]
pub struct SymplecticPotential {
    grid: PhaseGrid2D,
    pub a_q: Vec<f64>,
    pub a_p: Vec<f64>,
}

impl SymplecticPotential {
    pub const J: [[f64; 2]; 2] = [[0.0, 1.0], [-1.0, 0.0]];

    pub fn new(grid: &PhaseGrid2D, convention: SignConvention) -> Self {
        let sa = convention.sa();
        Self { grid: grid.clone(), a_q: grid.sample(|_, p| -sa * p), a_p: vec![0.0; grid.len()] }
    }

    /// `𝕁𝒜` as `(q, p)` components.
    pub fn rotated(&self) -> (Vec<f64>, Vec<f64>) {
        let j = Self::J;
        let rq = self.a_q.iter().zip(&self.a_p).map(|(aq, ap)| j[0][0] * aq + j[0][1] * ap).collect();
        let rp = self.a_q.iter().zip(&self.a_p).map(|(aq, ap)| j[1][0] * aq + j[1][1] * ap).collect();
        (rq, rp)
    }

    /// `max |∂_q𝒜_p − ∂_p𝒜_q − 1|` away from the edges.
    pub fn area_form_defect(&self) -> f64 {
        let g = &self.grid;
        let curl_a = g.derivative(&self.a_p, 0, StencilOrder::Second);
        let curl_b = g.derivative(&self.a_q, 1, StencilOrder::Second);
        (0..g.len())
            .filter(|&k| !g.near_boundary(k, 1))
            .map(|k| (curl_a[k] - curl_b[k] - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `s_b (∂_q a ∂_p b − ∂_p a ∂_q b)` with centered differences.
pub fn poisson_bracket<T: super::grid::FieldValue + std::ops::Mul<T, Output = T>>(
    grid: &PhaseGrid2D,
    a: &[T],
    b: &[T],
    scheme: Scheme,
) -> Result<Vec<T>> {
    if a.len() != grid.len() || b.len() != grid.len() {
        return Err(Error::GridMismatch(format!("fields of length {} and {} on {} nodes", a.len(), b.len(), grid.len())));
    }
    let (aq, ap) = (grid.derivative(a, 0, scheme.order), grid.derivative(a, 1, scheme.order));
    let (bq, bp) = (grid.derivative(b, 0, scheme.order), grid.derivative(b, 1, scheme.order));
    let s = scheme.convention.sb();
    Ok((0..grid.len()).map(|k| (aq[k] * bp[k] - ap[k] * bq[k]) * s).collect())
}

/// Analytic `(∂_q H, ∂_p H)` at every node.
pub fn hamiltonian_gradients(h: &HamiltonianSpec, grid: &PhaseGrid2D) -> (Vec<f64>, Vec<f64>) {
    let g: Vec<(f64, f64)> = grid.sample(|q, p| h.grad_1d(q, p));
    (g.iter().map(|x| x.0).collect(), g.iter().map(|x| x.1).collect())
}

/// `s_b {H, ψ}` using the analytic gradient of `H`.
pub(crate) fn transport(h: &HamiltonianSpec, psi: &[C64], grid: &PhaseGrid2D, scheme: Scheme) -> Vec<C64> {
    let (hq, hp) = hamiltonian_gradients(h, grid);
    let dq = grid.derivative(psi, 0, scheme.order);
    let dp = grid.derivative(psi, 1, scheme.order);
    let s = scheme.convention.sb();
    (0..grid.len()).map(|k| (dp[k] * hq[k] - dq[k] * hp[k]) * s).collect()
}

/// `L_H ψ = iħ {H, ψ}`.
pub fn liouvillian_apply(h: &HamiltonianSpec, psi: &ClassicalWaveFunction, scheme: Scheme) -> ClassicalWaveFunction {
    let ih = C64::new(0.0, psi.hbar());
    let out = transport(h, psi.values(), psi.grid(), scheme).into_iter().map(|v| ih * v).collect();
    psi.with_values(out)
}

/// `L = s_L ι_{X_H}𝒜 − H` with `X_H = s_b (∂_p H, −∂_q H)`.
pub fn lagrangian_field(h: &HamiltonianSpec, grid: &PhaseGrid2D, convention: SignConvention) -> Vec<f64> {
    let k = convention.sl() * convention.sb() * convention.sa();
    grid.sample(|q, p| {
        let (_, hp) = h.grad_1d(q, p);
        -k * p * hp - h.value_1d(q, p)
    })
}

/// `𝓛_H ψ = L_H ψ − L ψ`.
pub fn prequantum_apply(h: &HamiltonianSpec, psi: &ClassicalWaveFunction, scheme: Scheme) -> ClassicalWaveFunction {
    let lag = lagrangian_field(h, psi.grid(), scheme.convention);
    let lh = liouvillian_apply(h, psi, scheme);
    let out = lh.values().iter().zip(psi.values()).zip(&lag).map(|((a, v), l)| a - v * *l).collect();
    psi.with_values(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClebschMode {
    /// `iħ {ψ, ψ*}`.
    Bracket,
    /// `|ψ|²`.
    Modulus,
    /// `|ψ|² + div(|ψ|² 𝕁𝒜) + iħ {ψ, ψ*}`.
    Kvh,
}

const IMAG_RESIDUE_TOL: f64 = 1e-10;

pub fn clebsch_density(psi: &ClassicalWaveFunction, mode: ClebschMode, scheme: Scheme) -> Result<PhaseDensity> {
    let grid = psi.grid();
    let modulus = psi.modulus_sq();
    let bracket = || -> Result<Vec<f64>> {
        let conj: Vec<C64> = psi.values().iter().map(|v| v.conj()).collect();
        let b = poisson_bracket(grid, psi.values(), &conj, scheme)?;
        let ih = C64::new(0.0, psi.hbar());
        let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let residue = b.iter().map(|v| (ih * v).im.abs()).fold(0.0, f64::max) / (psi.hbar() * scale);
        if residue > IMAG_RESIDUE_TOL {
            log::warn!("Clebsch bracket imaginary residue {residue:.3e} discarded");
        }
        Ok(b.iter().map(|v| (ih * v).re).collect())
    };
    let values = match mode {
        ClebschMode::Modulus => modulus,
        ClebschMode::Bracket => bracket()?,
        ClebschMode::Kvh => {
            let pot = SymplecticPotential::new(grid, scheme.convention);
            let (jq, jp) = pot.rotated();
            let flux_q: Vec<f64> = modulus.iter().zip(&jq).map(|(d, a)| d * a).collect();
            let flux_p: Vec<f64> = modulus.iter().zip(&jp).map(|(d, a)| d * a).collect();
            let div_q = grid.derivative(&flux_q, 0, scheme.order);
            let div_p = grid.derivative(&flux_p, 1, scheme.order);
            let br = bracket()?;
            (0..grid.len()).map(|k| modulus[k] + div_q[k] + div_p[k] + br[k]).collect()
        }
    };
    PhaseDensity::new(grid.clone(), values)
}

fn l2_interior(grid: &PhaseGrid2D, v: &[C64], margin: usize) -> f64 {
    let w = grid.quadrature_weights();
    (0..grid.len())
        .filter(|&k| !grid.near_boundary(k, margin))
        .map(|k| w[k] * v[k].norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `‖𝓛_H𝓛_Kψ − 𝓛_K𝓛_Hψ − iħ𝓛_{H,K}ψ‖ / ‖ψ‖`, measured away from the
/// edges so that ghost values do not enter.
pub fn commutator_defect(h: &HamiltonianSpec, k: &HamiltonianSpec, psi: &ClassicalWaveFunction, scheme: Scheme) -> Result<f64> {
    let (Some(ph), Some(pk)) = (h.as_polynomial(), k.as_polynomial()) else {
        return Err(Error::InvalidInput("commutator defect needs polynomial Hamiltonians".into()));
    };
    let bracket: Polynomial = ph.bracket(&pk).scale(scheme.convention.sb());
    let hk = HamiltonianSpec::polynomial(bracket);
    let lhk = prequantum_apply(h, &prequantum_apply(k, psi, scheme), scheme);
    let lkh = prequantum_apply(k, &prequantum_apply(h, psi, scheme), scheme);
    let lb = prequantum_apply(&hk, psi, scheme);
    let ih = C64::new(0.0, psi.hbar());
    let diff: Vec<C64> = (0..psi.grid().len()).map(|n| lhk.values()[n] - lkh.values()[n] - ih * lb.values()[n]).collect();
    let margin = 2 * scheme.order.reach() + 1;
    let norm = psi.norm_sq().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidInput("commutator defect of a zero field".into()));
    }
    Ok(l2_interior(psi.grid(), &diff, margin) / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PhaseGrid2D {
        PhaseGrid2D::square(4.0, 33).unwrap()
    }

    fn interior(g: &PhaseGrid2D) -> impl Iterator<Item = usize> + '_ {
        (0..g.len()).filter(|&k| !g.near_boundary(k, 2))
    }

    #[test]
    fn bracket_examples() {
        let g = grid();
        let s = Scheme::default();
        let q = g.sample(|q, _| q);
        let p = g.sample(|_, p| p);
        let b = poisson_bracket(&g, &q, &p, s).unwrap();
        assert!(interior(&g).all(|k| (b[k] - 1.0).abs() < 1e-10));
        assert!(poisson_bracket(&g, &q, &q, s).unwrap().iter().all(|v| *v == 0.0));
        let q2 = g.sample(|q, _| q * q);
        let p2 = g.sample(|_, p| p * p);
        let b = poisson_bracket(&g, &q2, &p2, s).unwrap();
        assert!(interior(&g).all(|k| { let (q, p) = g.coords(k); (b[k] - 4.0 * q * p).abs() < 1e-10 }));
        assert!(poisson_bracket(&g, &q, &p[..3], s).is_err());
    }

    fn gaussian(g: &PhaseGrid2D) -> ClassicalWaveFunction {
        ClassicalWaveFunction::from_fn(g.clone(), 1.0, |q, p| {
            C64::from_polar((-(q * q + p * p) / 2.0).exp(), 0.4 * q + 0.2 * p * p)
        })
        .unwrap()
    }

    #[test]
    fn liouvillian_examples() {
        let g = grid();
        let psi = gaussian(&g);
        let s = Scheme::default();
        assert!(liouvillian_apply(&HamiltonianSpec::zero(), &psi, s).values().iter().all(|v| v.norm() == 0.0));
        let c = ClassicalWaveFunction::from_fn(g.clone(), 1.0, |_, _| C64::new(1.0, 2.0)).unwrap();
        let out = liouvillian_apply(&HamiltonianSpec::free(), &c, s);
        assert!(interior(&g).all(|k| out.values()[k].norm() == 0.0));
        // H = p²/2: L_H ψ = −iħ p ∂_q ψ
        let poly = ClassicalWaveFunction::from_fn(g.clone(), 1.0, |q, p| C64::new(q * q, q * p)).unwrap();
        let out = liouvillian_apply(&HamiltonianSpec::free(), &poly, s);
        for k in interior(&g) {
            let (q, p) = g.coords(k);
            let exact = C64::new(0.0, -1.0) * p * C64::new(2.0 * q, p);
            assert!((out.values()[k] - exact).norm() < 1e-10);
        }
    }

    #[test]
    fn lagrangian_examples() {
        let g = grid();
        let lit = SignConvention::LITERAL;
        let l = lagrangian_field(&HamiltonianSpec::linear(0.7, 0.0), &g, lit);
        assert!((0..g.len()).all(|k| (l[k] + 0.7 * g.coords(k).0).abs() < 1e-14));
        let l = lagrangian_field(&HamiltonianSpec::free(), &g, lit);
        assert!((0..g.len()).all(|k| (l[k] + 1.5 * g.coords(k).1.powi(2)).abs() < 1e-12));
        let l = lagrangian_field(&HamiltonianSpec::harmonic(), &g, lit);
        assert!((0..g.len()).all(|k| {
            let (q, p) = g.coords(k);
            (l[k] - (-p * p - 0.5 * (q * q + p * p))).abs() < 1e-12
        }));
        let l = lagrangian_field(&HamiltonianSpec::free(), &g, SignConvention::default());
        assert!((0..g.len()).all(|k| (l[k] - 0.5 * g.coords(k).1.powi(2)).abs() < 1e-12));
    }

    #[test]
    fn prequantum_examples() {
        let g = grid();
        let psi = gaussian(&g);
        let s = Scheme::default();
        assert!(prequantum_apply(&HamiltonianSpec::zero(), &psi, s).values().iter().all(|v| v.norm() == 0.0));
        let h = HamiltonianSpec::linear(1.3, 0.0);
        let a = prequantum_apply(&h, &psi, s);
        let b = liouvillian_apply(&h, &psi, s);
        let i0 = (g.nq() - 1) / 2;
        for j in 0..g.np() {
            assert!((a.values()[g.idx(i0, j)] - b.values()[g.idx(i0, j)]).norm() < 1e-12);
        }
    }

    #[test]
    fn potential_area_form() {
        let g = grid();
        assert!(SymplecticPotential::new(&g, SignConvention::default()).area_form_defect() <= 1e-12);
    }

    #[test]
    fn clebsch_examples() {
        let g = PhaseGrid2D::square(6.0, 97).unwrap();
        let s = Scheme::default();
        let real = ClassicalWaveFunction::from_fn(g.clone(), 1.0, |q, p| C64::new((-(q * q + p * p)).exp(), 0.0)).unwrap();
        assert!(clebsch_density(&real, ClebschMode::Bracket, s).unwrap().values().iter().all(|v| v.abs() < 1e-15));
        let mut errs = Vec::new();
        for n in [97, 193] {
            let g = PhaseGrid2D::square(6.0, n).unwrap();
            let b = clebsch_density(&gaussian(&g), ClebschMode::Bracket, s).unwrap();
            // D = e^{−(q²+p²)}, S = 0.4 q + 0.2 p²: {D, S} = D_q S_p − D_p S_q
            let mut err: f64 = 0.0;
            for k in 0..g.len() {
                let (q, p) = g.coords(k);
                let d = (-(q * q + p * p)).exp();
                let exact = (-2.0 * q * d) * (0.4 * p) - (-2.0 * p * d) * 0.4;
                err = err.max((b.values()[k] - exact).abs());
            }
            errs.push(err);
        }
        assert!(errs[0] < 1e-2 && (errs[0] / errs[1]).log2() > 1.8, "{errs:?}");
        let psi = gaussian(&g);
        let b = clebsch_density(&psi, ClebschMode::Bracket, s).unwrap();
        assert!(b.total().abs() < 1e-8);
        let f = clebsch_density(&psi, ClebschMode::Kvh, s).unwrap();
        assert!((f.total() - psi.norm_sq()).abs() < 1e-8);
    }

    #[test]
    fn commutator_examples() {
        let g = PhaseGrid2D::square(6.0, 65).unwrap();
        let psi = gaussian(&g);
        let s = Scheme::default();
        let h = HamiltonianSpec::harmonic();
        assert!(commutator_defect(&h, &h, &psi, s).unwrap() <= 1e-10);
        assert!(commutator_defect(&HamiltonianSpec::pendulum(1.0), &h, &psi, s).is_err());
        let q = HamiltonianSpec::linear(1.0, 0.0);
        let p = HamiltonianSpec::linear(0.0, 1.0);
        let coarse = commutator_defect(&q, &p, &psi, s).unwrap();
        let fine = commutator_defect(&q, &p, &gaussian(&PhaseGrid2D::square(6.0, 129).unwrap()), s).unwrap();
        assert!(coarse / fine > 3.5 && coarse / fine < 4.5, "{coarse} {fine}");
        let lit = Scheme { convention: SignConvention::LITERAL, ..s };
        assert!(commutator_defect(&q, &p, &psi, lit).unwrap() > 0.5);
    }
}
