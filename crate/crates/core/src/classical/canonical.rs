//! Catalog canonical maps and the strict contact group `(η, κ)`.
//!
//! Every catalog map acts identically on each `(qᵢ, pᵢ)` pair, so its
//! Jacobian is block diagonal with `2×2` blocks. The potential is
//! `𝒜 = −p·dq` and the group law is
//! `(η₁, κ₁)(η₂, κ₂) = (η₁∘η₂, κ₁ + κ₂ + ∫₀^{η₂(0)} (η₁*𝒜 − 𝒜))`.

use serde::{Deserialize, Serialize};

use super::flow::PhasePoint;
use super::quadrature::integrate;
use crate::error::{Error, Result};

pub type Block = [[f64; 2]; 2];

const SYMPLECTIC_TOL: f64 = 1e-10;
const PATH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CanonicalMap {
    Identity,
    /// `(q, p) ↦ (q + a, p + b)`.
    Translation { a: f64, b: f64 },
    /// `(q, p) ↦ (q cos θ + p sin θ, −q sin θ + p cos θ)`.
    Rotation { theta: f64 },
    /// `(q, p) ↦ (q, p + s q²)`.
    Kick { s: f64 },
    /// `(q, p) ↦ (q + s p², p)`.
    Drift { s: f64 },
    /// `(q, p) ↦ M (q, p)` with `det M = 1`.
    Linear { m: Block },
    /// `outer ∘ inner`.
    Compose { outer: Box<CanonicalMap>, inner: Box<CanonicalMap> },
}

fn matmul(a: &Block, b: &Block) -> Block {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

impl CanonicalMap {
    pub fn linear(m: Block) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if (det - 1.0).abs() > SYMPLECTIC_TOL {
            return Err(Error::InvalidInput(format!("linear map must have unit determinant, got {det}")));
        }
        Ok(CanonicalMap::Linear { m })
    }

    /// Symbolic composition `self ∘ inner`; translations and identities fold.
    pub fn then_after(&self, inner: &CanonicalMap) -> CanonicalMap {
        match (self, inner) {
            (CanonicalMap::Identity, x) | (x, CanonicalMap::Identity) => x.clone(),
            (CanonicalMap::Translation { a: a1, b: b1 }, CanonicalMap::Translation { a: a2, b: b2 }) => {
                CanonicalMap::Translation { a: a1 + a2, b: b1 + b2 }
            }
            _ => CanonicalMap::Compose { outer: Box::new(self.clone()), inner: Box::new(inner.clone()) },
        }
    }

    fn apply_pair(&self, q: f64, p: f64) -> (f64, f64) {
        match self {
            CanonicalMap::Identity => (q, p),
            CanonicalMap::Translation { a, b } => (q + a, p + b),
            CanonicalMap::Rotation { theta } => {
                let (s, c) = theta.sin_cos();
                (q * c + p * s, -q * s + p * c)
            }
            CanonicalMap::Kick { s } => (q, p + s * q * q),
            CanonicalMap::Drift { s } => (q + s * p * p, p),
            CanonicalMap::Linear { m } => (m[0][0] * q + m[0][1] * p, m[1][0] * q + m[1][1] * p),
            CanonicalMap::Compose { outer, inner } => {
                let (q, p) = inner.apply_pair(q, p);
                outer.apply_pair(q, p)
            }
        }
    }

    fn jacobian_pair(&self, q: f64, p: f64) -> Block {
        match self {
            CanonicalMap::Identity | CanonicalMap::Translation { .. } => [[1.0, 0.0], [0.0, 1.0]],
            CanonicalMap::Rotation { theta } => {
                let (s, c) = theta.sin_cos();
                [[c, s], [-s, c]]
            }
            CanonicalMap::Kick { s } => [[1.0, 0.0], [2.0 * s * q, 1.0]],
            CanonicalMap::Drift { s } => [[1.0, 2.0 * s * p], [0.0, 1.0]],
            CanonicalMap::Linear { m } => *m,
            CanonicalMap::Compose { outer, inner } => {
                let (qi, pi) = inner.apply_pair(q, p);
                matmul(&outer.jacobian_pair(qi, pi), &inner.jacobian_pair(q, p))
            }
        }
    }

    pub fn apply(&self, z: &PhasePoint) -> PhasePoint {
        let mut out = z.clone();
        for i in 0..z.dim() {
            let (q, p) = self.apply_pair(z.q[i], z.p[i]);
            out.q[i] = q;
            out.p[i] = p;
        }
        out
    }

    /// Per-degree-of-freedom blocks `∂(Qᵢ, Pᵢ)/∂(qᵢ, pᵢ)`.
    pub fn jacobian(&self, z: &PhasePoint) -> Vec<Block> {
        (0..z.dim()).map(|i| self.jacobian_pair(z.q[i], z.p[i])).collect()
    }

    /// `max ‖Jᵀ𝕁J − 𝕁‖` over the blocks at `z`.
    pub fn symplectic_defect(&self, z: &PhasePoint) -> f64 {
        self.jacobian(z)
            .iter()
            .map(|j| {
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                (det - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_symplectic_at(&self, z: &PhasePoint) -> bool {
        self.symplectic_defect(z) <= SYMPLECTIC_TOL
    }

    /// Integrand of `η*𝒜 − 𝒜` on the velocity `v` at `z`.
    fn one_form(&self, z: &PhasePoint, v: &PhasePoint) -> f64 {
        let image = self.apply(z);
        let jac = self.jacobian(z);
        (0..z.dim())
            .map(|i| {
                let dq_image = jac[i][0][0] * v.q[i] + jac[i][0][1] * v.p[i];
                -image.p[i] * dq_image + z.p[i] * v.q[i]
            })
            .sum()
    }
}

fn segment_integral(eta: &CanonicalMap, a: &PhasePoint, b: &PhasePoint) -> Result<f64> {
    let v = b.axpy(-1.0, a);
    let scale = 1.0 + a.distance(&PhasePoint::zeros(a.dim())) + b.distance(&PhasePoint::zeros(b.dim()));
    integrate(|s| eta.one_form(&a.axpy(s, &v), &v), 0.0, 1.0, 1e-13 * scale * scale, 1e-12)
}

/// `∫ (η*𝒜 − 𝒜)` along the polyline through `vertices`.
pub fn path_cocycle(eta: &CanonicalMap, vertices: &[PhasePoint]) -> Result<f64> {
    vertices.windows(2).map(|w| segment_integral(eta, &w[0], &w[1])).sum()
}

/// `∫₀^z (η*𝒜 − 𝒜)` along the straight segment from the origin.
pub fn cocycle_integral(eta: &CanonicalMap, z: &PhasePoint) -> Result<f64> {
    path_cocycle(eta, &[PhasePoint::zeros(z.dim()), z.clone()])
}

/// Difference between the straight path and the path through `(q, 0)`.
pub fn path_independence_defect(eta: &CanonicalMap, z: &PhasePoint) -> Result<f64> {
    let corner = PhasePoint::new(z.q.clone(), vec![0.0; z.dim()]);
    let straight = cocycle_integral(eta, z)?;
    let bent = path_cocycle(eta, &[PhasePoint::zeros(z.dim()), corner, z.clone()])?;
    Ok((straight - bent).abs())
}

/// Element `(η, e^{iκ})` of the strict contact group; `κ` is kept unreduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub map: CanonicalMap,
    pub kappa: f64,
}

impl GroupElement {
    pub fn new(map: CanonicalMap, kappa: f64) -> Self {
        Self { map, kappa }
    }

    pub fn identity() -> Self {
        Self { map: CanonicalMap::Identity, kappa: 0.0 }
    }

    /// `κ mod 2π` in `[0, 2π)`.
    pub fn reduced_kappa(&self) -> f64 {
        self.kappa.rem_euclid(std::f64::consts::TAU)
    }
}

/// Group product `g₁ g₂` evaluated in phase-space dimension `dim`.
pub fn group_compose(g1: &GroupElement, g2: &GroupElement, dim: usize) -> Result<GroupElement> {
    let origin_image = g2.map.apply(&PhasePoint::zeros(dim));
    let defect = path_independence_defect(&g1.map, &origin_image)?;
    if defect > PATH_TOL * (1.0 + origin_image.distance(&PhasePoint::zeros(dim))).powi(2) {
        return Err(Error::Quadrature { estimate: defect });
    }
    let phase = cocycle_integral(&g1.map, &origin_image)?;
    Ok(GroupElement { map: g1.map.then_after(&g2.map), kappa: g1.kappa + g2.kappa + phase })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<PhasePoint> {
        vec![PhasePoint::one(0.3, -0.7), PhasePoint::one(-1.2, 0.4), PhasePoint::new(vec![0.5, 1.0], vec![-0.2, 0.9])]
    }

    fn catalog() -> Vec<CanonicalMap> {
        vec![
            CanonicalMap::Identity,
            CanonicalMap::Translation { a: 0.4, b: -1.1 },
            CanonicalMap::Rotation { theta: 0.7 },
            CanonicalMap::Kick { s: 0.3 },
            CanonicalMap::Drift { s: -0.2 },
            CanonicalMap::linear([[2.0, 1.0], [1.0, 1.0]]).unwrap(),
            CanonicalMap::Kick { s: 0.5 }.then_after(&CanonicalMap::Rotation { theta: 1.1 }),
        ]
    }

    #[test]
    fn catalog_is_symplectic() {
        for m in catalog() {
            for z in samples() {
                assert!(m.is_symplectic_at(&z), "{m:?}");
            }
        }
        assert!(CanonicalMap::linear([[2.0, 0.0], [0.0, 2.0]]).is_err());
    }

    #[test]
    fn identity_cocycle_vanishes() {
        assert_eq!(cocycle_integral(&CanonicalMap::Identity, &PhasePoint::one(1.0, 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn translation_cocycle_closed_form() {
        let (a, b) = (0.4, -1.1);
        let z = PhasePoint::one(1.7, 0.3);
        let v = cocycle_integral(&CanonicalMap::Translation { a, b }, &z).unwrap();
        assert!((v - (-b * 1.7)).abs() < 1e-12);
    }

    #[test]
    fn path_independence() {
        for m in catalog() {
            for z in samples() {
                assert!(path_independence_defect(&m, &z).unwrap() <= 1e-8, "{m:?}");
            }
        }
    }

    #[test]
    fn compose_with_identity() {
        let g1 = GroupElement::new(CanonicalMap::Rotation { theta: 0.3 }, 1.0);
        let g = group_compose(&g1, &GroupElement::identity(), 1).unwrap();
        assert_eq!(g, g1);
    }

    #[test]
    fn two_translations() {
        let g1 = GroupElement::new(CanonicalMap::Translation { a: 1.0, b: 2.0 }, 0.1);
        let g2 = GroupElement::new(CanonicalMap::Translation { a: 0.5, b: -0.3 }, 0.2);
        let g = group_compose(&g1, &g2, 1).unwrap();
        assert_eq!(g.map, CanonicalMap::Translation { a: 1.5, b: 1.7 });
        // −b₁ · q(η₂(0)) = −2 · 0.5
        assert!((g.kappa - (0.3 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn associativity() {
        let c = catalog();
        for (i, j, k) in [(1, 2, 3), (3, 4, 5), (6, 1, 4), (2, 6, 1)] {
            let g1 = GroupElement::new(c[i].clone(), 0.1);
            let g2 = GroupElement::new(c[j].then_after(&CanonicalMap::Translation { a: 0.3, b: 0.2 }), 0.2);
            let g3 = GroupElement::new(CanonicalMap::Translation { a: -0.4, b: 0.6 }.then_after(&c[k]), 0.3);
            let left = group_compose(&group_compose(&g1, &g2, 1).unwrap(), &g3, 1).unwrap();
            let right = group_compose(&g1, &group_compose(&g2, &g3, 1).unwrap(), 1).unwrap();
            assert!((left.kappa - right.kappa).abs() <= 1e-8);
            let z = PhasePoint::one(0.2, -0.5);
            assert!(left.map.apply(&z).distance(&right.map.apply(&z)) < 1e-12);
        }
    }
}
