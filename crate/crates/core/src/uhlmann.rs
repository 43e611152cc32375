//! Operator-valued Clebsch variables: `ρ = WW†` and the generalized
//! `ρ = ψψ† + [W, W†]`.

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{self, CMatrix, C64, I};
use crate::quantum::{unitary_propagator, DensityOperator, HermitianOperator, SkewHermitianMoment, WaveFunction, POSITIVITY_TOL};

/// `W : ℂᵐ → ℂⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WOperator {
    entries: CMatrix,
    hbar: f64,
}

impl WOperator {
    pub fn new(entries: CMatrix, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
        }
        if entries.nrows() == 0 || entries.ncols() == 0 || entries.nrows() > linalg::MAX_DENSE_DIM {
            return Err(Error::InvalidInput(format!("bad W shape {}×{}", entries.nrows(), entries.ncols())));
        }
        if !linalg::all_finite(&entries) {
            return Err(Error::NonFinite("W operator".into()));
        }
        Ok(Self { entries, hbar })
    }

    /// Single column `ψ`.
    pub fn from_state(psi: &WaveFunction) -> Self {
        Self { entries: CMatrix::from_column_slice(psi.dim(), 1, psi.components().as_slice()), hbar: psi.hbar() }
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }

    pub fn is_square(&self) -> bool {
        self.entries.is_square()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn left_multiply(&self, u: &CMatrix) -> Result<Self> {
        ensure_dim(self.entries.nrows(), u.ncols())?;
        Ok(Self { entries: u * &self.entries, hbar: self.hbar })
    }

    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        self.require_square()?;
        ensure_dim(self.entries.nrows(), u.ncols())?;
        Ok(Self { entries: u * &self.entries * u.adjoint(), hbar: self.hbar })
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("square W required, got {:?}", self.shape())))
        }
    }
}

/// `ρ = WW†`.
pub fn rho_from_w(w: &WOperator) -> DensityOperator {
    DensityOperator::from_raw(&w.entries * w.entries.adjoint())
}

/// `ω(W₁, W₂) = 2ħ Im Tr(W₁†W₂)`.
pub fn w_symplectic_form(a: &WOperator, b: &WOperator) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::InvalidInput(format!("shape {:?} vs {:?}", a.shape(), b.shape())));
    }
    let tr: C64 = a.entries.iter().zip(b.entries.iter()).map(|(x, y)| x.conj() * y).sum();
    Ok(2.0 * a.hbar * tr.im)
}

/// `W(t) = U(t) W₀`.
pub fn evolve_w(w0: &WOperator, h: &HermitianOperator, t: f64) -> Result<WOperator> {
    ensure_dim(h.dim(), w0.entries.nrows())?;
    w0.left_multiply(&unitary_propagator(h, t, w0.hbar)?)
}

/// `−iħ [W, W†]`.
pub fn adjoint_momentum_map(w: &WOperator) -> Result<SkewHermitianMoment> {
    w.require_square()?;
    let c = linalg::commutator(&w.entries, &w.entries.adjoint()) * (-I * w.hbar);
    let skew = (&c - c.adjoint()) * C64::new(0.5, 0.0);
    Ok(SkewHermitianMoment::from_raw(skew))
}

/// `(ψ, W)` with `W` square of the same dimension as `ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    pub psi: WaveFunction,
    pub w: WOperator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub positive: bool,
    pub unit_trace: bool,
}

impl HybridState {
    pub fn new(psi: WaveFunction, w: WOperator) -> Result<Self> {
        w.require_square()?;
        ensure_dim(psi.dim(), w.entries.nrows())?;
        if psi.hbar() != w.hbar {
            return Err(Error::InvalidInput("ψ and W carry different hbar".into()));
        }
        Ok(Self { psi, w })
    }

    /// `ρ = ψψ† + [W, W†]`.
    pub fn density(&self) -> DensityOperator {
        let pure = linalg::outer(self.psi.components(), self.psi.components());
        DensityOperator::from_raw(pure + linalg::commutator(&self.w.entries, &self.w.entries.adjoint()))
    }

    pub fn admissibility(&self) -> Admissibility {
        let rho = self.density();
        let min_eigenvalue = rho.min_eigenvalue();
        Admissibility {
            min_eigenvalue,
            trace: rho.trace(),
            positive: min_eigenvalue >= POSITIVITY_TOL,
            unit_trace: (rho.trace() - 1.0).abs() <= 1e-10,
        }
    }
}

/// `ψ(t) = Uψ₀`, `W(t) = UW₀U†`; inadmissible initial data is rejected.
pub fn evolve_hybrid(s0: &HybridState, h: &HermitianOperator, t: f64) -> Result<(HybridState, DensityOperator)> {
    ensure_dim(h.dim(), s0.psi.dim())?;
    let adm = s0.admissibility();
    if !adm.positive {
        return Err(Error::Inadmissible { eigenvalue: adm.min_eigenvalue });
    }
    if !adm.unit_trace {
        log::warn!("hybrid state trace {:.12} is not 1", adm.trace);
    }
    let u = unitary_propagator(h, t, s0.psi.hbar())?;
    let s = HybridState { psi: s0.psi.map(&u)?, w: s0.w.conjugate(&u)? };
    let rho = s.density();
    Ok((s, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, pauli_x, random_matrix, random_unitary, real_diag};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rho_examples() {
        let psi = WaveFunction::from_slice(&[c(0.6, 0.0), c(0.0, 0.8)], 1.0).unwrap();
        let rho = rho_from_w(&WOperator::from_state(&psi));
        assert!(max_abs(&(rho.entries() - DensityOperator::pure(&psi).entries())) < 1e-15);
        let w = WOperator::new(CMatrix::identity(3, 3) * c(1.0 / 3f64.sqrt(), 0.0), 1.0).unwrap();
        assert!(max_abs(&(rho_from_w(&w).entries() - CMatrix::identity(3, 3) * c(1.0 / 3.0, 0.0))) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = WOperator::new(random_matrix(&mut rng, 4, 2), 1.0).unwrap();
        let rho = rho_from_w(&w);
        assert!(rho.min_eigenvalue() >= -1e-10);
        assert!((rho.trace() - w.frobenius_sq()).abs() < 1e-12);
    }

    #[test]
    fn symplectic_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_matrix(&mut rng, 3, 2);
        let n = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let a = WOperator::new(m / c(n, 0.0), 1.0).unwrap();
        assert_eq!(w_symplectic_form(&a, &a).unwrap(), 0.0);
        let b = WOperator::new(a.entries() * c(0.0, 1.0), 1.0).unwrap();
        assert!((w_symplectic_form(&a, &b).unwrap() - 2.0).abs() < 1e-14);
        let mut x = CMatrix::zeros(2, 2);
        x[(0, 0)] = c(1.0, 2.0);
        let mut y = CMatrix::zeros(2, 2);
        y[(1, 1)] = c(0.0, 3.0);
        let (x, y) = (WOperator::new(x, 1.0).unwrap(), WOperator::new(y, 1.0).unwrap());
        assert_eq!(w_symplectic_form(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn evolve_w_examples() {
        let w0 = WOperator::new(CMatrix::identity(2, 2) * c(FRAC_1_SQRT_2, 0.0), 1.0).unwrap();
        let h = HermitianOperator::new(real_diag(&[0.0, 1.0])).unwrap();
        assert_eq!(evolve_w(&w0, &HermitianOperator::zero(2).unwrap(), 1.0).unwrap(), w0);
        let w = evolve_w(&w0, &h, PI).unwrap();
        assert!(max_abs(&(w.entries() - real_diag(&[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]))) < 1e-12);
        assert!(max_abs(&(rho_from_w(&w).entries() - real_diag(&[0.5, 0.5]))) < 1e-12);
    }

    #[test]
    fn adjoint_map_examples() {
        let h = WOperator::new(pauli_x(), 1.0).unwrap();
        assert_eq!(max_abs(adjoint_momentum_map(&h).unwrap().entries()), 0.0);
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        let j = adjoint_momentum_map(&WOperator::new(m, 0.5).unwrap()).unwrap();
        assert!(max_abs(&(j.entries() - real_diag(&[1.0, -1.0]) * c(0.0, -0.5))) < 1e-15);
        assert!(adjoint_momentum_map(&WOperator::new(CMatrix::zeros(2, 3), 1.0).unwrap()).is_err());
    }

    #[test]
    fn hybrid_gate_rejects_pinned_instance() {
        let psi = WaveFunction::from_slice(&[c(1.0, 0.0), c(0.0, 0.0)], 1.0).unwrap();
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(0.5, 0.0);
        let s = HybridState::new(psi, WOperator::new(m, 1.0).unwrap()).unwrap();
        assert!(max_abs(&(s.density().entries() - real_diag(&[1.25, -0.25]))) < 1e-15);
        let h = HermitianOperator::new(pauli_x()).unwrap();
        match evolve_hybrid(&s, &h, PI / 4.0) {
            Err(Error::Inadmissible { eigenvalue }) => assert!((eigenvalue + 0.25).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hybrid_normal_w_stays_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi = WaveFunction::from_slice(&[c(0.6, 0.0), c(0.0, 0.8)], 1.0).unwrap();
        let u = random_unitary(&mut rng, 2);
        let normal = &u * real_diag(&[0.3, -1.2]) * u.adjoint();
        let s = HybridState::new(psi.clone(), WOperator::new(normal, 1.0).unwrap()).unwrap();
        let h = HermitianOperator::new(pauli_x()).unwrap();
        let (_, rho) = evolve_hybrid(&s, &h, 0.7).unwrap();
        let pure = crate::quantum::evolve_state(&psi, &h, 0.7).unwrap();
        assert!(max_abs(&(rho.entries() - DensityOperator::pure(&pure).entries())) < 1e-12);
        let (same, _) = evolve_hybrid(&s, &HermitianOperator::zero(2).unwrap(), 0.7).unwrap();
        assert!(max_abs(&(same.w.entries() - s.w.entries())) < 1e-15);
    }
}
