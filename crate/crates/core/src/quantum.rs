//! Finite-dimensional Hilbert space: pure states, Hermitian and
//! skew-Hermitian operators, density operators and their unitary evolution.
//!
//! The Lie algebra of the unitary group is identified with its dual through
//! the real pairing `<A, B> = Re Tr(A^† B)`, so momentum maps take values in
//! skew-Hermitian matrices.

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, I, MAX_DENSE_DIM};

/// Relative tolerance for Hermiticity / skew-Hermiticity of stored operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for an admissible density operator.
pub const POSITIVITY_TOL: f64 = -1e-10;

fn check_dense_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("zero-dimensional Hilbert space".into()));
    }
    if n > MAX_DENSE_DIM {
        return Err(Error::InvalidInput(format!(
            "dimension {n} exceeds dense limit {MAX_DENSE_DIM}"
        )));
    }
    Ok(())
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar.is_finite() && hbar > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")))
    }
}

/// A state vector in `C^n`. Normalization is recorded, never imposed.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    components: CVector,
    hbar: f64,
}

impl WaveFunction {
    pub fn new(components: CVector, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        check_dense_dim(components.len())?;
        if !components.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("wavefunction".into()));
        }
        Ok(Self { components, hbar })
    }

    pub fn from_slice(values: &[C64], hbar: f64) -> Result<Self> {
        Self::new(CVector::from_column_slice(values), hbar)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn components(&self) -> &CVector {
        &self.components
    }

    pub fn norm_sq(&self) -> f64 {
        self.components.norm_squared()
    }

    /// Admissibility flag: `|‖ψ‖² - 1| <= tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sq() - 1.0).abs() <= tol
    }

    pub fn inner(&self, other: &WaveFunction) -> C64 {
        self.components.dotc(&other.components)
    }

    pub fn map(&self, op: &CMatrix) -> Result<WaveFunction> {
        ensure_dim(self.dim(), op.ncols())?;
        WaveFunction::new(op * &self.components, self.hbar)
    }
}

/// A Hermitian matrix, e.g. a Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: CMatrix,
}

impl HermitianOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidInput("operator must be square".into()));
        }
        check_dense_dim(entries.nrows())?;
        if !linalg::all_finite(&entries) {
            return Err(Error::NonFinite("Hermitian operator".into()));
        }
        let defect = linalg::hermitian_defect(&entries);
        if defect > HERMITIAN_TOL * linalg::max_abs(&entries) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self { entries })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(CMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }
}

/// An element of the unitary Lie algebra (or of its dual), `μ^† = -μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewHermitianMoment {
    entries: CMatrix,
}

impl SkewHermitianMoment {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidInput("moment must be square".into()));
        }
        if !linalg::all_finite(&entries) {
            return Err(Error::NonFinite("skew-Hermitian moment".into()));
        }
        let defect = linalg::skew_defect(&entries);
        if defect > HERMITIAN_TOL * linalg::max_abs(&entries) {
            return Err(Error::InvalidInput(format!(
                "matrix is not skew-Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Self { entries })
    }

    /// `-i A` for Hermitian `A`.
    pub fn from_hermitian(a: &HermitianOperator) -> Self {
        Self { entries: a.entries() * (-I) }
    }

    pub(crate) fn from_raw(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn zero(n: usize) -> Self {
        Self { entries: CMatrix::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Action of the Lie algebra element on a state vector.
    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        psi.map(&self.entries)
    }

    /// `U μ U^†`.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        Self { entries: u * &self.entries * u.adjoint() }
    }
}

/// A Hermitian operator standing for a (possibly non-normalized) mixed state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    entries: CMatrix,
    trace: f64,
}

impl DensityOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidInput("density operator must be square".into()));
        }
        check_dense_dim(entries.nrows())?;
        if !linalg::all_finite(&entries) {
            return Err(Error::NonFinite("density operator".into()));
        }
        let defect = linalg::hermitian_defect(&entries);
        if defect > HERMITIAN_TOL * linalg::max_abs(&entries).max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        let trace = entries.trace().re;
        Ok(Self { entries, trace })
    }

    pub fn pure(psi: &WaveFunction) -> Self {
        let entries = linalg::outer(psi.components(), psi.components());
        let trace = entries.trace().re;
        Self { entries, trace }
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        Self::new(CMatrix::identity(n, n).scale(1.0 / n as f64))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Positivity flag (smallest eigenvalue above `-1e-10`).
    pub fn is_admissible(&self) -> bool {
        self.min_eigenvalue() >= POSITIVITY_TOL
    }

    /// Positivity and unit trace.
    pub fn is_normalized_state(&self, trace_tol: f64) -> bool {
        self.is_admissible() && (self.trace - 1.0).abs() <= trace_tol
    }

    /// Frobenius norm `‖ρ² - ρ‖`, zero exactly for pure normalized states.
    pub fn purity_defect(&self) -> f64 {
        (&self.entries * &self.entries - &self.entries).norm()
    }

    /// The momentum map value `-iħρ`, in units of action.
    pub fn momentum(&self, hbar: f64) -> SkewHermitianMoment {
        SkewHermitianMoment { entries: self.entries.map(|z| -I * hbar * z) }
    }

    pub fn conjugate(&self, u: &CMatrix) -> Self {
        let entries = u * &self.entries * u.adjoint();
        let trace = entries.trace().re;
        Self { entries, trace }
    }

    pub(crate) fn from_raw(entries: CMatrix) -> Self {
        let trace = entries.trace().re;
        Self { entries, trace }
    }
}

/// Canonical symplectic form `ω(ψ₁, ψ₂) = 2ħ Im⟨ψ₁|ψ₂⟩`.
pub fn symplectic_form(a: &WaveFunction, b: &WaveFunction) -> Result<f64> {
    ensure_dim(a.dim(), b.dim())?;
    if a.hbar != b.hbar {
        return Err(Error::InvalidInput("states carry different hbar".into()));
    }
    Ok(2.0 * a.hbar * a.inner(b).im)
}

/// Real pairing `⟨μ, ξ⟩ = Re Tr(μ^† ξ)`.
pub fn dual_pairing(mu: &SkewHermitianMoment, xi: &SkewHermitianMoment) -> Result<f64> {
    ensure_dim(mu.dim(), xi.dim())?;
    Ok(frobenius_pairing(&mu.entries, &xi.entries))
}

/// `Re Tr(A^† B)` without building the product.
pub(crate) fn frobenius_pairing(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Pure-state momentum map `J(ψ) = -iħ ψψ^†`.
pub fn momentum_map_pure(psi: &WaveFunction) -> SkewHermitianMoment {
    DensityOperator::pure(psi).momentum(psi.hbar)
}

/// `U(t) = exp(-iHt/ħ)` from the eigen-decomposition of `H`.
pub fn unitary_propagator(h: &HermitianOperator, t: f64, hbar: f64) -> Result<CMatrix> {
    check_hbar(hbar)?;
    if !t.is_finite() {
        return Err(Error::NonFinite("time".into()));
    }
    let n = h.dim();
    let (vals, vecs) = linalg::hermitian_eigen(h.entries());
    let phases = CVector::from_iterator(n, vals.iter().map(|&e| (-I * (e * t / hbar)).exp()));
    Ok(&vecs * CMatrix::from_diagonal(&phases) * vecs.adjoint())
}

/// Solution `ρ(t) = U ρ₀ U^†` of `iħ ∂ₜρ = [H, ρ]`.
pub fn evolve_density(
    rho0: &DensityOperator,
    h: &HermitianOperator,
    t: f64,
    hbar: f64,
) -> Result<DensityOperator> {
    ensure_dim(h.dim(), rho0.dim())?;
    let u = unitary_propagator(h, t, hbar)?;
    Ok(rho0.conjugate(&u))
}

pub fn evolve_state(psi: &WaveFunction, h: &HermitianOperator, t: f64) -> Result<WaveFunction> {
    ensure_dim(h.dim(), psi.dim())?;
    let u = unitary_propagator(h, t, psi.hbar)?;
    psi.map(&u)
}

/// Noether diagnostic `s_t = ⟨-iħρ(t), ξ⟩` along a density trajectory.
pub fn noether_series(
    trajectory: &[DensityOperator],
    xi: &SkewHermitianMoment,
    hbar: f64,
) -> Result<Vec<f64>> {
    trajectory
        .iter()
        .map(|rho| dual_pairing(&rho.momentum(hbar), xi))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, real_diag};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn wf(v: &[C64]) -> WaveFunction {
        WaveFunction::from_slice(v, 1.0).unwrap()
    }

    #[test]
    fn symplectic_form_examples() {
        let e1 = wf(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let ie1 = wf(&[c(0.0, 1.0), c(0.0, 0.0)]);
        let e2 = wf(&[c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(symplectic_form(&e1, &e1).unwrap(), 0.0);
        assert_eq!(symplectic_form(&e1, &ie1).unwrap(), 2.0);
        assert_eq!(symplectic_form(&e1, &e2).unwrap(), 0.0);
        let e3 = wf(&[c(1.0, 0.0); 3]);
        assert!(matches!(
            symplectic_form(&e1, &e3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dual_pairing_examples() {
        let mu = SkewHermitianMoment::new(CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(0.0, -1.0),
            c(0.0, 0.0),
        ])))
        .unwrap();
        let nu = SkewHermitianMoment::new(CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(0.0, 0.0),
            c(0.0, -1.0),
        ])))
        .unwrap();
        assert!((dual_pairing(&mu, &mu).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(dual_pairing(&mu, &nu).unwrap(), 0.0);
        assert_eq!(dual_pairing(&mu, &SkewHermitianMoment::zero(2)).unwrap(), 0.0);
    }

    #[test]
    fn pure_momentum_map_examples() {
        let j = momentum_map_pure(&wf(&[c(1.0, 0.0), c(0.0, 0.0)]));
        assert_eq!(j.entries()[(0, 0)], c(0.0, -1.0));
        assert_eq!(linalg::max_abs(&(j.entries() - CMatrix::from_row_slice(2, 2, &[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]))), 0.0);
        let z = momentum_map_pure(&wf(&[c(0.0, 0.0), c(0.0, 0.0)]));
        assert_eq!(linalg::max_abs(z.entries()), 0.0);
        let plus = momentum_map_pure(&wf(&[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]));
        for z in plus.entries().iter() {
            assert!((z - c(0.0, -0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn propagator_examples() {
        let zero = HermitianOperator::zero(3).unwrap();
        let u = unitary_propagator(&zero, 2.7, 1.0).unwrap();
        assert!(linalg::max_abs(&(u - CMatrix::identity(3, 3))) < 1e-15);

        let h = HermitianOperator::new(real_diag(&[0.0, 1.0])).unwrap();
        let u = unitary_propagator(&h, PI, 1.0).unwrap();
        assert!(linalg::max_abs(&(u - real_diag(&[1.0, -1.0]))) < 1e-12);

        // closed form: exp(-iθσx) = cosθ I - i sinθ σx, θ = π/2
        let theta = FRAC_PI_2;
        let oracle = CMatrix::identity(2, 2).scale(theta.cos()) - pauli_x() * (I * theta.sin());
        let hx = HermitianOperator::new(pauli_x()).unwrap();
        let u = unitary_propagator(&hx, FRAC_PI_2, 1.0).unwrap();
        assert!(linalg::max_abs(&(&u - oracle)) < 1e-12);
        assert!(linalg::max_abs(&(&u - pauli_x() * (-I))) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_and_oversized() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian { .. })));
        assert!(HermitianOperator::zero(MAX_DENSE_DIM + 1).is_err());
    }

    #[test]
    fn evolve_density_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho0 = DensityOperator::pure(&wf(&[c(0.6, 0.0), c(0.0, 0.8)]));
        let zero = HermitianOperator::zero(2).unwrap();
        let r = evolve_density(&rho0, &zero, 3.0, 1.0).unwrap();
        assert!(linalg::max_abs(&(r.entries() - rho0.entries())) < 1e-15);

        let mixed = DensityOperator::maximally_mixed(4).unwrap();
        let h = HermitianOperator::new(linalg::random_hermitian(&mut rng, 4)).unwrap();
        let r = evolve_density(&mixed, &h, 1.3, 1.0).unwrap();
        assert!(linalg::max_abs(&(r.entries() - mixed.entries())) < 1e-12);

        // eigenphase oracle: diag(1, e^{-iπ}) maps |+> to |->
        let plus = DensityOperator::pure(&wf(&[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]));
        let minus = DensityOperator::pure(&wf(&[c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)]));
        let hd = HermitianOperator::new(real_diag(&[0.0, 1.0])).unwrap();
        let r = evolve_density(&plus, &hd, PI, 1.0).unwrap();
        assert!(linalg::max_abs(&(r.entries() - minus.entries())) < 1e-12);
    }

    #[test]
    fn noether_series_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4;
        let hbar = 0.7;
        let h = HermitianOperator::new(linalg::random_hermitian(&mut rng, n)).unwrap();
        let psi = linalg::random_vector(&mut rng, n);
        let psi = WaveFunction::new(psi.unscale(psi.norm()), hbar).unwrap();
        let rho0 = DensityOperator::pure(&psi);
        let traj: Vec<_> = (0..20)
            .map(|k| evolve_density(&rho0, &h, 0.1 * k as f64, hbar).unwrap())
            .collect();

        let phase = SkewHermitianMoment::new(CMatrix::identity(n, n) * (-I / hbar)).unwrap();
        for s in noether_series(&traj, &phase, hbar).unwrap() {
            assert!((s - 1.0).abs() < 1e-12);
        }

        let hn = linalg::max_abs(h.entries());
        let energy = SkewHermitianMoment::new(h.entries() * (-I / hn)).unwrap();
        let s = noether_series(&traj, &energy, hbar).unwrap();
        assert!(s.iter().all(|v| (v - s[0]).abs() < 1e-11));

        let generic = SkewHermitianMoment::new(linalg::random_skew(&mut rng, n)).unwrap();
        let s = noether_series(&traj, &generic, hbar).unwrap();
        let spread = s.iter().cloned().fold(f64::MIN, f64::max) - s.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 1e-6);
    }
}
