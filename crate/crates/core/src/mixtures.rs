//! Discrete and continuous quantum mixtures, the weighted symplectic form on
//! parameterized wavefunction families, and Born–Oppenheimer partial traces.

use crate::error::{ensure_dim, Error, Result};
use crate::grid::{ParameterGrid, WeightDensity};
use crate::linalg::{CMatrix, CVector, C64};
use crate::quantum::{unitary_propagator, DensityOperator, HermitianOperator, WaveFunction};

/// Default tolerance on the partial normalization condition `‖ψ(r)‖² = 1`.
pub const PNC_TOL: f64 = 1e-8;

/// `Σ wₖ ψₖψₖ^†` data: positive weights and equal-dimension states.
#[derive(Debug, Clone)]
pub struct DiscreteMixture {
    weights: Vec<f64>,
    states: Vec<WaveFunction>,
}

impl DiscreteMixture {
    pub fn new(weights: Vec<f64>, states: Vec<WaveFunction>) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} states",
                weights.len(),
                states.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidInput(format!("mixture weight must be positive, got {w}")));
        }
        let n = states[0].dim();
        for s in &states {
            ensure_dim(n, s.dim())?;
        }
        Ok(Self { weights, states })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[WaveFunction] {
        &self.states
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Unit total weight and normalized members, within `1e-10`.
    pub fn is_admissible(&self) -> bool {
        (self.total_weight() - 1.0).abs() <= 1e-10 && self.states.iter().all(|s| s.is_normalized(1e-10))
    }
}

/// One state vector of fixed dimension per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFamily {
    grid: ParameterGrid,
    states: Vec<CVector>,
    hbar: f64,
}

impl WaveFamily {
    pub fn new(grid: ParameterGrid, states: Vec<CVector>, hbar: f64) -> Result<Self> {
        ensure_dim(grid.len(), states.len())?;
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
        }
        let m = states[0].len();
        if m == 0 {
            return Err(Error::InvalidInput("zero-dimensional family".into()));
        }
        for s in &states {
            ensure_dim(m, s.len())?;
            if !s.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite("wave family".into()));
            }
        }
        Ok(Self { grid, states, hbar })
    }

    pub fn from_fn(grid: ParameterGrid, hbar: f64, f: impl Fn([f64; 3]) -> CVector) -> Result<Self> {
        let states = (0..grid.len()).map(|i| f(grid.coord(i))).collect();
        Self::new(grid, states, hbar)
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn states(&self) -> &[CVector] {
        &self.states
    }

    pub fn state(&self, node: usize) -> &CVector {
        &self.states[node]
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn fiber_dim(&self) -> usize {
        self.states[0].len()
    }

    /// `max_r |‖ψ(r)‖² - 1|`.
    pub fn pnc_defect(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.norm_squared() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Node-wise left action `ψ(r) ↦ U ψ(r)`.
    pub fn left_multiply(&self, u: &CMatrix) -> Result<Self> {
        ensure_dim(self.fiber_dim(), u.ncols())?;
        Ok(Self {
            grid: self.grid.clone(),
            states: self.states.iter().map(|s| u * s).collect(),
            hbar: self.hbar,
        })
    }

    /// Node-wise map by an arbitrary function of the node index.
    pub fn map_nodes(&self, f: impl Fn(usize, &CVector) -> CVector) -> Result<Self> {
        let states = self.states.iter().enumerate().map(|(i, s)| f(i, s)).collect();
        Self::new(self.grid.clone(), states, self.hbar)
    }

    pub(crate) fn with_states(&self, states: Vec<CVector>) -> Self {
        Self { grid: self.grid.clone(), states, hbar: self.hbar }
    }

    fn check_compatible(&self, other: &WaveFamily) -> Result<()> {
        self.grid.same_as(&other.grid)?;
        ensure_dim(self.fiber_dim(), other.fiber_dim())
    }
}

/// Several weighted families sharing a grid and fibre dimension.
#[derive(Debug, Clone)]
pub struct MultiFamily {
    members: Vec<(WeightDensity, WaveFamily)>,
}

impl MultiFamily {
    pub fn new(members: Vec<(WeightDensity, WaveFamily)>) -> Result<Self> {
        let Some((w0, f0)) = members.first() else {
            return Err(Error::InvalidInput("empty multi-family".into()));
        };
        for (w, f) in &members {
            w0.grid().same_as(w.grid())?;
            w.grid().same_as(f.grid())?;
            ensure_dim(f0.fiber_dim(), f.fiber_dim())?;
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(WeightDensity, WaveFamily)] {
        &self.members
    }
}

/// Nuclear amplitude `χ(r)` of a factorized molecular wavefunction.
#[derive(Debug, Clone)]
pub struct NuclearAmplitude {
    grid: ParameterGrid,
    values: Vec<C64>,
}

impl NuclearAmplitude {
    pub fn new(grid: ParameterGrid, values: Vec<C64>) -> Result<Self> {
        ensure_dim(grid.len(), values.len())?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: ParameterGrid, f: impl Fn([f64; 3]) -> C64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.coord(i))).collect();
        Self::new(grid, values)
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// `|χ|²` as a weight density.
    pub fn weight(&self) -> Result<WeightDensity> {
        WeightDensity::new(self.grid.clone(), self.values.iter().map(|c| c.norm_sqr()).collect())
    }

    /// `∫|χ|²`.
    pub fn norm_sq(&self) -> Result<f64> {
        Ok(self.weight()?.total())
    }
}

/// `ρ = Σₖ wₖ ψₖψₖ^†`.
pub fn density_from_mixture(m: &DiscreteMixture) -> DensityOperator {
    let n = m.states[0].dim();
    let mut rho = CMatrix::zeros(n, n);
    for (w, s) in m.weights.iter().zip(&m.states) {
        rho.gerc(C64::new(*w, 0.0), s.components(), s.components(), C64::new(1.0, 0.0));
    }
    DensityOperator::from_raw(rho)
}

/// `ρ = ∫ w(r) ψ(r)ψ(r)^† dⁿr` by the grid quadrature.
pub fn density_from_family(w: &WeightDensity, fam: &WaveFamily) -> Result<DensityOperator> {
    w.grid().same_as(fam.grid())?;
    let m = fam.fiber_dim();
    let mut rho = CMatrix::zeros(m, m);
    for (q, s) in w.quadrature().iter().zip(&fam.states) {
        if *q != 0.0 {
            rho.gerc(C64::new(*q, 0.0), s, s, C64::new(1.0, 0.0));
        }
    }
    Ok(DensityOperator::from_raw(rho))
}

/// `ρ = Σₖ ∫ wₖ ψₖψₖ^† dⁿr`.
pub fn density_from_multifamily(mf: &MultiFamily) -> Result<DensityOperator> {
    let m = mf.members[0].1.fiber_dim();
    let mut rho = CMatrix::zeros(m, m);
    for (w, f) in &mf.members {
        rho += density_from_family(w, f)?.entries();
    }
    Ok(DensityOperator::from_raw(rho))
}

/// `Ω(δψ₁, δψ₂) = 2ħ Im ∫ w ⟨δψ₁|δψ₂⟩ dⁿr`.
pub fn family_symplectic_form(w: &WeightDensity, a: &WaveFamily, b: &WaveFamily) -> Result<f64> {
    w.grid().same_as(a.grid())?;
    a.check_compatible(b)?;
    let s: f64 = w
        .quadrature()
        .iter()
        .zip(a.states.iter().zip(&b.states))
        .map(|(q, (x, y))| q * x.dotc(y).im)
        .sum();
    Ok(2.0 * a.hbar * s)
}

/// Node-wise Schrödinger evolution with the common propagator `exp(-iHt/ħ)`.
pub fn evolve_family(fam: &WaveFamily, h: &HermitianOperator, t: f64) -> Result<WaveFamily> {
    ensure_dim(fam.fiber_dim(), h.dim())?;
    let u = unitary_propagator(h, t, fam.hbar)?;
    fam.left_multiply(&u)
}

/// Output of [`bo_partial_traces`].
#[derive(Debug, Clone)]
pub struct PartialTraces {
    /// `ρₑ = ∫ |χ|² ψψ^† dr`.
    pub electronic: DensityOperator,
    /// `ρₙ(r, r') = χ(r) χ*(r') ⟨ψ(r')|ψ(r)⟩`, row `r`, column `r'`; only
    /// materialized on one-dimensional grids.
    pub nuclear: Option<CMatrix>,
    /// Whether the partial normalization condition held within [`PNC_TOL`].
    pub pnc_satisfied: bool,
}

/// Electronic and nuclear reduced density matrices of `Ψ(r) = χ(r) ψ(r)`.
pub fn bo_partial_traces(chi: &NuclearAmplitude, fam: &WaveFamily) -> Result<PartialTraces> {
    chi.grid.same_as(fam.grid())?;
    let weight = chi.weight()?;
    let electronic = density_from_family(&weight, fam)?;
    let pnc_satisfied = fam.pnc_defect() <= PNC_TOL;
    if !pnc_satisfied {
        log::warn!(
            "partial normalization defect {:.3e}: Tr ρₑ = ∫|χ|² is not guaranteed",
            fam.pnc_defect()
        );
    }
    let nuclear = (fam.grid().dim() == 1).then(|| {
        let n = fam.grid().len();
        CMatrix::from_fn(n, n, |r, rp| {
            chi.values[r] * chi.values[rp].conj() * fam.states[rp].dotc(&fam.states[r])
        })
    });
    Ok(PartialTraces { electronic, nuclear, pnc_satisfied })
}
