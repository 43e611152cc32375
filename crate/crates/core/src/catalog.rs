//! Named initial data shared by the verification suite, the acceptance
//! tests and the command-line scenarios.

use std::f64::consts::PI;

use crate::cochain::Cochain;
use crate::error::Result;
use crate::grid::{Boundary, ParameterGrid, WeightDensity};
use crate::koopman::{ClassicalWaveFunction, PhaseGrid2D};
use crate::linalg::{CVector, C64};
use crate::mixtures::WaveFamily;

/// Offset of the two-level family's parameter origin; keeps the gauge
/// singularity off the grid nodes.
pub const QWZ_OFFSET: [f64; 2] = [0.3, 0.2];

/// Periodic `[0, 2π)²` grid with `n` nodes per axis.
pub fn torus(n: usize) -> Result<ParameterGrid> {
    ParameterGrid::uniform(2, 0.0, 2.0 * PI, n, Boundary::Periodic)
}

/// Bloch vector `d(r) = (sin r₀, sin r₁, 1 + cos r₀ + cos r₁)`, evaluated at
/// `r + QWZ_OFFSET`.
pub fn qwz_vector(r: [f64; 3]) -> [f64; 3] {
    let (a, b) = (r[0] + QWZ_OFFSET[0], r[1] + QWZ_OFFSET[1]);
    [a.sin(), b.sin(), 1.0 + a.cos() + b.cos()]
}

/// Lower band of `d·σ`, in the gauge `ψ ∝ (d_x − i d_y, −(d_z + |d|))`;
/// winding number one over the torus.
pub fn qwz_family(n: usize, hbar: f64) -> Result<WaveFamily> {
    WaveFamily::from_fn(torus(n)?, hbar, |r| {
        let [x, y, z] = qwz_vector(r);
        let d = (x * x + y * y + z * z).sqrt();
        let v = [C64::new(x, -y), C64::new(-(z + d), 0.0)];
        let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        CVector::from_vec(vec![v[0] / norm, v[1] / norm])
    })
}

/// Parameter point where the gauge of [`qwz_family`] is singular.
pub fn qwz_singularity() -> [f64; 2] {
    [PI - QWZ_OFFSET[0], PI - QWZ_OFFSET[1]]
}

/// Periodic bump `exp(κ(cos(r₀−c₀) + cos(r₁−c₁) − 2))` sampled on plaquettes.
pub fn von_mises_stream(grid: &ParameterGrid, center: [f64; 2], kappa: f64) -> Result<Cochain> {
    Cochain::from_plaquette_fn(grid, |r| {
        (kappa * ((r[0] - center[0]).cos() + (r[1] - center[1]).cos() - 2.0)).exp()
    })
}

/// Family, uniform weight and stream bump for the right-leg pairing study;
/// the bump sits opposite the gauge singularity.
pub fn pairing_setup(n: usize, hbar: f64) -> Result<(WaveFamily, WeightDensity, Cochain)> {
    let fam = qwz_family(n, hbar)?;
    let w = WeightDensity::uniform_probability(fam.grid().clone())?;
    let s = qwz_singularity();
    let gamma = von_mises_stream(fam.grid(), [s[0] + PI, s[1] + PI], PAIRING_KAPPA)?;
    Ok((fam, w, gamma))
}

/// Concentration of the pairing bump; the identity picks up `2πħ γ(r_sing)`
/// from the gauge singularity, about `2π e^{−4κ}` here.
pub const PAIRING_KAPPA: f64 = 5.0;

/// Phase-space packet `exp(−|z−c|²/(4σ²)) · exp(i k·(q + ½qp))`.
pub fn chirped_packet(grid: &PhaseGrid2D, hbar: f64, center: [f64; 2], sigma: f64, k: f64) -> Result<ClassicalWaveFunction> {
    ClassicalWaveFunction::from_fn(grid.clone(), hbar, |q, p| {
        let r2 = (q - center[0]).powi(2) + (p - center[1]).powi(2);
        C64::from_polar((-r2 / (4.0 * sigma * sigma)).exp(), k * (q + 0.5 * q * p))
    })
}
