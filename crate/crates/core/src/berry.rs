//! Berry connection and curvature of parameterized wavefunction families,
//! viewed as the momentum map for volume-preserving reparameterizations.

use crate::cochain::{exterior_derivative, plaquette_orientations, Cochain};
use crate::error::{Error, Result};
use crate::grid::{ParameterGrid, WeightDensity};
use crate::linalg::{CVector, C64};
use crate::mixtures::{family_symplectic_form, WaveFamily};

/// Link phase `ħ Im⟨ψ(tail)|ψ(head)⟩` on every forward edge.
///
/// For normalized states this equals `ħ Im⟨ψ(tail)|ψ(head) − ψ(tail)⟩`, a
/// midpoint-consistent approximation of `∫ ⟨ψ| −iħ dψ⟩` along the edge.
pub fn berry_connection(fam: &WaveFamily) -> Result<Cochain> {
    let grid = fam.grid();
    check_min_nodes(grid)?;
    let n = grid.len();
    let mut a = Cochain::zeros(grid, 1)?;
    for axis in 0..grid.dim() {
        for i in 0..n {
            if let Some(j) = grid.neighbor(i, axis, 1) {
                a.set(axis, i, fam.hbar() * fam.state(i).dotc(fam.state(j)).im);
            }
        }
    }
    Ok(a)
}

fn check_min_nodes(grid: &ParameterGrid) -> Result<()> {
    if grid.axes().iter().any(|a| a.nodes < 4) {
        return Err(Error::InvalidInput("grid too small for Berry quantities".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureBackend {
    /// Exterior derivative of the link connection, evaluated per plaquette in
    /// the gauge where every corner is parallel to the anchor corner.
    Differential,
    /// `ħ arg` of the Wilson loop around each plaquette.
    WilsonLoop,
}

fn corners(grid: &ParameterGrid, i: usize, a: usize, b: usize) -> [usize; 4] {
    let ia = grid.neighbor(i, a, 1).expect("masked plaquette");
    let iab = grid.neighbor(ia, b, 1).expect("masked plaquette");
    let ib = grid.neighbor(i, b, 1).expect("masked plaquette");
    [i, ia, iab, ib]
}

fn unit_phase(z: C64) -> Result<C64> {
    let r = z.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(Error::InvalidInput("vanishing overlap: plaquette phase undefined".into()));
    }
    Ok(z / r)
}

fn plaquette_curvature(states: [&CVector; 4], backend: CurvatureBackend, hbar: f64) -> Result<f64> {
    if states.iter().any(|s| s.norm_squared() == 0.0) {
        return Err(Error::InvalidInput("zero-norm state in Berry curvature".into()));
    }
    match backend {
        CurvatureBackend::WilsonLoop => {
            let mut w = C64::new(1.0, 0.0);
            for k in 0..4 {
                w *= states[k].dotc(states[(k + 1) % 4]);
            }
            if w.norm() == 0.0 {
                return Err(Error::InvalidInput("vanishing Wilson loop".into()));
            }
            Ok(hbar * w.arg())
        }
        CurvatureBackend::Differential => {
            // Corners re-phased so that ⟨ψ₀|ψₖ⟩ > 0; the two links touching the
            // anchor then carry no connection and dA reduces to the far links.
            let g1 = unit_phase(states[0].dotc(states[1]))?;
            let g2 = unit_phase(states[0].dotc(states[2]))?;
            let g3 = unit_phase(states[0].dotc(states[3]))?;
            let l12 = states[1].dotc(states[2]) * g1 * g2.conj();
            let l23 = states[2].dotc(states[3]) * g2 * g3.conj();
            Ok(hbar * (l12.im + l23.im))
        }
    }
}

/// Berry curvature 2-cochain `B = dA`.
pub fn berry_curvature(fam: &WaveFamily, backend: CurvatureBackend) -> Result<Cochain> {
    let grid = fam.grid();
    check_min_nodes(grid)?;
    let n = grid.len();
    let mut b = Cochain::zeros(grid, 2)?;
    for (k, (ax, bx)) in plaquette_orientations(grid.dim()).into_iter().enumerate() {
        for i in 0..n {
            if b.get(k, i).is_none() {
                continue;
            }
            let c = corners(grid, i, ax, bx);
            let states = [fam.state(c[0]), fam.state(c[1]), fam.state(c[2]), fam.state(c[3])];
            b.set(k, i, plaquette_curvature(states, backend, fam.hbar())?);
        }
    }
    Ok(b)
}

/// Sum of a 2-cochain over all plaquettes, or over those selected by `mask`.
pub fn total_flux(b: &Cochain, mask: Option<&[bool]>) -> Result<f64> {
    if b.degree() != 2 {
        return Err(Error::InvalidInput("flux needs a 2-cochain".into()));
    }
    let n = b.grid().len();
    let mut count = 0usize;
    let mut total = 0.0;
    for (c, i, v) in b.cells() {
        let selected = match mask {
            Some(m) => *m.get(c * n + i).ok_or_else(|| {
                Error::InvalidInput("flux mask does not match the cochain layout".into())
            })?,
            None => true,
        };
        if selected {
            total += v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidInput("empty flux region".into()));
    }
    Ok(total)
}

/// Max-norm of `d(∂ₜA) − ∂ₜ(dA)` with centered time differences.
pub fn faraday_residual(series: &[Cochain], dt: f64) -> Result<f64> {
    if series.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "Faraday residual needs at least 3 samples, got {}",
            series.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("time step must be positive".into()));
    }
    let curls = series.iter().map(exterior_derivative).collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0_f64;
    for k in 1..series.len() - 1 {
        let rate = series[k + 1].axpby(0.5 / dt, &series[k - 1], -0.5 / dt)?;
        let curl_rate = curls[k + 1].axpby(0.5 / dt, &curls[k - 1], -0.5 / dt)?;
        worst = worst.max(exterior_derivative(&rate)?.max_diff(&curl_rate)?);
    }
    Ok(worst)
}

/// Vector field sampled at grid nodes, undefined where `mask` is false.
#[derive(Debug, Clone)]
pub struct VolVectorField {
    grid: ParameterGrid,
    values: Vec<[f64; 2]>,
    mask: Vec<bool>,
}

impl VolVectorField {
    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, node: usize) -> Option<[f64; 2]> {
        self.mask[node].then(|| self.values[node])
    }
}

/// Plaquette potentials `γ/area` around node `i`, indexed `[da][db]` with
/// `da, db ∈ {0: behind, 1: ahead}`.
fn surrounding_potentials(gamma: &Cochain, i: usize) -> Option<[[f64; 2]; 2]> {
    let g = gamma.grid();
    let area = g.spacing(0) * g.spacing(1);
    let back0 = g.neighbor(i, 0, -1)?;
    let back1 = g.neighbor(i, 1, -1)?;
    let back01 = g.neighbor(back0, 1, -1)?;
    Some([
        [gamma.get(0, back01)? / area, gamma.get(0, back0)? / area],
        [gamma.get(0, back1)? / area, gamma.get(0, i)? / area],
    ])
}

fn require_2d(grid: &ParameterGrid) -> Result<()> {
    if grid.dim() != 2 {
        return Err(Error::InvalidInput(format!(
            "stream functions are supported on 2D grids, got dimension {}",
            grid.dim()
        )));
    }
    Ok(())
}

/// `ξ = w⁻¹ δγ`: the rotated node gradient of the plaquette potential,
/// `w ξ = (∂₁γ, −∂₀γ)`, divided by the weight.
pub fn stream_vector_field(gamma: &Cochain, w: &WeightDensity) -> Result<VolVectorField> {
    let grid = gamma.grid();
    require_2d(grid)?;
    if gamma.degree() != 2 {
        return Err(Error::InvalidInput("stream function must be a 2-cochain".into()));
    }
    grid.same_as(w.grid())?;
    let n = grid.len();
    let (h0, h1) = (grid.spacing(0), grid.spacing(1));
    let mut values = vec![[0.0; 2]; n];
    let mut mask = vec![false; n];
    for i in 0..n {
        let Some(p) = surrounding_potentials(gamma, i) else { continue };
        let wi = w.values()[i];
        if wi == 0.0 {
            return Err(Error::InvalidInput(format!("weight vanishes at node {i}: ξ = w⁻¹δγ is singular")));
        }
        let d0 = ((p[1][0] + p[1][1]) - (p[0][0] + p[0][1])) / (2.0 * h0);
        let d1 = ((p[0][1] + p[1][1]) - (p[0][0] + p[1][0])) / (2.0 * h1);
        values[i] = [d1 / wi, -d0 / wi];
        mask[i] = true;
    }
    Ok(VolVectorField { grid: grid.clone(), values, mask })
}

/// Max of the plaquette-centred divergence of `w ξ`, scaled by
/// `min h / max|w ξ|` so the result is dimensionless.
pub fn divergence_residual(xi: &VolVectorField, w: &WeightDensity) -> Result<f64> {
    let grid = xi.grid();
    require_2d(grid)?;
    grid.same_as(w.grid())?;
    let (h0, h1) = (grid.spacing(0), grid.spacing(1));
    let flux = |i: usize| xi.get(i).map(|v| [w.values()[i] * v[0], w.values()[i] * v[1]]);
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in 0..grid.len() {
        if let Some(f) = flux(i) {
            scale = scale.max(f[0].abs().max(f[1].abs()));
        }
        let Some(ia) = grid.neighbor(i, 0, 1) else { continue };
        let Some(ib) = grid.neighbor(i, 1, 1) else { continue };
        let Some(iab) = grid.neighbor(ia, 1, 1) else { continue };
        let (Some(f00), Some(f10), Some(f01), Some(f11)) = (flux(i), flux(ia), flux(ib), flux(iab)) else {
            continue;
        };
        let div = ((f10[0] + f11[0]) - (f00[0] + f01[0])) / (2.0 * h0)
            + ((f01[1] + f11[1]) - (f00[1] + f10[1])) / (2.0 * h1);
        worst = worst.max(div.abs());
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(worst * h0.min(h1) / scale)
}

/// Infinitesimal reparameterization `ψ ↦ ι_ξ dψ` with centred differences;
/// zero where `ξ` or a neighbour is undefined.
pub fn transport_family(fam: &WaveFamily, xi: &VolVectorField) -> Result<WaveFamily> {
    fam.grid().same_as(xi.grid())?;
    let grid = fam.grid();
    let zero = CVector::zeros(fam.fiber_dim());
    let states = (0..grid.len())
        .map(|i| {
            let Some(v) = xi.get(i) else { return zero.clone() };
            let mut out = zero.clone();
            for (axis, &va) in v.iter().enumerate() {
                if va == 0.0 {
                    continue;
                }
                let (Some(f), Some(b)) = (grid.neighbor(i, axis, 1), grid.neighbor(i, axis, -1)) else {
                    return zero.clone();
                };
                out += (fam.state(f) - fam.state(b)) * C64::new(va / (2.0 * grid.spacing(axis)), 0.0);
            }
            out
        })
        .collect();
    Ok(fam.with_states(states))
}

/// Both sides of the right-leg momentum map identity
/// `⟨dA, γ⟩ = −½ Ω(ι_ξ dψ, ψ)` with `ξ = w⁻¹δγ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Mean of the stream potential: the harmonic part of `γ` on a periodic
    /// grid, invisible to `ξ` and reported separately.
    pub harmonic_part: f64,
}

impl PairingCheck {
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs.abs().max(self.rhs.abs()).max(f64::MIN_POSITIVE)
    }
}

pub fn right_leg_pairing_check(fam: &WaveFamily, w: &WeightDensity, gamma: &Cochain) -> Result<PairingCheck> {
    let grid = fam.grid();
    require_2d(grid)?;
    grid.same_as(gamma.grid())?;
    grid.same_as(w.grid())?;
    let area = grid.spacing(0) * grid.spacing(1);
    let mut mean = 0.0;
    let mut count = 0usize;
    if !grid.is_periodic() {
        // γ must vanish within two cells of an open boundary
        let peak = gamma.max_abs();
        for (_, i, v) in gamma.cells() {
            if grid.near_boundary(i, 2) && v.abs() > 1e-12 * peak {
                return Err(Error::InvalidInput(
                    "stream function must vanish within two cells of an open boundary".into(),
                ));
            }
        }
    }
    for (_, _, v) in gamma.cells() {
        mean += v / area;
        count += 1;
    }
    let harmonic_part = if grid.is_periodic() && count > 0 { mean / count as f64 } else { 0.0 };

    let b = berry_curvature(fam, CurvatureBackend::Differential)?;
    let lhs: f64 = b
        .cells()
        .map(|(c, i, v)| v * gamma.get(c, i).unwrap_or(0.0) / area)
        .sum();

    let xi = stream_vector_field(gamma, w)?;
    let moved = transport_family(fam, &xi)?;
    let rhs = -0.5 * family_symplectic_form(w, &moved, fam)?;
    Ok(PairingCheck { lhs, rhs, harmonic_part })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use std::f64::consts::PI;

    fn plane_family(n: usize, k: [f64; 2], hbar: f64) -> WaveFamily {
        let g = ParameterGrid::uniform(2, 0.0, 2.0 * PI, n, Boundary::Periodic).unwrap();
        WaveFamily::from_fn(g, hbar, |r| {
            let ph = C64::new(0.0, k[0] * r[0] + k[1] * r[1]).exp();
            CVector::from_vec(vec![ph * 0.6, ph * C64::new(0.0, 0.8)])
        })
        .unwrap()
    }

    #[test]
    fn constant_family_has_no_connection_or_curvature() {
        let fam = plane_family(8, [0.0, 0.0], 1.0);
        assert_eq!(berry_connection(&fam).unwrap().max_abs(), 0.0);
        for be in [CurvatureBackend::Differential, CurvatureBackend::WilsonLoop] {
            assert_eq!(berry_curvature(&fam, be).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn plane_wave_connection_matches_phase_gradient() {
        let hbar = 0.5;
        for n in [32, 64] {
            let fam = plane_family(n, [1.0, 2.0], hbar);
            let h = 2.0 * PI / n as f64;
            let a = berry_connection(&fam).unwrap();
            for (axis, k) in [(0, 1.0), (1, 2.0)] {
                let exact = hbar * k * h;
                let v = a.get(axis, 3).unwrap();
                assert!(((v - exact) / exact).abs() < (k * h).powi(2));
            }
        }
    }

    #[test]
    fn zero_norm_node_is_an_error() {
        let g = ParameterGrid::uniform(2, 0.0, 1.0, 6, Boundary::Periodic).unwrap();
        let fam = WaveFamily::from_fn(g, 1.0, |r| {
            let v = if r[0] == 0.0 && r[1] == 0.0 { 0.0 } else { 1.0 };
            CVector::from_vec(vec![C64::new(v, 0.0), C64::new(0.0, 0.0)])
        })
        .unwrap();
        assert!(berry_curvature(&fam, CurvatureBackend::WilsonLoop).is_err());
        assert!(berry_curvature(&fam, CurvatureBackend::Differential).is_err());
    }

    #[test]
    fn flux_examples() {
        let fam = plane_family(8, [0.0, 0.0], 1.0);
        let b = berry_curvature(&fam, CurvatureBackend::WilsonLoop).unwrap();
        assert_eq!(total_flux(&b, None).unwrap(), 0.0);
        let none = vec![false; b.values().len()];
        assert!(total_flux(&b, Some(&none)).is_err());
    }

    #[test]
    fn faraday_needs_three_samples() {
        let fam = plane_family(8, [1.0, 0.0], 1.0);
        let a = berry_connection(&fam).unwrap();
        assert!(faraday_residual(&[a.clone(), a.clone()], 0.1).is_err());
        assert_eq!(faraday_residual(&[a.clone(), a.clone(), a], 0.1).unwrap(), 0.0);
    }

    #[test]
    fn stream_field_examples() {
        let g = ParameterGrid::uniform(2, 0.0, 1.0, 12, Boundary::Open).unwrap();
        let w = WeightDensity::new(g.clone(), vec![1.0; g.len()]).unwrap();
        let flat = Cochain::from_plaquette_fn(&g, |_| 2.0).unwrap();
        let xi = stream_vector_field(&flat, &w).unwrap();
        assert!(xi.values().iter().all(|v| v[0].abs() < 1e-12 && v[1].abs() < 1e-12));

        let linear = Cochain::from_plaquette_fn(&g, |r| r[0]).unwrap();
        let xi = stream_vector_field(&linear, &w).unwrap();
        for i in 0..g.len() {
            if let Some(v) = xi.get(i) {
                assert!(v[0].abs() < 1e-12);
                assert!((v[1] + 1.0).abs() < 1e-12);
            }
        }
        let zero_w = WeightDensity::new(g.clone(), vec![0.0; g.len()]).unwrap();
        assert!(stream_vector_field(&linear, &zero_w).is_err());
    }
}
