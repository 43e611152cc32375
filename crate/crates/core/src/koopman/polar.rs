//! Residuals of the polar form `ψ = √D e^{iS/ħ}` along a KvH trajectory.

use super::grid::ClassicalWaveFunction;
use super::ops::{hamiltonian_gradients, lagrangian_field, Scheme};
use crate::classical::HamiltonianSpec;
use crate::error::{Error, Result};
use std::f64::consts::{PI, TAU};

/// Relative amplitude below which the phase is not evaluated.
pub const PHASE_MASK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarResiduals {
    /// `max |∂ₜS − {H, S} − L|`.
    pub res_s: f64,
    /// `max |∂ₜD − {H, D}|`.
    pub res_d: f64,
    pub masked_nodes: usize,
}

fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

/// Residuals at every interior snapshot of a trajectory with uniform
/// spacing `dt`. Spatial derivatives of `S` are taken as
/// `ħ Im(ψ* ∇ψ) / |ψ|²`, so no spatial unwrapping is needed; time
/// differences of the phase are unwrapped per node.
pub fn polar_residuals(traj: &[ClassicalWaveFunction], h: &HamiltonianSpec, dt: f64, scheme: Scheme) -> Result<PolarResiduals> {
    if traj.len() < 3 {
        return Err(Error::InvalidInput(format!("polar residuals need ≥ 3 snapshots, got {}", traj.len())));
    }
    let grid = traj[0].grid();
    for t in traj {
        grid.same_as(t.grid())?;
    }
    let hbar = traj[0].hbar();
    let (hq, hp) = hamiltonian_gradients(h, grid);
    let lag = lagrangian_field(h, grid, scheme.convention);
    let sb = scheme.convention.sb();
    let margin = 2 * scheme.order.reach();
    let (mut res_s, mut res_d, mut masked) = (0.0f64, 0.0f64, 0usize);
    for n in 1..traj.len() - 1 {
        let (prev, cur, next) = (&traj[n - 1], &traj[n], &traj[n + 1]);
        let d = cur.modulus_sq();
        let floor = PHASE_MASK * d.iter().cloned().fold(0.0, f64::max).sqrt();
        let dq = grid.derivative(cur.values(), 0, scheme.order);
        let dp = grid.derivative(cur.values(), 1, scheme.order);
        let d_q = grid.derivative(&d, 0, scheme.order);
        let d_p = grid.derivative(&d, 1, scheme.order);
        for k in 0..grid.len() {
            let amp = [prev, cur, next].iter().map(|w| w.values()[k].norm()).fold(f64::INFINITY, f64::min);
            if amp <= floor || grid.near_boundary(k, margin) {
                continue;
            }
            masked += 1;
            let psi = cur.values()[k];
            let s_q = hbar * (psi.conj() * dq[k]).im / d[k];
            let s_p = hbar * (psi.conj() * dp[k]).im / d[k];
            let ds_dt = hbar * wrap_angle(next.values()[k].arg() - prev.values()[k].arg()) / (2.0 * dt);
            let dd_dt = (next.values()[k].norm_sqr() - prev.values()[k].norm_sqr()) / (2.0 * dt);
            let br_s = sb * (hq[k] * s_p - hp[k] * s_q);
            let br_d = sb * (hq[k] * d_p[k] - hp[k] * d_q[k]);
            res_s = res_s.max((ds_dt - br_s - lag[k]).abs());
            res_d = res_d.max((dd_dt - br_d).abs());
        }
    }
    if masked == 0 {
        return Err(Error::InvalidInput("phase mask is empty".into()));
    }
    Ok(PolarResiduals { res_s, res_d, masked_nodes: masked })
}
