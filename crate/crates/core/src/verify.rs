//! Representation-agnostic momentum-map checks.
//!
//! States, tangent vectors, dual elements and Lie algebra elements are
//! flattened to real vectors; each representation supplies a
//! [`SymplecticSample`] of callables over those vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convergence::fit_slope;
use crate::error::{Error, Result};

/// Slope below which an assessed FD convergence study flags the check.
pub const MIN_SLOPE: f64 = 1.5;
/// Relative Richardson differences below this are rounding, not truncation.
pub const SLOPE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `⟨J, ξ⟩ = +½ ω(ξx, x)`.
    Left,
    /// `⟨J, ξ⟩ = −½ ω(ξx, x)`.
    Right,
}

impl Convention {
    /// Coefficient in the value identity.
    pub fn value_sign(self) -> f64 {
        match self {
            Convention::Left => 0.5,
            Convention::Right => -0.5,
        }
    }

    /// Coefficient in `d⟨J, ξ⟩·δ = σ' ω(ξx, δ)`.
    pub fn derivative_sign(self) -> f64 {
        2.0 * self.value_sign()
    }
}

pub type Vector = Vec<f64>;
type Sampler = Box<dyn Fn(&mut ChaCha8Rng) -> Vector + Send + Sync>;
type Perturber = Box<dyn Fn(&[f64], &mut ChaCha8Rng) -> Vector + Send + Sync>;
type Form = Box<dyn Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync>;
pub type Map = Box<dyn Fn(&[f64]) -> Vector + Send + Sync>;
type Pairing = Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

pub struct SymplecticSample {
    pub name: String,
    pub convention: Convention,
    /// Whether `⟨J, ξ⟩ = σ ω(ξx, x)` holds (linear actions).
    pub value_identity: bool,
    pub sample_point: Sampler,
    pub perturbation: Perturber,
    /// `ω_x(a, b)`.
    pub omega: Form,
    /// `ξ(x)`.
    pub generator: Map,
    pub momentum: Map,
    pub xi: Vector,
    pub pairing: Pairing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Corruption {
    SignFlip,
    /// `J(x) + scale·‖J(x)‖·M x` for a fixed random matrix `M`.
    Perturb { scale: f64, seed: u64 },
}

impl Corruption {
    pub fn label(&self) -> &'static str {
        match self {
            Corruption::SignFlip => "sign-flip",
            Corruption::Perturb { .. } => "perturbed",
        }
    }
}

/// Wraps a momentum map with the given corruption.
pub fn corrupt(inner: Map, c: Corruption) -> Map {
    match c {
        Corruption::SignFlip => Box::new(move |x| inner(x).into_iter().map(|v| -v).collect()),
        Corruption::Perturb { scale, seed } => Box::new(move |x| {
            let j = inner(x);
            let norm = j.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            j.into_iter()
                .map(|v| {
                    let mx: f64 = x.iter().map(|xi| xi * rng.random_range(-1.0..1.0)).sum();
                    v + scale * norm * mx / (x.len() as f64).sqrt()
                })
                .collect()
        }),
    }
}

impl SymplecticSample {
    /// Same sample with a deliberately wrong momentum map.
    pub fn corrupted(self, c: Corruption) -> SymplecticSample {
        let name = format!("{} [{} control]", self.name, c.label());
        SymplecticSample { name, momentum: corrupt(self.momentum, c), ..self }
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.pairing)(&(self.momentum)(x), &self.xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub seed: u64,
    /// Per-sample residual (finest FD step for derivative checks).
    pub residuals: Vec<f64>,
    pub fd_steps: Vec<f64>,
    /// Max over samples of the relative residual at each FD step.
    pub step_residuals: Vec<f64>,
    /// Order fitted to Richardson differences of the FD derivative.
    pub slope: Option<f64>,
    /// Max residual of the value identity, for [`value_identity_check`].
    pub value_residual: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub detail: String,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// Report for a scalar diagnostic compared against a tolerance.
    pub fn scalar(name: impl Into<String>, seed: u64, residual: f64, tolerance: f64) -> Self {
        let ok = residual.is_finite() && residual <= tolerance;
        CheckReport {
            name: name.into(),
            seed,
            residuals: vec![residual],
            fd_steps: vec![],
            step_residuals: vec![],
            slope: None,
            value_residual: None,
            tolerance,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            detail: format!("residual {residual:.3e} vs tolerance {tolerance:.1e}"),
        }
    }

    /// Report for a measured convergence slope against `expected ± window`.
    pub fn slope_check(name: impl Into<String>, seed: u64, errors: &[f64], hs: &[f64], expected: f64, window: f64, finest_tol: Option<f64>) -> Self {
        let fit = fit_slope(hs, errors);
        let finest = errors.last().copied().unwrap_or(f64::NAN);
        let (ok, detail) = match &fit {
            Ok(s) => {
                let in_window = (*s - expected).abs() <= window;
                let small = finest_tol.map_or(true, |t| finest <= t);
                (
                    in_window && small,
                    format!("slope {s:.3} (expected {expected} ± {window}); errors {}", fmt_list(errors)),
                )
            }
            Err(e) => (false, format!("no slope: {e}; errors {}", fmt_list(errors))),
        };
        CheckReport {
            name: name.into(),
            seed,
            residuals: errors.to_vec(),
            fd_steps: hs.to_vec(),
            step_residuals: vec![],
            slope: fit.as_ref().ok().copied(),
            value_residual: None,
            tolerance: finest_tol.unwrap_or(f64::INFINITY),
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            detail,
        }
    }
}

/// Per-sample generator seeded deterministically from the master seed.
pub fn sample_rng(master: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(k + 1);
    rng
}

pub(crate) fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn axpy(x: &[f64], s: f64, d: &[f64]) -> Vector {
    x.iter().zip(d).map(|(a, b)| a + s * b).collect()
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Verifies `d⟨J, ξ⟩(x)·δ = σ' ω(ξx, δ)` by centered differences at each
/// step in `fd_steps`, plus the value identity for linear actions.
pub fn hamiltonian_action_check(s: &SymplecticSample, samples: usize, fd_steps: &[f64], tol: f64, seed: u64) -> Result<CheckReport> {
    if fd_steps.is_empty() || fd_steps.iter().any(|e| !(*e > 0.0)) || fd_steps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("fd_steps must be positive and decreasing".into()));
    }
    let sign = s.convention.derivative_sign();
    let mut residuals = Vec::with_capacity(samples);
    let mut step_residuals = vec![0.0f64; fd_steps.len()];
    let mut richardson = vec![0.0f64; fd_steps.len().saturating_sub(1)];
    let mut structure = Vec::new();
    for k in 0..samples {
        let mut rng = sample_rng(seed, k as u64);
        let x = (s.sample_point)(&mut rng);
        let delta = (s.perturbation)(&x, &mut rng);
        let other = (s.perturbation)(&x, &mut rng);
        let gx = (s.generator)(&x);
        let w_ab = (s.omega)(&x, &delta, &other);
        let w_ba = (s.omega)(&x, &other, &delta);
        if (w_ab + w_ba).abs() > 1e-10 * (w_ab.abs() + 1.0) {
            structure.push(format!("ω not antisymmetric on sample {k}: {w_ab:.3e} vs {w_ba:.3e}"));
        }
        let (j1, j2) = ((s.momentum)(&x), (s.momentum)(&delta));
        let sum: Vector = j1.iter().zip(&j2).map(|(a, b)| a + b).collect();
        let lin = (s.pairing)(&sum, &s.xi) - (s.pairing)(&j1, &s.xi) - (s.pairing)(&j2, &s.xi);
        let pscale = (s.pairing)(&j1, &s.xi).abs() + (s.pairing)(&j2, &s.xi).abs() + 1.0;
        if lin.abs() > 1e-10 * pscale {
            structure.push(format!("pairing not additive on sample {k}: defect {lin:.3e}"));
        }
        let rhs = finite(sign * (s.omega)(&x, &gx, &delta), "symplectic form")?;
        let denom = rhs.abs().max(f64::MIN_POSITIVE);
        let mut fds = Vec::with_capacity(fd_steps.len());
        for (i, &eps) in fd_steps.iter().enumerate() {
            let fp = s.value(&axpy(&x, eps, &delta));
            let fm = s.value(&axpy(&x, -eps, &delta));
            let fd = finite((fp - fm) / (2.0 * eps), "momentum pairing")?;
            step_residuals[i] = step_residuals[i].max((fd - rhs).abs() / denom);
            fds.push(fd);
        }
        for i in 0..richardson.len() {
            richardson[i] = richardson[i].max((fds[i] - fds[i + 1]).abs() / denom);
        }
        residuals.push((fds[fds.len() - 1] - rhs).abs() / denom);
    }
    let slope = if richardson.len() >= 2 && richardson.iter().all(|d| *d > SLOPE_FLOOR) {
        fit_slope(&fd_steps[..richardson.len()], &richardson).ok()
    } else {
        None
    };
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    let mut fail = Vec::new();
    if !(worst <= tol) {
        fail.push(format!("residual {worst:.3e} > {tol:.1e}"));
    }
    if let Some(sl) = slope {
        if sl < MIN_SLOPE {
            fail.push(format!("FD slope {sl:.2} < {MIN_SLOPE}"));
        }
    }
    fail.extend(structure);
    let detail = if fail.is_empty() {
        format!("max residual {worst:.3e}, slope {}", slope.map_or("n/a (below rounding floor)".into(), |v| format!("{v:.2}")))
    } else {
        fail.join("; ")
    };
    Ok(CheckReport {
        name: s.name.clone(),
        seed,
        residuals,
        fd_steps: fd_steps.to_vec(),
        step_residuals,
        slope,
        value_residual: None,
        tolerance: tol,
        verdict: if fail.is_empty() { Verdict::Pass } else { Verdict::Fail },
        detail,
    })
}

/// Verifies `⟨J(x), ξ⟩ = σ ω(ξx, x)` on sampled points (linear actions only).
pub fn value_identity_check(s: &SymplecticSample, samples: usize, tol: f64, seed: u64) -> Result<CheckReport> {
    if !s.value_identity {
        return Err(Error::InvalidInput(format!("{}: value identity does not apply to this action", s.name)));
    }
    let mut residuals = Vec::with_capacity(samples);
    for k in 0..samples {
        let mut rng = sample_rng(seed, k as u64);
        let x = (s.sample_point)(&mut rng);
        let lhs = finite(s.value(&x), "momentum pairing")?;
        let rhs = finite(s.convention.value_sign() * (s.omega)(&x, &(s.generator)(&x), &x), "symplectic form")?;
        residuals.push((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));
    }
    let max = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(CheckReport {
        name: format!("{} (value identity)", s.name),
        seed,
        residuals,
        fd_steps: vec![],
        step_residuals: vec![],
        slope: None,
        value_residual: Some(max),
        tolerance: tol,
        verdict: if max <= tol { Verdict::Pass } else { Verdict::Fail },
        detail: format!("max relative residual {max:.3e}"),
    })
}

/// `max ‖J(g·x) − Ad*_{g⁻¹} J(x)‖∞ / ‖J(x)‖∞` over group elements and
/// sampled states.
#[allow(clippy::too_many_arguments)]
pub fn equivariance_check<G>(
    name: &str,
    j: &dyn Fn(&[f64]) -> Vector,
    group: &[G],
    samples: usize,
    sample_point: &dyn Fn(&mut ChaCha8Rng) -> Vector,
    push: &dyn Fn(&G, &[f64]) -> Vector,
    coadjoint: &dyn Fn(&G, &[f64]) -> Vector,
    tol: f64,
    seed: u64,
) -> Result<CheckReport> {
    let mut residuals = Vec::with_capacity(samples);
    for k in 0..samples {
        let mut rng = sample_rng(seed, k as u64);
        let x = sample_point(&mut rng);
        let jx = j(&x);
        let scale = jx.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for g in group {
            let lhs = j(&push(g, &x));
            let rhs = coadjoint(g, &jx);
            if lhs.len() != rhs.len() {
                return Err(Error::DimensionMismatch { expected: rhs.len(), found: lhs.len() });
            }
            let d = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(finite(d, "equivariance")? / scale);
        }
        residuals.push(worst);
    }
    let max = residuals.iter().cloned().fold(0.0, f64::max);
    let ok = max <= tol;
    Ok(CheckReport {
        name: name.into(),
        seed,
        residuals,
        fd_steps: vec![],
        step_residuals: vec![],
        slope: None,
        value_residual: None,
        tolerance: tol,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail: format!("max relative deviation {max:.3e} over {} group elements", group.len()),
    })
}

/// `max_t |⟨J(x(t)), ξ⟩ − ⟨J(x(0)), ξ⟩|`.
pub fn noether_check<X>(name: &str, trajectory: &[X], j_pairing: &dyn Fn(&X) -> f64, tol: f64, seed: u64) -> Result<CheckReport> {
    let series: Vec<f64> = trajectory.iter().map(j_pairing).collect();
    let Some(&s0) = series.first() else {
        return Err(Error::InvalidInput("empty trajectory".into()));
    };
    let residuals: Vec<f64> = series.iter().map(|s| (s - s0).abs()).collect();
    let max = residuals.iter().cloned().fold(0.0, f64::max);
    if !max.is_finite() {
        return Err(Error::NonFinite("Noether series".into()));
    }
    Ok(CheckReport {
        name: name.into(),
        seed,
        residuals,
        fd_steps: vec![],
        step_residuals: vec![],
        slope: None,
        value_residual: None,
        tolerance: tol,
        verdict: if max <= tol { Verdict::Pass } else { Verdict::Fail },
        detail: format!("max deviation {max:.3e} from initial value {s0:.6e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `ℝ²` with `ω = dq∧dp`, rotation generator `ξ(q, p) = (p, −q)` and
    /// `J = (q² + p²)/2`.
    fn planar() -> SymplecticSample {
        SymplecticSample {
            name: "planar rotation".into(),
            convention: Convention::Left,
            value_identity: true,
            sample_point: Box::new(|rng| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]),
            perturbation: Box::new(|_, rng| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]),
            omega: Box::new(|_, a, b| a[0] * b[1] - a[1] * b[0]),
            generator: Box::new(|x| vec![x[1], -x[0]]),
            momentum: Box::new(|x| vec![0.5 * (x[0] * x[0] + x[1] * x[1])]),
            xi: vec![1.0],
            pairing: Box::new(|m, x| m[0] * x[0]),
        }
    }

    #[test]
    fn planar_passes_and_controls_fail() {
        let steps = [1e-3, 5e-4, 2.5e-4];
        let r = hamiltonian_action_check(&planar(), 8, &steps, 1e-8, 7).unwrap();
        assert!(r.passed(), "{}", r.detail);
        assert!(r.slope.is_none());
        assert!(value_identity_check(&planar(), 8, 1e-14, 7).unwrap().passed());
        assert!(!value_identity_check(&planar().corrupted(Corruption::SignFlip), 8, 1e-14, 7).unwrap().passed());
        let c = hamiltonian_action_check(&planar().corrupted(Corruption::SignFlip), 8, &steps, 1e-8, 7).unwrap();
        assert!(!c.passed());
        let c = hamiltonian_action_check(&planar().corrupted(Corruption::Perturb { scale: 1e-2, seed: 1 }), 8, &steps, 1e-8, 7).unwrap();
        assert!(!c.passed());
    }

    #[test]
    fn wrong_convention_fails() {
        let mut s = planar();
        s.convention = Convention::Right;
        let r = hamiltonian_action_check(&s, 4, &[1e-3, 5e-4, 2.5e-4], 1e-8, 1).unwrap();
        assert!(!r.passed());
        assert!(r.max_residual() > 1.0);
    }

    #[test]
    fn nonlinear_map_shows_second_order() {
        let mut s = planar();
        s.value_identity = false;
        s.momentum = Box::new(|x| vec![x[0].sin() + x[1].powi(3)]);
        s.generator = Box::new(|x| vec![3.0 * x[1] * x[1], -x[0].cos()]);
        let r = hamiltonian_action_check(&s, 4, &[4e-2, 2e-2, 1e-2], 1e-2, 3).unwrap();
        let slope = r.slope.unwrap();
        assert!((slope - 2.0).abs() < 0.2, "{slope}");
    }

    #[test]
    fn equivariance_and_noether() {
        let j = |x: &[f64]| vec![0.5 * (x[0] * x[0] + x[1] * x[1])];
        let rot = |t: &f64, x: &[f64]| vec![x[0] * t.cos() + x[1] * t.sin(), -x[0] * t.sin() + x[1] * t.cos()];
        let id = |_: &f64, m: &[f64]| m.to_vec();
        let sp = |rng: &mut ChaCha8Rng| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let r = equivariance_check("rot", &j, &[0.0, 0.4, 2.0], 5, &sp, &rot, &id, 1e-14, 0).unwrap();
        assert!(r.passed());
        let traj = [1.0, 1.0 + 1e-13, 1.0];
        assert!(noether_check("n", &traj, &|x: &f64| *x, 1e-12, 0).unwrap().passed());
        assert!(!noether_check("n", &[1.0, 1.1], &|x: &f64| *x, 1e-12, 0).unwrap().passed());
    }
}
