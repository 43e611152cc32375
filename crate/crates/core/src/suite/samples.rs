//! [`SymplecticSample`] factories for every representation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::berry::{berry_curvature, stream_vector_field, transport_family, CurvatureBackend};
use crate::catalog;
use crate::classical::Polynomial;
use crate::error::Result;
use crate::grid::{Boundary, ParameterGrid, WeightDensity};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::mixtures::{density_from_family, family_symplectic_form, WaveFamily};
use crate::verify::{Convention, SymplecticSample, Vector};

pub fn complex_to_real(z: impl IntoIterator<Item = C64>) -> Vector {
    z.into_iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn real_to_complex(x: &[f64]) -> Vec<C64> {
    x.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect()
}

/// Column-major real/imaginary flattening of a complex matrix.
pub fn matrix_to_real(m: &CMatrix) -> Vector {
    complex_to_real(m.iter().copied())
}

pub fn real_to_matrix(x: &[f64], rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, &real_to_complex(x))
}

fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> Vector {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Real Frobenius pairing of flattened matrices.
fn frobenius(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `2ħ Im⟨a|b⟩` for flattened complex vectors.
fn omega_flat(hbar: f64, a: &[f64], b: &[f64]) -> f64 {
    let im: f64 = a.chunks_exact(2).zip(b.chunks_exact(2)).map(|(x, y)| x[0] * y[1] - x[1] * y[0]).sum();
    2.0 * hbar * im
}

/// Pure states in `ℂⁿ` under `U(n)`, `J = −iħψψ†`.
pub fn quantum_pure(n: usize, hbar: f64, xi: CMatrix) -> SymplecticSample {
    let xi_flat = matrix_to_real(&xi);
    SymplecticSample {
        name: format!("quantum pure state (n={n})"),
        convention: Convention::Left,
        value_identity: true,
        sample_point: Box::new(move |rng| complex_to_real(linalg::random_vector(rng, n).iter().copied())),
        perturbation: Box::new(move |_, rng| complex_to_real(linalg::random_vector(rng, n).iter().copied())),
        omega: Box::new(move |_, a, b| omega_flat(hbar, a, b)),
        generator: Box::new(move |x| {
            let psi = CVector::from_vec(real_to_complex(x));
            complex_to_real((&xi * psi).iter().copied())
        }),
        momentum: Box::new(move |x| {
            let psi = CVector::from_vec(real_to_complex(x));
            matrix_to_real(&(linalg::outer(&psi, &psi) * C64::new(0.0, -hbar)))
        }),
        xi: xi_flat,
        pairing: Box::new(|m, x| frobenius(m, x)),
    }
}

/// Families on a 1D grid under the node-wise left action of `U(m)`,
/// `J = −iħ ∫ w ψψ†`.
pub fn mixture_family(nodes: usize, m: usize, hbar: f64, xi: CMatrix) -> Result<SymplecticSample> {
    let grid = ParameterGrid::uniform(1, 0.0, 1.0, nodes, Boundary::Open)?;
    let w = WeightDensity::from_fn(grid.clone(), |r| 1.0 + 0.5 * (3.0 * r[0]).sin())?;
    let xi_flat = matrix_to_real(&xi);
    let len = nodes * m;
    let family = {
        let grid = grid.clone();
        move |x: &[f64]| {
            let z = real_to_complex(x);
            let states = z.chunks_exact(m).map(|c| CVector::from_column_slice(c)).collect();
            WaveFamily::new(grid.clone(), states, hbar).expect("consistent family")
        }
    };
    let (f1, f2, f3) = (family.clone(), family.clone(), family);
    let (w1, w2) = (w.clone(), w);
    Ok(SymplecticSample {
        name: format!("wavefunction family ({nodes} nodes, m={m})"),
        convention: Convention::Left,
        value_identity: true,
        sample_point: Box::new(move |rng| gaussian_vector(rng, 2 * len)),
        perturbation: Box::new(move |_, rng| gaussian_vector(rng, 2 * len)),
        omega: Box::new(move |_, a, b| family_symplectic_form(&w1, &f1(a), &f1(b)).expect("same grid")),
        generator: Box::new(move |x| {
            let fam = f2(x).left_multiply(&xi).expect("fiber dimension");
            complex_to_real(fam.states().iter().flat_map(|s| s.iter().copied()))
        }),
        momentum: Box::new(move |x| {
            let rho = density_from_family(&w2, &f3(x)).expect("same grid");
            matrix_to_real(&(rho.entries() * C64::new(0.0, -hbar)))
        }),
        xi: xi_flat,
        pairing: Box::new(|m, x| frobenius(m, x)),
    })
}

/// `W : ℂᵐ → ℂⁿ` under `W ↦ UW`, `J = −iħWW†`.
pub fn uhlmann_left(n: usize, m: usize, hbar: f64, xi: CMatrix) -> SymplecticSample {
    let xi_flat = matrix_to_real(&xi);
    SymplecticSample {
        name: format!("Uhlmann W ({n}×{m})"),
        convention: Convention::Left,
        value_identity: true,
        sample_point: Box::new(move |rng| matrix_to_real(&linalg::random_matrix(rng, n, m))),
        perturbation: Box::new(move |_, rng| matrix_to_real(&linalg::random_matrix(rng, n, m))),
        omega: Box::new(move |_, a, b| omega_flat(hbar, a, b)),
        generator: Box::new(move |x| matrix_to_real(&(&xi * real_to_matrix(x, n, m)))),
        momentum: Box::new(move |x| {
            let w = real_to_matrix(x, n, m);
            matrix_to_real(&(&w * w.adjoint() * C64::new(0.0, -hbar)))
        }),
        xi: xi_flat,
        pairing: Box::new(|m, x| frobenius(m, x)),
    }
}

/// Exponents `(a, b)` with `a + b ≤ degree`, in a fixed order.
pub fn monomial_basis(degree: u32) -> Vec<(u32, u32)> {
    (0..=degree).flat_map(|d| (0..=d).map(move |b| (d - b, b))).collect()
}

/// Weighted point ensemble in one degree of freedom with the collective
/// Hamiltonian action of a polynomial `h`: `⟨J(z), h⟩ = Σ wₖ h(zₖ)`,
/// generator `X_h = (∂ₚh, −∂_qh)`. The state is `(q₁, p₁, …)`; `J` is the
/// moment vector `Σ wₖ qₖᵃ pₖᵇ` over [`monomial_basis`], so the pairing with
/// the coefficient vector of `h` is exact.
pub fn klimontovich(weights: Vec<f64>, h: &Polynomial) -> SymplecticSample {
    let n = weights.len();
    let degree = h.terms.iter().map(|&(_, a, b)| a + b).max().unwrap_or(0);
    let basis = monomial_basis(degree);
    let mut xi = vec![0.0; basis.len()];
    for &(c, a, b) in &h.terms {
        let k = basis.iter().position(|&m| m == (a, b)).expect("basis covers the degree");
        xi[k] += c;
    }
    let (hq, hp) = (h.dq(), h.dp());
    let (w1, w2) = (weights.clone(), weights);
    SymplecticSample {
        name: format!("Klimontovich ensemble ({n} particles)"),
        convention: Convention::Left,
        value_identity: false,
        sample_point: Box::new(move |rng| (0..2 * n).map(|_| rng.random_range(-1.5..1.5)).collect()),
        perturbation: Box::new(move |_, rng| gaussian_vector(rng, 2 * n)),
        omega: Box::new(move |_, a, b| {
            w1.iter()
                .enumerate()
                .map(|(k, w)| w * (a[2 * k] * b[2 * k + 1] - a[2 * k + 1] * b[2 * k]))
                .sum()
        }),
        generator: Box::new(move |x| {
            x.chunks_exact(2).flat_map(|z| [hp.eval(z[0], z[1]), -hq.eval(z[0], z[1])]).collect()
        }),
        momentum: Box::new(move |x| {
            basis
                .iter()
                .map(|&(a, b)| w2.iter().zip(x.chunks_exact(2)).map(|(w, z)| w * z[0].powi(a as i32) * z[1].powi(b as i32)).sum())
                .collect()
        }),
        xi,
        pairing: Box::new(|m, x| frobenius(m, x)),
    }
}

/// Degree-one two-level family on an `n²` torus under volume-preserving
/// reparameterizations, `J = B` (differential backend), `ξ = w⁻¹δγ`.
/// Perturbations are smooth and tangent to the normalization constraint.
pub fn berry_right_leg(n: usize, hbar: f64) -> Result<SymplecticSample> {
    let (fam, w, gamma) = catalog::pairing_setup(n, hbar)?;
    let grid = fam.grid().clone();
    let area = grid.spacing(0) * grid.spacing(1);
    let field = stream_vector_field(&gamma, &w)?;
    let base = complex_to_real(fam.states().iter().flat_map(|s| s.iter().copied()));
    let family = {
        let fam = fam.clone();
        move |x: &[f64]| {
            let z = real_to_complex(x);
            fam.map_nodes(|i, _| CVector::from_column_slice(&z[2 * i..2 * i + 2])).expect("finite family")
        }
    };
    let (f1, f2, f3, f4) = (family.clone(), family.clone(), family.clone(), family);
    let coords: Vec<[f64; 3]> = (0..grid.len()).map(|i| grid.coord(i)).collect();
    Ok(SymplecticSample {
        name: format!("Berry right leg ({n}² torus)"),
        convention: Convention::Right,
        value_identity: false,
        sample_point: Box::new(move |_| base.clone()),
        perturbation: Box::new(move |x, rng| {
            let fam = f1(x);
            let modes = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]];
            let coef: Vec<[C64; 2]> = modes
                .iter()
                .map(|_| {
                    let mut c = || C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                    [c(), c()]
                })
                .collect();
            let out = coords.iter().enumerate().flat_map(|(i, r)| {
                let mut d = CVector::zeros(2);
                for (k, c) in modes.iter().zip(&coef) {
                    let e = C64::from_polar(1.0, k[0] * r[0] + k[1] * r[1]);
                    d[0] += c[0] * e;
                    d[1] += c[1] * e;
                }
                let psi = fam.state(i);
                let along = psi.dotc(&d).re / psi.norm_squared();
                d -= psi * C64::new(along, 0.0);
                [d[0], d[1]]
            });
            complex_to_real(out)
        }),
        omega: Box::new(move |_, a, b| family_symplectic_form(&w, &f2(a), &f2(b)).expect("same grid")),
        generator: Box::new(move |x| {
            let moved = transport_family(&f3(x), &field).expect("same grid");
            complex_to_real(moved.states().iter().flat_map(|s| s.iter().copied()))
        }),
        momentum: Box::new(move |x| {
            berry_curvature(&f4(x), CurvatureBackend::Differential).expect("non-degenerate family").values().to_vec()
        }),
        xi: gamma.values().to_vec(),
        pairing: Box::new(move |m, x| frobenius(m, x) / area),
    })
}
