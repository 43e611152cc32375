//! Real cochains on uniform parameter grids and the discrete exterior
//! derivative.
//!
//! A `k`-cochain stores one value per oriented `k`-cell: nodes (`k = 0`),
//! forward edges `i → i + e_a` (`k = 1`), and plaquettes spanned by
//! `e_a, e_b` with `a < b` anchored at their lowest corner (`k = 2`). Cells
//! that would cross an open boundary are masked out.

use crate::error::{Error, Result};
use crate::grid::ParameterGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    grid: ParameterGrid,
    degree: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

/// Axis pairs `(a, b)`, `a < b`, in storage order.
pub fn plaquette_orientations(dim: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..dim {
        for b in a + 1..dim {
            out.push((a, b));
        }
    }
    out
}

pub fn components(dim: usize, degree: usize) -> usize {
    match degree {
        0 => 1,
        1 => dim,
        2 => dim * (dim.saturating_sub(1)) / 2,
        _ => 0,
    }
}

impl Cochain {
    /// Zero cochain with the natural boundary mask of the grid.
    pub fn zeros(grid: &ParameterGrid, degree: usize) -> Result<Self> {
        if degree > 2 {
            return Err(Error::InvalidInput(format!("no storage for {degree}-cochains")));
        }
        let n = grid.len();
        let ncomp = components(grid.dim(), degree);
        let mut mask = vec![true; n * ncomp];
        for c in 0..ncomp {
            for node in 0..n {
                mask[c * n + node] = match degree {
                    0 => true,
                    1 => grid.neighbor(node, c, 1).is_some(),
                    _ => {
                        let (a, b) = plaquette_orientations(grid.dim())[c];
                        grid.neighbor(node, a, 1)
                            .and_then(|x| grid.neighbor(x, b, 1))
                            .is_some()
                    }
                };
            }
        }
        Ok(Self { grid: grid.clone(), degree, values: vec![0.0; n * ncomp], mask })
    }

    pub fn from_node_fn(grid: &ParameterGrid, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let mut c = Self::zeros(grid, 0)?;
        for i in 0..grid.len() {
            c.values[i] = f(grid.coord(i));
        }
        Ok(c)
    }

    /// 2-cochain obtained by integrating a smooth density over each
    /// plaquette with the midpoint rule (`f(center) · cell area`).
    pub fn from_plaquette_fn(grid: &ParameterGrid, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let mut c = Self::zeros(grid, 2)?;
        let orient = plaquette_orientations(grid.dim());
        let n = grid.len();
        for (k, &(a, b)) in orient.iter().enumerate() {
            let ha = grid.spacing(a);
            let hb = grid.spacing(b);
            for i in 0..n {
                if c.mask[k * n + i] {
                    let mut x = grid.coord(i);
                    x[a] += 0.5 * ha;
                    x[b] += 0.5 * hb;
                    c.values[k * n + i] = f(x) * ha * hb;
                }
            }
        }
        Ok(c)
    }

    /// Constant value on every edge along `axis`.
    pub fn constant_one_form(grid: &ParameterGrid, axis: usize, value: f64) -> Result<Self> {
        let mut c = Self::zeros(grid, 1)?;
        let n = grid.len();
        for i in 0..n {
            if c.mask[axis * n + i] {
                c.values[axis * n + i] = value;
            }
        }
        Ok(c)
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_components(&self) -> usize {
        components(self.grid.dim(), self.degree)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, component: usize, node: usize) -> Option<f64> {
        let k = component * self.grid.len() + node;
        self.mask[k].then(|| self.values[k])
    }

    pub fn set(&mut self, component: usize, node: usize, value: f64) {
        let k = component * self.grid.len() + node;
        if self.mask[k] {
            self.values[k] = value;
        }
    }

    /// Iterator over `(component, node, value)` of defined cells.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.grid.len();
        self.values
            .iter()
            .zip(&self.mask)
            .enumerate()
            .filter(|(_, (_, m))| **m)
            .map(move |(k, (v, _))| (k / n, k % n, *v))
    }

    pub fn max_abs(&self) -> f64 {
        self.cells().fold(0.0, |m, (_, _, v)| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.cells().map(|(_, _, v)| v).sum()
    }

    fn check_like(&self, other: &Cochain) -> Result<()> {
        self.grid.same_as(&other.grid)?;
        if self.degree != other.degree {
            return Err(Error::InvalidInput(format!(
                "degree {} vs {}",
                self.degree, other.degree
            )));
        }
        Ok(())
    }

    /// `a·self + b·other` on the common mask.
    pub fn axpby(&self, a: f64, other: &Cochain, b: f64) -> Result<Cochain> {
        self.check_like(other)?;
        let mut out = self.clone();
        for k in 0..out.values.len() {
            out.mask[k] = self.mask[k] && other.mask[k];
            out.values[k] = if out.mask[k] { a * self.values[k] + b * other.values[k] } else { 0.0 };
        }
        Ok(out)
    }

    pub fn scale(&self, a: f64) -> Cochain {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    /// Max-norm distance on the common mask.
    pub fn max_diff(&self, other: &Cochain) -> Result<f64> {
        Ok(self.axpby(1.0, other, -1.0)?.max_abs())
    }

    /// Periodic relabeling `c'(i) = c(i + steps·e_axis)`.
    pub fn shifted(&self, axis: usize, steps: isize) -> Result<Cochain> {
        if !self.grid.is_periodic() {
            return Err(Error::InvalidInput("shifts are defined on periodic grids only".into()));
        }
        let n = self.grid.len();
        let mut out = self.clone();
        for c in 0..self.n_components() {
            for i in 0..n {
                let j = self.grid.neighbor(i, axis, steps).expect("periodic");
                out.values[c * n + i] = self.values[c * n + j];
            }
        }
        Ok(out)
    }

    /// Sum of a 1-cochain along the closed loop through `node` parallel to
    /// `axis` (periodic grids).
    pub fn holonomy(&self, axis: usize, node: usize) -> Result<f64> {
        if self.degree != 1 || !self.grid.is_periodic() {
            return Err(Error::InvalidInput("holonomy needs a 1-cochain on a periodic grid".into()));
        }
        let n = self.grid.len();
        let mut total = 0.0;
        let mut i = node;
        for _ in 0..self.grid.axes()[axis].nodes {
            total += self.values[axis * n + i];
            i = self.grid.neighbor(i, axis, 1).expect("periodic");
        }
        Ok(total)
    }
}

/// Forward-difference coboundary `d: Cᵏ → Cᵏ⁺¹` for `k ≤ 1`.
pub fn exterior_derivative(c: &Cochain) -> Result<Cochain> {
    let grid = &c.grid;
    let n = grid.len();
    match c.degree {
        0 => {
            let mut out = Cochain::zeros(grid, 1)?;
            for a in 0..grid.dim() {
                for i in 0..n {
                    if let Some(j) = grid.neighbor(i, a, 1) {
                        out.values[a * n + i] = c.values[j] - c.values[i];
                    }
                }
            }
            Ok(out)
        }
        1 => {
            let mut out = Cochain::zeros(grid, 2)?;
            for (k, (a, b)) in plaquette_orientations(grid.dim()).into_iter().enumerate() {
                for i in 0..n {
                    if !out.mask[k * n + i] {
                        continue;
                    }
                    let ia = grid.neighbor(i, a, 1).expect("masked");
                    let ib = grid.neighbor(i, b, 1).expect("masked");
                    out.values[k * n + i] = (c.values[a * n + i] + c.values[b * n + ia])
                        - (c.values[a * n + ib] + c.values[b * n + i]);
                }
            }
            Ok(out)
        }
        k => Err(Error::InvalidInput(format!(
            "exterior derivative of a {k}-cochain is not stored on grids of dimension ≤ 3"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_zero_form_has_zero_derivative() {
        let g = ParameterGrid::uniform(2, 0.0, 1.0, 6, Boundary::Open).unwrap();
        let c = Cochain::from_node_fn(&g, |_| 3.5).unwrap();
        assert_eq!(exterior_derivative(&c).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn dd_vanishes_on_random_zero_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for boundary in [Boundary::Open, Boundary::Periodic] {
            for dim in 1..=3 {
                let g = ParameterGrid::uniform(dim, 0.0, 1.0, 5, boundary).unwrap();
                let mut c = Cochain::zeros(&g, 0).unwrap();
                for i in 0..g.len() {
                    c.set(0, i, rng.random_range(-1.0..1.0));
                }
                let d = exterior_derivative(&c).unwrap();
                let dd = exterior_derivative(&d).unwrap();
                assert!(dd.max_abs() <= 1e-12 * d.max_abs().max(1.0));
                assert!(exterior_derivative(&dd).is_err());
            }
        }
    }

    #[test]
    fn closed_non_exact_one_form_keeps_holonomy() {
        let g = ParameterGrid::uniform(2, 0.0, 1.0, 8, Boundary::Periodic).unwrap();
        let a = Cochain::constant_one_form(&g, 0, 1.0 / 8.0).unwrap();
        let da = exterior_derivative(&a).unwrap();
        assert_eq!(da.max_abs(), 0.0);
        assert!((a.holonomy(0, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((a.holonomy(0, 13).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(a.holonomy(1, 0).unwrap(), 0.0);
    }

    #[test]
    fn open_grid_masks_boundary_cells() {
        let g = ParameterGrid::uniform(2, 0.0, 1.0, 4, Boundary::Open).unwrap();
        let a = Cochain::zeros(&g, 1).unwrap();
        assert_eq!(a.cells().count(), 2 * 4 * 3);
        let b = Cochain::zeros(&g, 2).unwrap();
        assert_eq!(b.cells().count(), 9);
    }
}
