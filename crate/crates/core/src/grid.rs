//! Uniform parameter grids, weight densities and the quadrature rules used
//! to integrate over them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

/// Uniform grid in `n ∈ {1, 2, 3}` parameter dimensions.
///
/// Periodic axes carry `N` nodes at `lo + i h` with `h = (hi - lo) / N`;
/// open axes include both end points, `h = (hi - lo) / (N - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    axes: Vec<Axis>,
    boundary: Boundary,
}

pub const MIN_NODES: usize = 4;

impl ParameterGrid {
    pub fn new(axes: Vec<Axis>, boundary: Boundary) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidInput(format!(
                "parameter dimension must be 1, 2 or 3, got {}",
                axes.len()
            )));
        }
        for (k, a) in axes.iter().enumerate() {
            if a.nodes < MIN_NODES {
                return Err(Error::InvalidInput(format!(
                    "axis {k} has {} nodes, need at least {MIN_NODES}",
                    a.nodes
                )));
            }
            if !(a.lo.is_finite() && a.hi.is_finite() && a.hi > a.lo) {
                return Err(Error::InvalidInput(format!("axis {k} has an empty extent")));
            }
        }
        Ok(Self { axes, boundary })
    }

    /// Square/cubic grid with identical axes.
    pub fn uniform(dim: usize, lo: f64, hi: f64, nodes: usize, boundary: Boundary) -> Result<Self> {
        Self::new(vec![Axis { lo, hi, nodes }; dim], boundary)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.nodes).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let a = &self.axes[axis];
        match self.boundary {
            Boundary::Periodic => (a.hi - a.lo) / a.nodes as f64,
            Boundary::Open => (a.hi - a.lo) / (a.nodes - 1) as f64,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).product()
    }

    /// Flat index, first axis slowest.
    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, a)| acc * a.nodes + i)
    }

    pub fn multi(&self, mut flat: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for k in (0..self.dim()).rev() {
            let n = self.axes[k].nodes;
            out[k] = flat % n;
            flat /= n;
        }
        out
    }

    pub fn coord(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi(flat);
        let mut out = [0.0; 3];
        for k in 0..self.dim() {
            out[k] = self.axes[k].lo + idx[k] as f64 * self.spacing(k);
        }
        out
    }

    /// Neighbour `steps` nodes along `axis`, wrapping on periodic grids.
    pub fn neighbor(&self, flat: usize, axis: usize, steps: isize) -> Option<usize> {
        let mut idx = self.multi(flat);
        let n = self.axes[axis].nodes as isize;
        let j = idx[axis] as isize + steps;
        let j = match self.boundary {
            Boundary::Periodic => j.rem_euclid(n),
            Boundary::Open if (0..n).contains(&j) => j,
            Boundary::Open => return None,
        };
        idx[axis] = j as usize;
        Some(self.flat(&idx[..self.dim()]))
    }

    /// Quadrature weight of each node: plain Riemann sum on periodic grids,
    /// composite trapezoid on open ones.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let vol = self.cell_volume();
        (0..self.len())
            .map(|f| {
                let idx = self.multi(f);
                let mut w = vol;
                if self.boundary == Boundary::Open {
                    for k in 0..self.dim() {
                        if idx[k] == 0 || idx[k] + 1 == self.axes[k].nodes {
                            w *= 0.5;
                        }
                    }
                }
                w
            })
            .collect()
    }

    /// Nodes within one cell of an open boundary.
    pub fn near_boundary(&self, flat: usize, cells: usize) -> bool {
        if self.boundary == Boundary::Periodic {
            return false;
        }
        let idx = self.multi(flat);
        (0..self.dim()).any(|k| idx[k] <= cells || idx[k] + 1 + cells >= self.axes[k].nodes)
    }

    pub fn same_as(&self, other: &ParameterGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch("objects live on different parameter grids".into()))
        }
    }
}

/// Non-negative weight `w(r)` sampled at grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDensity {
    grid: ParameterGrid,
    values: Vec<f64>,
    total: f64,
}

/// Boundary-mass level above which a truncation warning is logged.
pub const BOUNDARY_MASS_TOL: f64 = 1e-8;

impl WeightDensity {
    pub fn new(grid: ParameterGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!("weight density must be non-negative, found {v}")));
        }
        let total = grid
            .quadrature_weights()
            .iter()
            .zip(&values)
            .map(|(q, w)| q * w)
            .sum();
        let out = Self { grid, values, total };
        let leak = out.boundary_mass();
        if leak > BOUNDARY_MASS_TOL * out.total.max(f64::MIN_POSITIVE) {
            log::warn!("weight mass {leak:.3e} within one cell of an open boundary");
        }
        Ok(out)
    }

    pub fn from_fn(grid: ParameterGrid, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.coord(i))).collect();
        Self::new(grid, values)
    }

    /// Uniform weight normalized to unit total mass.
    pub fn uniform_probability(grid: ParameterGrid) -> Result<Self> {
        let q: f64 = grid.quadrature_weights().iter().sum();
        let values = vec![1.0 / q; grid.len()];
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∫ w dⁿr` under the grid's quadrature rule.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Node weights `w(r_i) * q_i` used by every quadrature over this density.
    pub fn quadrature(&self) -> Vec<f64> {
        self.grid
            .quadrature_weights()
            .iter()
            .zip(&self.values)
            .map(|(q, w)| q * w)
            .collect()
    }

    /// Weight mass carried by nodes within one cell of an open boundary.
    pub fn boundary_mass(&self) -> f64 {
        let q = self.grid.quadrature_weights();
        (0..self.grid.len())
            .filter(|&i| self.grid.near_boundary(i, 1))
            .map(|i| q[i] * self.values[i])
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| v * factor).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_grids_and_bad_dims() {
        assert!(ParameterGrid::uniform(2, 0.0, 1.0, 3, Boundary::Open).is_err());
        assert!(ParameterGrid::uniform(4, 0.0, 1.0, 8, Boundary::Open).is_err());
        assert!(ParameterGrid::uniform(0, 0.0, 1.0, 8, Boundary::Open).is_err());
    }

    #[test]
    fn flat_and_multi_roundtrip() {
        let g = ParameterGrid::new(
            vec![
                Axis { lo: 0.0, hi: 1.0, nodes: 5 },
                Axis { lo: 0.0, hi: 2.0, nodes: 6 },
                Axis { lo: -1.0, hi: 1.0, nodes: 4 },
            ],
            Boundary::Periodic,
        )
        .unwrap();
        for f in 0..g.len() {
            let m = g.multi(f);
            assert_eq!(g.flat(&m), f);
        }
        assert_eq!(g.neighbor(g.flat(&[4, 0, 0]), 0, 1), Some(g.flat(&[0, 0, 0])));
    }

    #[test]
    fn quadrature_rules() {
        let open = ParameterGrid::uniform(1, 0.0, 1.0, 11, Boundary::Open).unwrap();
        let w = WeightDensity::from_fn(open, |r| r[0]).unwrap();
        assert!((w.total() - 0.5).abs() < 1e-14);
        let per = ParameterGrid::uniform(2, 0.0, 1.0, 8, Boundary::Periodic).unwrap();
        let w = WeightDensity::uniform_probability(per).unwrap();
        assert!((w.total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_negative_weight() {
        let g = ParameterGrid::uniform(1, 0.0, 1.0, 5, Boundary::Open).unwrap();
        assert!(WeightDensity::new(g, vec![1.0, 1.0, -1.0, 1.0, 1.0]).is_err());
    }
}
