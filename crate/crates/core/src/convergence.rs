//! Least-squares order estimation for refinement studies.

use serde::Serialize;

use crate::error::{Error, Result};

/// Slope of `log e` against `log h` by least squares; needs at least two
/// positive points.
pub fn fit_slope(h: &[f64], e: &[f64]) -> Result<f64> {
    if h.len() != e.len() || h.len() < 2 {
        return Err(Error::InvalidInput(format!("need ≥ 2 matching points, got {} and {}", h.len(), e.len())));
    }
    if h.iter().chain(e).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("slope fit needs positive finite values".into()));
    }
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("refinement levels coincide".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub quantity: String,
    pub h: Vec<f64>,
    pub dt: Vec<f64>,
    pub error: Vec<f64>,
    /// `None` when the error sequence is not monotone.
    pub slope: Option<f64>,
    pub monotone: bool,
}

impl ConvergenceTable {
    pub fn new(quantity: impl Into<String>, h: Vec<f64>, dt: Vec<f64>, error: Vec<f64>) -> Result<Self> {
        if h.len() < 3 || dt.len() != h.len() || error.len() != h.len() {
            return Err(Error::InvalidInput(format!("convergence study needs ≥ 3 levels, got {}", h.len())));
        }
        let monotone = error.windows(2).all(|w| w[1] < w[0]);
        let slope = if monotone { fit_slope(&h, &error).ok() } else { None };
        if !monotone {
            log::warn!("non-monotone error sequence {error:?}: no slope reported");
        }
        Ok(Self { quantity: quantity.into(), h, dt, error, slope, monotone })
    }

    /// Slope within `expected ± window`.
    pub fn matches(&self, expected: f64, window: f64) -> bool {
        self.slope.is_some_and(|s| (s - expected).abs() <= window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let h = [0.4, 0.2, 0.1];
        let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        assert!((fit_slope(&h, &e).unwrap() - 2.0).abs() < 1e-12);
        let t = ConvergenceTable::new("x", h.to_vec(), h.to_vec(), e).unwrap();
        assert!(t.matches(2.0, 0.01));
    }

    #[test]
    fn non_monotone_has_no_slope() {
        let t = ConvergenceTable::new("x", vec![0.4, 0.2, 0.1], vec![1.0; 3], vec![1.0, 0.1, 0.2]).unwrap();
        assert!(t.slope.is_none() && !t.monotone);
        assert!(ConvergenceTable::new("x", vec![0.4, 0.2], vec![1.0; 2], vec![1.0, 0.1]).is_err());
    }
}
