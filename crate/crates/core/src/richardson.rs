//! Extrapolation of sequences y(R) = y0 + c1 R^p + c2 R^{p+1} + ... to R = 0.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WillmoreError};

/// Linear extrapolation rule for a fixed schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    /// Observed leading order from a log-log fit of successive differences.
    pub observed_order: f64,
    /// Order used in the fit.
    pub order: u32,
    /// Weights for the full fit: y0 = sum weights_i y_i.
    pub weights: Vec<f64>,
    /// Weights of the fit that drops the largest radius; the difference is the error estimate.
    pub weights_reduced: Vec<f64>,
}

/// Weights reproducing the value at 0 of the polynomial in R with powers
/// {0, p, p+1, ..., p+n-2} interpolating n points.
fn interpolation_weights(radii: &[f64], p: u32) -> Vec<f64> {
    let n = radii.len();
    let scale = radii[0];
    let m = DMatrix::from_fn(n, n, |i, j| {
        if j == 0 {
            1.0
        } else {
            (radii[i] / scale).powi((p as usize + j - 1) as i32)
        }
    });
    // weights^T M = e_0^T
    let mut e0 = DVector::zeros(n);
    e0[0] = 1.0;
    let lu = m.transpose().lu();
    let w = lu.solve(&e0).expect("distinct radii give a nonsingular system");
    w.iter().copied().collect()
}

/// Observed order from differences d_i = y_i - y_{i+1} of a scalar sequence.
pub fn observed_order(radii: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = values
        .windows(2)
        .zip(radii.windows(2))
        .filter_map(|(y, r)| {
            let d = (y[0] - y[1]).abs();
            (d > 0.0).then(|| ((r[0] * r[1]).sqrt().ln(), d.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

impl Extrapolation {
    /// Builds the rule from a representative scalar sequence.
    ///
    /// `noise` is the absolute level below which differences carry no order
    /// information; the default order 1 is then used.
    pub fn fit(radii: &[f64], values: &[f64], noise: f64) -> Result<Self> {
        if radii.len() < 3 || radii.len() != values.len() {
            return Err(WillmoreError::InvalidInput(
                "extrapolation needs at least 3 radii with matching values".into(),
            ));
        }
        let informative = values.windows(2).any(|y| (y[0] - y[1]).abs() > noise);
        let observed = if informative {
            observed_order(radii, values).unwrap_or(1.0)
        } else {
            1.0
        };
        let order = observed.round().clamp(1.0, 4.0) as u32;
        let mut ex = Self::with_order(radii, order)?;
        ex.observed_order = observed;
        Ok(ex)
    }

    /// The rule for a prescribed leading order.
    pub fn with_order(radii: &[f64], order: u32) -> Result<Self> {
        if radii.len() < 3 {
            return Err(WillmoreError::InvalidInput("extrapolation needs at least 3 radii".into()));
        }
        let mut weights_reduced = vec![0.0];
        weights_reduced.extend(interpolation_weights(&radii[1..], order));
        Ok(Self {
            observed_order: order as f64,
            order,
            weights: interpolation_weights(radii, order),
            weights_reduced,
        })
    }

    pub fn apply(&self, values: &[f64]) -> (f64, f64) {
        let full: f64 = self.weights.iter().zip(values).map(|(w, y)| w * y).sum();
        let red: f64 = self.weights_reduced.iter().zip(values).map(|(w, y)| w * y).sum();
        (full, (full - red).abs())
    }
}
