//! Savitzky-Golay derivative filter.
//!
//! Every sample is differentiated through a least-squares polynomial fit
//! over `window` neighbouring samples. Near the ends the window is shifted
//! inward so that it stays full, and the fitted polynomial is evaluated off
//! center, which keeps the same polynomial order all the way to the boundary.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub window: usize,
    pub poly_order: usize,
    /// Sample period (s).
    pub dt: f64,
}

impl FilterSpec {
    pub fn new(window: usize, poly_order: usize, dt: f64) -> Result<Self> {
        let spec = Self {
            window,
            poly_order,
            dt,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 5 || self.window % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "filter window must be odd and at least 5, got {}",
                self.window
            )));
        }
        if self.poly_order < 2 || self.poly_order >= self.window {
            return Err(Error::InvalidArgument(format!(
                "polynomial order must be in [2, window), got {}",
                self.poly_order
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample period must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Precomputed first-derivative weights for every evaluation position
/// inside the window.
#[derive(Clone, Debug)]
pub struct SavitzkyGolay {
    spec: FilterSpec,
    /// `weights[pos][j]` multiplies sample `j` of a window to give the
    /// derivative at window sample `pos`.
    weights: Vec<Vec<f64>>,
}

impl SavitzkyGolay {
    pub fn new(spec: FilterSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.window;
        let half = (n / 2) as f64;
        let weights = (0..n)
            .map(|pos| derivative_weights(n, spec.poly_order, pos, half, spec.dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, weights })
    }

    pub fn spec(&self) -> &FilterSpec {
        &self.spec
    }

    /// Weights applied at interior samples.
    pub fn central_weights(&self) -> &[f64] {
        &self.weights[self.spec.window / 2]
    }

    pub fn derivative(&self, series: &[f64]) -> Result<Vec<f64>> {
        let n = series.len();
        let w = self.spec.window;
        if n < w {
            return Err(Error::SeriesTooShort { len: n, window: w });
        }
        if series.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("filter input"));
        }
        let half = w / 2;
        Ok((0..n)
            .map(|i| {
                let start = i.saturating_sub(half).min(n - w);
                let weights = &self.weights[i - start];
                weights
                    .iter()
                    .zip(&series[start..start + w])
                    .map(|(c, y)| c * y)
                    .sum()
            })
            .collect())
    }
}

/// Least-squares derivative weights at window position `pos`.
///
/// The abscissa is scaled by the half-width so the normal matrix stays well
/// conditioned, then rescaled back to physical units.
fn derivative_weights(n: usize, order: usize, pos: usize, half: f64, dt: f64) -> Result<Vec<f64>> {
    let cols = order + 1;
    let vander = DMatrix::from_fn(n, cols, |j, k| {
        ((j as f64 - pos as f64) / half).powi(k as i32)
    });
    let qr = vander.clone().qr();
    let r = qr.r();
    let q = qr.q();
    // Coefficient vector c = R^-1 Q^T y; the derivative at the evaluation
    // point is c[1] / (half * dt), so the weights are row 1 of R^-1 Q^T.
    let mut e1 = DVector::zeros(cols);
    e1[1] = 1.0;
    let row = r
        .transpose()
        .solve_lower_triangular(&e1)
        .ok_or_else(|| Error::InvalidArgument("singular Savitzky-Golay design".into()))?;
    let weights = q * row;
    Ok(weights.iter().map(|v| v / (half * dt)).collect())
}

/// Derivative of a uniformly sampled signal.
pub fn sg_derivative(series: &[f64], spec: &FilterSpec) -> Result<Vec<f64>> {
    SavitzkyGolay::new(*spec)?.derivative(series)
}
