use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of a squared-exponential ARD kernel with Gaussian noise,
/// stored as natural logarithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparameters {
    pub log_lengthscales: Vec<f64>,
    pub log_signal_variance: f64,
    pub log_noise_variance: f64,
}

impl GpHyperparameters {
    pub fn new(lengthscales: &[f64], signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if lengthscales.is_empty() || !lengthscales.iter().all(|&l| positive(l)) {
            return Err(Error::InvalidArgument(format!(
                "lengthscales must be positive, got {lengthscales:?}"
            )));
        }
        if !positive(signal_variance) || !positive(noise_variance) {
            return Err(Error::InvalidArgument(format!(
                "variances must be positive (signal {signal_variance}, noise {noise_variance})"
            )));
        }
        Ok(Self {
            log_lengthscales: lengthscales.iter().map(|l| l.ln()).collect(),
            log_signal_variance: signal_variance.ln(),
            log_noise_variance: noise_variance.ln(),
        })
    }

    pub fn dim(&self) -> usize {
        self.log_lengthscales.len()
    }

    pub fn lengthscales(&self) -> Vec<f64> {
        self.log_lengthscales.iter().map(|v| v.exp()).collect()
    }

    pub fn signal_variance(&self) -> f64 {
        self.log_signal_variance.exp()
    }

    pub fn noise_variance(&self) -> f64 {
        self.log_noise_variance.exp()
    }

    /// `[log l_1 .. log l_d, log sf2, log sn2]`, the optimizer's parameter
    /// vector and the order of likelihood gradients.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.log_lengthscales.clone();
        v.push(self.log_signal_variance);
        v.push(self.log_noise_variance);
        v
    }

    pub fn from_vec(v: &[f64]) -> Self {
        let d = v.len() - 2;
        Self {
            log_lengthscales: v[..d].to_vec(),
            log_signal_variance: v[d],
            log_noise_variance: v[d + 1],
        }
    }
}

/// `sf2 * exp(-0.5 * sum_k ((x_k - x'_k) / l_k)^2)`.
pub(crate) fn se_ard(a: &[f64], b: &[f64], inv_ls: &[f64], sf2: f64) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(inv_ls)
        .map(|((x, y), il)| ((x - y) * il).powi(2))
        .sum();
    sf2 * (-0.5 * r2).exp()
}

/// Kernel matrix between the rows of `x` and `x2` (noise not included).
pub fn kernel_matrix(
    x: &DMatrix<f64>,
    x2: &DMatrix<f64>,
    hyper: &GpHyperparameters,
) -> Result<DMatrix<f64>> {
    let d = hyper.dim();
    for cols in [x.ncols(), x2.ncols()] {
        if cols != d {
            return Err(Error::Dimension {
                expected: d,
                got: cols,
            });
        }
    }
    let inv_ls: Vec<f64> = hyper.lengthscales().iter().map(|l| 1.0 / l).collect();
    let sf2 = hyper.signal_variance();
    let rows_a: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    let rows_b: Vec<Vec<f64>> = x2.row_iter().map(|r| r.iter().copied().collect()).collect();
    Ok(DMatrix::from_fn(x.nrows(), x2.nrows(), |i, j| {
        se_ard(&rows_a[i], &rows_b[j], &inv_ls, sf2)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_signal_variance() {
        let h = GpHyperparameters::new(&[0.7, 2.0], 3.5, 0.1).unwrap();
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 2.0, -1.0, 0.3, 0.3]);
        let k = kernel_matrix(&x, &x, &h).unwrap();
        for i in 0..3 {
            assert_eq!(k[(i, i)], h.signal_variance());
        }
        assert!((&k - k.transpose()).amax() == 0.0);
    }

    #[test]
    fn one_lengthscale_apart() {
        let h = GpHyperparameters::new(&[0.8], 2.0, 0.1).unwrap();
        let x = DMatrix::from_row_slice(1, 1, &[0.1]);
        let x2 = DMatrix::from_row_slice(1, 1, &[0.9]);
        let k = kernel_matrix(&x, &x2, &h).unwrap();
        assert!((k[(0, 0)] - 2.0 * (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn decays_with_distance() {
        let h = GpHyperparameters::new(&[1.0], 1.0, 0.1).unwrap();
        let x = DMatrix::from_row_slice(1, 1, &[0.0]);
        let far = DMatrix::from_fn(20, 1, |i, _| i as f64);
        let k = kernel_matrix(&x, &far, &h).unwrap();
        for j in 1..20 {
            assert!(k[(0, j)] < k[(0, j - 1)]);
        }
        assert!(k[(0, 19)] < 1e-50);
    }

    #[test]
    fn dimension_mismatch() {
        let h = GpHyperparameters::new(&[1.0, 1.0], 1.0, 0.1).unwrap();
        let x = DMatrix::zeros(2, 3);
        assert!(matches!(
            kernel_matrix(&x, &x, &h),
            Err(Error::Dimension { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(GpHyperparameters::new(&[1.0, 0.0], 1.0, 0.1).is_err());
        assert!(GpHyperparameters::new(&[1.0], -1.0, 0.1).is_err());
        assert!(GpHyperparameters::new(&[], 1.0, 0.1).is_err());
    }
}
