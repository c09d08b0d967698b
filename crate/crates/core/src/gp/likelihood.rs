use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kernel::{kernel_matrix, GpHyperparameters};
use crate::error::{Error, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// Cholesky factor of `K + (sn2 + jitter) I`.
pub(crate) struct Factorization {
    pub chol: Cholesky<f64, Dyn>,
    /// Absolute jitter that was added on top of the noise variance.
    pub jitter: f64,
}

/// Factorize `k` (noise already on the diagonal). Retries with jitter
/// `1e-10 * mean(diag)`, escalating x10 up to `1e-6 * mean(diag)`.
pub(crate) fn factorize(k: &DMatrix<f64>) -> Result<Factorization> {
    if let Some(chol) = k.clone().cholesky() {
        return Ok(Factorization { chol, jitter: 0.0 });
    }
    let mean_diag = k.diagonal().mean().abs().max(f64::MIN_POSITIVE);
    let mut rel = JITTER_START;
    while rel <= JITTER_MAX * (1.0 + 1e-9) {
        let jitter = rel * mean_diag;
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Some(chol) = kj.cholesky() {
            return Ok(Factorization { chol, jitter });
        }
        rel *= 10.0;
    }
    Err(Error::Conditioning {
        jitter: JITTER_MAX * mean_diag,
    })
}

/// Factorize with a known jitter, as recorded in a trained model.
pub(crate) fn factorize_with_jitter(k: &DMatrix<f64>, jitter: f64) -> Result<Factorization> {
    let mut kj = k.clone();
    for i in 0..kj.nrows() {
        kj[(i, i)] += jitter;
    }
    kj.cholesky()
        .map(|chol| Factorization { chol, jitter })
        .ok_or(Error::Conditioning { jitter })
}

pub(crate) fn noisy_kernel(x: &DMatrix<f64>, hyper: &GpHyperparameters) -> Result<DMatrix<f64>> {
    let mut k = kernel_matrix(x, x, hyper)?;
    let sn2 = hyper.noise_variance();
    for i in 0..k.nrows() {
        k[(i, i)] += sn2;
    }
    Ok(k)
}

pub(crate) struct LmlEval {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Log marginal likelihood of `y` given inputs `x`, and its gradient with
/// respect to `hyper.to_vec()`.
pub fn log_marginal_likelihood(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    hyper: &GpHyperparameters,
) -> Result<(f64, Vec<f64>)> {
    let eval = lml_eval(x, y, hyper)?;
    Ok((eval.value, eval.gradient))
}

pub(crate) fn lml_eval(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    hyper: &GpHyperparameters,
) -> Result<LmlEval> {
    let n = x.nrows();
    let d = hyper.dim();
    if y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    let k = noisy_kernel(x, hyper)?;
    let fact = factorize(&k)?;
    let alpha = fact.chol.solve(y);
    let log_det_half: f64 = fact.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    let value = -0.5 * y.dot(&alpha)
        - log_det_half
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

    // dL/dtheta = 0.5 tr((alpha alpha^T - K^-1) dK/dtheta)
    let k_inv = fact.chol.inverse();
    let sn2 = hyper.noise_variance();
    let sf2 = hyper.signal_variance();
    let inv_ls2: Vec<f64> = hyper
        .lengthscales()
        .iter()
        .map(|l| 1.0 / (l * l))
        .collect();
    let mut grad = vec![0.0; d + 2];
    let mut trace_w = 0.0;
    for j in 0..n {
        for i in 0..n {
            let w = alpha[i] * alpha[j] - k_inv[(i, j)];
            if i == j {
                trace_w += w;
                grad[d] += 0.5 * w * sf2;
                continue;
            }
            if i < j {
                continue;
            }
            // off-diagonal K equals the noise-free kernel; count (i, j) and (j, i)
            let kf = k[(i, j)];
            let wk = w * kf;
            grad[d] += wk;
            for (dim, il2) in inv_ls2.iter().enumerate() {
                let diff = x[(i, dim)] - x[(j, dim)];
                grad[dim] += wk * diff * diff * il2;
            }
        }
    }
    grad[d + 1] = 0.5 * sn2 * trace_w;
    Ok(LmlEval {
        value,
        gradient: grad,
    })
}
