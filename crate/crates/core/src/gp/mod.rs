//! Exact Gaussian-process regression with a squared-exponential ARD kernel.
//!
//! Inputs and targets are z-scored with training statistics before fitting;
//! hyperparameters live in that standardized space. Training maximizes the
//! log marginal likelihood by projected gradient ascent in log space from a
//! few deterministic starting points.

mod kernel;
mod likelihood;
mod optimize;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kernel::{kernel_matrix, GpHyperparameters};
pub use likelihood::log_marginal_likelihood;
pub use optimize::AscentReport;

use kernel::se_ard;
use likelihood::{factorize, factorize_with_jitter, lml_eval, noisy_kernel};

/// Per-dimension affine standardization `(v - mean) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    /// Mean and population standard deviation of each column; a constant
    /// column gets scale 1.
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let (mean, scale) = x
            .column_iter()
            .map(|c| {
                let m = c.sum() / n;
                let var = c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                (m, if sd > 1e-12 * m.abs().max(1e-300) { sd } else { 1.0 })
            })
            .unzip();
        Self { mean, scale }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            (x[(i, j)] - self.mean[j]) / self.scale[j]
        })
    }
}

/// Settings for [`fit_gp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub seed: u64,
    /// Largest training set accepted for exact inference.
    pub max_points: usize,
    /// Skip optimization and use these (standardized-space) hyperparameters.
    #[serde(default)]
    pub fixed: Option<GpHyperparameters>,
    pub bounds: HyperBounds,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iter: 200,
            grad_tol: 1e-6,
            seed: 0,
            max_points: 4000,
            fixed: None,
            bounds: HyperBounds::default(),
        }
    }
}

/// Box constraints on standardized-space hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperBounds {
    pub lengthscale: [f64; 2],
    pub signal_variance: [f64; 2],
    pub noise_variance: [f64; 2],
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self {
            lengthscale: [1e-2, 1e3],
            signal_variance: [1e-4, 1e4],
            noise_variance: [1e-10, 10.0],
        }
    }
}

impl HyperBounds {
    fn log_box(&self, dim: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![self.lengthscale[0].ln(); dim];
        let mut hi = vec![self.lengthscale[1].ln(); dim];
        lo.push(self.signal_variance[0].ln());
        hi.push(self.signal_variance[1].ln());
        lo.push(self.noise_variance[0].ln());
        hi.push(self.noise_variance[1].ln());
        (lo, hi)
    }
}

/// A trained GP: standardized training data, hyperparameters and the
/// factorization needed for prediction.
#[derive(Clone, Debug)]
pub struct GpModel {
    train_inputs: DMatrix<f64>,
    train_targets: DVector<f64>,
    hyper: GpHyperparameters,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    input_scaler: Scaler,
    output_scaler: Scaler,
    jitter: f64,
    log_likelihood: f64,
}

/// Serializable form of a [`GpModel`]. The factorization is recomputed on
/// load, which is deterministic, so predictions are reproduced exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpModelRecord {
    /// Standardized inputs, one row per training point.
    pub train_inputs: Vec<Vec<f64>>,
    pub train_targets: Vec<f64>,
    pub hyper: GpHyperparameters,
    pub input_scaler: Scaler,
    pub output_scaler: Scaler,
    pub jitter: f64,
    pub log_likelihood: f64,
}

fn check_finite(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("GP inputs"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("GP targets"));
    }
    Ok(())
}

/// Fit a GP to rows of `x` and targets `y`.
pub fn fit_gp(x: &DMatrix<f64>, y: &[f64], opts: &FitOptions) -> Result<GpModel> {
    let n = x.nrows();
    let d = x.ncols();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 training points, got {n}"
        )));
    }
    if n > opts.max_points {
        return Err(Error::InvalidArgument(format!(
            "{n} training points exceed the exact-inference cap {}",
            opts.max_points
        )));
    }
    if y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    if d == 0 {
        return Err(Error::InvalidArgument("inputs have no columns".into()));
    }
    check_finite(x, y)?;

    let input_scaler = Scaler::fit(x);
    let y_mat = DMatrix::from_column_slice(n, 1, y);
    let output_scaler = Scaler::fit(&y_mat);
    let xs = input_scaler.apply(x);
    let ys = DVector::from_iterator(
        n,
        y.iter()
            .map(|v| (v - output_scaler.mean[0]) / output_scaler.scale[0]),
    );

    let hyper = match &opts.fixed {
        Some(h) => {
            if h.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: h.dim(),
                });
            }
            h.clone()
        }
        None => optimize_hyper(&xs, &ys, opts)?,
    };
    GpModel::assemble(xs, ys, hyper, input_scaler, output_scaler, None)
}

fn starting_points(d: usize, opts: &FitOptions) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![{
        let mut v = vec![0.0; d];
        v.push(0.0);
        v.push(1e-2f64.ln());
        v
    }];
    for _ in 1..opts.restarts.max(1) {
        let mut v: Vec<f64> = (0..d)
            .map(|_| rng.random_range(0.1f64.ln()..10.0f64.ln()))
            .collect();
        v.push(rng.random_range(0.1f64.ln()..10.0f64.ln()));
        v.push(rng.random_range(1e-6f64.ln()..1e-1f64.ln()));
        starts.push(v);
    }
    starts
}

fn optimize_hyper(xs: &DMatrix<f64>, ys: &DVector<f64>, opts: &FitOptions) -> Result<GpHyperparameters> {
    let d = xs.ncols();
    let (lo, hi) = opts.bounds.log_box(d);
    let objective = |theta: &[f64]| {
        lml_eval(xs, ys, &GpHyperparameters::from_vec(theta)).map(|e| (e.value, e.gradient))
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut last_err = None;
    for (k, start) in starting_points(d, opts).into_iter().enumerate() {
        match optimize::projected_ascent(&objective, &start, &lo, &hi, opts.max_iter, opts.grad_tol) {
            Ok(report) => {
                log::debug!(
                    "GP start {k}: lml {:.6} after {} iterations (converged: {})",
                    report.value,
                    report.iterations,
                    report.converged
                );
                if best.as_ref().is_none_or(|(_, v)| report.value > *v) {
                    best = Some((report.theta, report.value));
                }
            }
            Err(e) => {
                log::debug!("GP start {k} failed: {e}");
                last_err = Some(e);
            }
        }
    }
    match best {
        Some((theta, _)) => Ok(GpHyperparameters::from_vec(&theta)),
        None => Err(last_err.unwrap_or(Error::Conditioning { jitter: 0.0 })),
    }
}

impl GpModel {
    fn assemble(
        xs: DMatrix<f64>,
        ys: DVector<f64>,
        hyper: GpHyperparameters,
        input_scaler: Scaler,
        output_scaler: Scaler,
        jitter: Option<f64>,
    ) -> Result<Self> {
        let k = noisy_kernel(&xs, &hyper)?;
        let fact = match jitter {
            Some(j) => factorize_with_jitter(&k, j)?,
            None => factorize(&k)?,
        };
        let alpha = fact.chol.solve(&ys);
        let n = ys.len() as f64;
        let log_det_half: f64 = fact.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let log_likelihood =
            -0.5 * ys.dot(&alpha) - log_det_half - 0.5 * n * (2.0 * std::f64::consts::PI).ln();
        Ok(Self {
            train_inputs: xs,
            train_targets: ys,
            hyper,
            chol: fact.chol,
            alpha,
            input_scaler,
            output_scaler,
            jitter: fact.jitter,
            log_likelihood,
        })
    }

    /// Hyperparameters in standardized units.
    pub fn hyper(&self) -> &GpHyperparameters {
        &self.hyper
    }

    /// Signal and noise variance in output units.
    pub fn output_variances(&self) -> (f64, f64) {
        let s2 = self.output_scaler.scale[0].powi(2);
        (self.hyper.signal_variance() * s2, self.hyper.noise_variance() * s2)
    }

    /// Lengthscales in input units.
    pub fn input_lengthscales(&self) -> Vec<f64> {
        self.hyper
            .lengthscales()
            .iter()
            .zip(&self.input_scaler.scale)
            .map(|(l, s)| l * s)
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.train_inputs.ncols()
    }

    pub fn num_train(&self) -> usize {
        self.train_inputs.nrows()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Log marginal likelihood of the standardized training targets.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn train_targets(&self) -> Vec<f64> {
        let (m, s) = (self.output_scaler.mean[0], self.output_scaler.scale[0]);
        self.train_targets.iter().map(|v| v * s + m).collect()
    }

    /// Posterior mean and variance (output units) at one query point.
    pub fn predict_point(&self, query: &[f64]) -> Result<(f64, f64)> {
        let d = self.input_dim();
        if query.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: query.len(),
            });
        }
        let q: Vec<f64> = query
            .iter()
            .enumerate()
            .map(|(j, v)| (v - self.input_scaler.mean[j]) / self.input_scaler.scale[j])
            .collect();
        let inv_ls: Vec<f64> = self.hyper.lengthscales().iter().map(|l| 1.0 / l).collect();
        let sf2 = self.hyper.signal_variance();
        let n = self.num_train();
        let mut row = vec![0.0; d];
        let kstar = DVector::from_fn(n, |i, _| {
            for (j, r) in row.iter_mut().enumerate() {
                *r = self.train_inputs[(i, j)];
            }
            se_ard(&row, &q, &inv_ls, sf2)
        });
        let mean_s = kstar.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&kstar)
            .ok_or(Error::Conditioning { jitter: self.jitter })?;
        let mut var_s = sf2 - v.norm_squared();
        if var_s < 0.0 {
            if var_s < -1e-12 * sf2 {
                log::warn!("posterior variance {var_s:e} below zero, clamped");
            }
            var_s = 0.0;
        }
        let (m, s) = (self.output_scaler.mean[0], self.output_scaler.scale[0]);
        Ok((mean_s * s + m, var_s * s * s))
    }

    pub fn to_record(&self) -> GpModelRecord {
        GpModelRecord {
            train_inputs: self
                .train_inputs
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            train_targets: self.train_targets.iter().copied().collect(),
            hyper: self.hyper.clone(),
            input_scaler: self.input_scaler.clone(),
            output_scaler: self.output_scaler.clone(),
            jitter: self.jitter,
            log_likelihood: self.log_likelihood,
        }
    }

    pub fn from_record(rec: &GpModelRecord) -> Result<Self> {
        let n = rec.train_inputs.len();
        let d = rec.hyper.dim();
        if rec.train_targets.len() != n || n < 2 {
            return Err(Error::Dimension {
                expected: n,
                got: rec.train_targets.len(),
            });
        }
        if rec.train_inputs.iter().any(|r| r.len() != d)
            || rec.input_scaler.mean.len() != d
            || rec.input_scaler.scale.len() != d
            || rec.output_scaler.mean.len() != 1
            || rec.output_scaler.scale.len() != 1
        {
            return Err(Error::InvalidArgument(
                "GP record has inconsistent dimensions".into(),
            ));
        }
        let xs = DMatrix::from_fn(n, d, |i, j| rec.train_inputs[i][j]);
        let ys = DVector::from_column_slice(&rec.train_targets);
        check_finite(&xs, &rec.train_targets)?;
        Self::assemble(
            xs,
            ys,
            rec.hyper.clone(),
            rec.input_scaler.clone(),
            rec.output_scaler.clone(),
            Some(rec.jitter),
        )
    }
}

/// Posterior mean and variance at every row of `xq`.
pub fn gp_predict(model: &GpModel, xq: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    if xq.ncols() != model.input_dim() {
        return Err(Error::Dimension {
            expected: model.input_dim(),
            got: xq.ncols(),
        });
    }
    let mut query = vec![0.0; xq.ncols()];
    let mut means = Vec::with_capacity(xq.nrows());
    let mut vars = Vec::with_capacity(xq.nrows());
    for i in 0..xq.nrows() {
        for (j, q) in query.iter_mut().enumerate() {
            *q = xq[(i, j)];
        }
        let (m, v) = model.predict_point(&query)?;
        means.push(m);
        vars.push(v);
    }
    Ok((means, vars))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine_data(n: usize) -> (DMatrix<f64>, Vec<f64>) {
        let x = DMatrix::from_fn(n, 1, |i, _| 2.0 * PI * i as f64 / (n - 1) as f64);
        let y = x.iter().map(|v| v.sin()).collect();
        (x, y)
    }

    #[test]
    fn recovers_sine() {
        let (x, y) = sine_data(30);
        let model = fit_gp(&x, &y, &FitOptions::default()).unwrap();
        let grid = DMatrix::from_fn(200, 1, |i, _| 2.0 * PI * i as f64 / 199.0);
        let (mean, var) = gp_predict(&model, &grid).unwrap();
        let max_err = mean
            .iter()
            .zip(grid.iter())
            .map(|(m, g)| (m - g.sin()).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-2, "{max_err}");
        assert!(var.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn interpolates_noiseless_data() {
        let (x, y) = sine_data(16);
        let model = fit_gp(&x, &y, &FitOptions::default()).unwrap();
        assert!(model.hyper().noise_variance() <= 1e-6);
        let scale = model.output_scaler.scale[0];
        for (i, target) in y.iter().enumerate() {
            let (m, _) = model.predict_point(&[x[(i, 0)]]).unwrap();
            assert!(((m - target) / scale).abs() < 1e-6, "{i}: {m} vs {target}");
        }
    }

    #[test]
    fn constant_targets() {
        let x = DMatrix::from_fn(12, 2, |i, j| (i * (j + 1)) as f64 * 0.3);
        let y = vec![4.25; 12];
        let model = fit_gp(&x, &y, &FitOptions::default()).unwrap();
        for q in [[0.0, 0.0], [1.3, -2.0], [50.0, 50.0]] {
            let (m, _) = model.predict_point(&q).unwrap();
            assert!((m - 4.25).abs() < 1e-6);
        }
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let (x, y) = sine_data(20);
        let model = fit_gp(&x, &y, &FitOptions::default()).unwrap();
        let ls = model.input_lengthscales()[0];
        let mean_y = y.iter().sum::<f64>() / y.len() as f64;
        let (m, v) = model.predict_point(&[2.0 * PI + 1e3 * ls]).unwrap();
        let (sf2, _) = model.output_variances();
        assert!((m - mean_y).abs() < 1e-9);
        assert!((v - sf2).abs() <= 0.01 * sf2);
        let (_, v_train) = model.predict_point(&[x[(5, 0)]]).unwrap();
        let (_, v_off) = model.predict_point(&[x[(19, 0)] + 5.0 * ls]).unwrap();
        assert!(v_train <= v_off);
    }

    #[test]
    fn dimension_checks() {
        let (x, y) = sine_data(10);
        let model = fit_gp(&x, &y, &FitOptions::default()).unwrap();
        assert!(model.predict_point(&[1.0, 2.0]).is_err());
        assert!(gp_predict(&model, &DMatrix::zeros(3, 2)).is_err());
        assert!(fit_gp(&x, &y[..5], &FitOptions::default()).is_err());
        let mut bad = y.clone();
        bad[3] = f64::NAN;
        assert!(matches!(
            fit_gp(&x, &bad, &FitOptions::default()),
            Err(Error::NonFinite(_))
        ));
        let opts = FitOptions {
            max_points: 5,
            ..FitOptions::default()
        };
        assert!(fit_gp(&x, &y, &opts).is_err());
    }

    #[test]
    fn deterministic_fit() {
        let (x, y) = sine_data(15);
        let opts = FitOptions {
            seed: 42,
            ..FitOptions::default()
        };
        let a = fit_gp(&x, &y, &opts).unwrap();
        let b = fit_gp(&x, &y, &opts).unwrap();
        assert_eq!(a.hyper(), b.hyper());
    }

    #[test]
    fn scaled_targets_scale_variances() {
        let x = DMatrix::from_fn(25, 1, |i, _| i as f64 * 0.25);
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| (1.7 * v).sin() + 0.05 * ((i * 7919) % 13) as f64 / 13.0)
            .collect();
        let c = 250.0;
        let yc: Vec<f64> = y.iter().map(|v| v * c).collect();
        let a = fit_gp(&x, &y, &FitOptions::default()).unwrap();
        let b = fit_gp(&x, &yc, &FitOptions::default()).unwrap();
        let (sa, na) = a.output_variances();
        let (sb, nb) = b.output_variances();
        assert!((sb.sqrt() / sa.sqrt() - c).abs() < 1e-4 * c);
        assert!((nb.sqrt() / na.sqrt() - c).abs() < 1e-4 * c);
    }

    #[test]
    fn record_roundtrip_is_exact() {
        let (x, y) = sine_data(18);
        let model = fit_gp(&x, &y, &FitOptions::default()).unwrap();
        let json = serde_json::to_string(&model.to_record()).unwrap();
        let rec: GpModelRecord = serde_json::from_str(&json).unwrap();
        let back = GpModel::from_record(&rec).unwrap();
        for q in [0.1, 1.7, 3.3, 9.0] {
            assert_eq!(model.predict_point(&[q]).unwrap(), back.predict_point(&[q]).unwrap());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn predictive_variance_is_non_negative(
                pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4..20),
                queries in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..20),
            ) {
                let x = DMatrix::from_fn(pts.len(), 2, |i, j| if j == 0 { pts[i].0 } else { pts[i].1 });
                let y: Vec<f64> = pts.iter().map(|(a, b)| (a * b).sin() + 0.1 * a).collect();
                let opts = FitOptions { restarts: 2, max_iter: 50, ..Default::default() };
                let model = fit_gp(&x, &y, &opts).unwrap();
                for (a, b) in queries.iter().chain(&pts) {
                    let (m, v) = model.predict_point(&[*a, *b]).unwrap();
                    prop_assert!(m.is_finite());
                    prop_assert!(v >= 0.0, "variance {}", v);
                }
            }
        }
    }
}
