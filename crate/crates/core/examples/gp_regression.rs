//! Exact GP regression with an ARD squared-exponential kernel on noisy 1-D
//! data.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hydrotwin::gp::{fit_gp, gp_predict, FitOptions};

fn main() -> hydrotwin::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 40;
    let x = DMatrix::from_fn(n, 1, |i, _| 6.0 * i as f64 / (n - 1) as f64);
    let y: Vec<f64> = x.iter().map(|v| v.sin() + 0.05 * (rng.random::<f64>() - 0.5)).collect();

    let model = fit_gp(&x, &y, &FitOptions::default())?;
    let (sf2, sn2) = model.output_variances();
    println!(
        "lengthscale {:.3}, signal std {:.3}, noise std {:.4}, log-likelihood {:.2}",
        model.input_lengthscales()[0],
        sf2.sqrt(),
        sn2.sqrt(),
        model.log_likelihood()
    );

    // Extrapolating past x = 6 the variance grows back toward the prior.
    let grid = DMatrix::from_fn(9, 1, |i, _| i as f64);
    let (mean, var) = gp_predict(&model, &grid)?;
    println!("\n{:>5} {:>9} {:>9} {:>9}", "x", "sin x", "mean", "std");
    for i in 0..grid.nrows() {
        let g = grid[(i, 0)];
        println!("{g:>5.1} {:>9.4} {:>9.4} {:>9.4}", g.sin(), mean[i], var[i].sqrt());
    }
    Ok(())
}
