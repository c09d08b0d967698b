//! Recover planted pump margins from noisy max-composed pump pressure, and
//! show the identifiability flag for an actuator that never dominates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use hydrotwin::pressure::{fit_pump_margins, MarginFitOptions, PumpModel};

fn main() -> hydrotwin::Result<()> {
    let truth = PumpModel::new(vec![1.6e6, 2.0e6, 2.4e6], 2.0e6)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 5e4).unwrap();
    let n = 600;
    let mut pressures = vec![Vec::new(); 3];
    let mut flows = vec![Vec::new(); 3];
    let mut measured = Vec::with_capacity(n);
    for _ in 0..n {
        let mut p = [0.0; 3];
        let mut q = [0.0; 3];
        for i in 0..3 {
            if rng.random_bool(0.5) {
                p[i] = rng.random_range(2e6..1.6e7);
                q[i] = 1e-4;
            }
            pressures[i].push(p[i]);
            flows[i].push(q[i]);
        }
        measured.push(truth.predict(&p, &q)? + noise.sample(&mut rng));
    }

    let fit = fit_pump_margins(&pressures, &flows, &measured, &MarginFitOptions::default())?;
    println!("planted margins {:?} MPa", truth.margins.iter().map(|c| c / 1e6).collect::<Vec<_>>());
    println!("fitted margins  {:?} MPa", fit.pump.margins.iter().map(|c| c / 1e6).collect::<Vec<_>>());
    println!("uniquely dominant samples {:?}", fit.unique_counts);

    // Actuator 3 idles: its margin cannot be seen in the pump pressure.
    flows[2].iter_mut().for_each(|q| *q = 0.0);
    pressures[2].iter_mut().for_each(|p| *p = 0.0);
    let measured: Vec<f64> = (0..n)
        .map(|k| truth.predict(&[pressures[0][k], pressures[1][k], 0.0], &[flows[0][k], flows[1][k], 0.0]))
        .collect::<hydrotwin::Result<_>>()?;
    let fit = fit_pump_margins(&pressures, &flows, &measured, &MarginFitOptions::default())?;
    println!("\nwith actuator 3 idle: margins {:?}, unidentifiable {:?}", fit.pump.margins, fit.unidentifiable);
    Ok(())
}
