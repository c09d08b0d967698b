//! Train the extend/retract working-pressure pair of the telescope actuator
//! on log II and query it over flow and force.

use hydrotwin::io::{featurize_with, FeatureConfig};
use hydrotwin::pressure::{build_training_set, predict_working_pressure, train_working_pressure, WorkingTrainOptions};
use hydrotwin::testbed::{default_plant, experiment_suite, SUITE_DT};

fn main() -> hydrotwin::Result<()> {
    let plant = default_plant();
    let suite = experiment_suite(&plant, SUITE_DT, 0)?;
    let table = featurize_with(&suite[1].simulation.log, &plant.geometry, &FeatureConfig::default())?;

    let actuator = 2;
    let ds = build_training_set(&[table], actuator)?;
    println!("{} extend rows, {} retract rows", ds.extend.len(), ds.retract.len());
    let model = train_working_pressure(&ds, &WorkingTrainOptions::default())?;

    let f = ds.extend.iter().map(|r| r.f_static).sum::<f64>() / ds.extend.len() as f64;
    println!("\nat F = {f:.0} N:");
    println!("{:>12} {:>14} {:>12}", "Q (m^3/s)", "P (MPa)", "std (MPa)");
    for q in [-4e-4, -2e-4, -5e-5, 0.0, 5e-5, 2e-4, 4e-4] {
        let p = predict_working_pressure(&model, q, f)?;
        println!("{q:>12.1e} {:>14.4} {:>12.4}", p.mean / 1e6, p.variance.sqrt() / 1e6);
    }
    Ok(())
}
