//! Featurize a short simulated log and show how samples split into extend,
//! retract and hold per actuator.

use hydrotwin::flow::Direction;
use hydrotwin::io::{featurize_with, FeatureConfig};
use hydrotwin::testbed::{default_plant, simulate, CommandSchedule, SUITE_DT};

fn main() -> hydrotwin::Result<()> {
    let plant = default_plant();
    let sched = CommandSchedule::new([0.1, -0.5, 0.2])
        .then(2.0, [0.06, 0.0, 0.1])
        .then(2.0, [-0.04, 0.05, -0.08])
        .then(1.0, [0.0; 3]);
    let log = simulate(&plant, &sched, SUITE_DT, 1)?.log;
    let table = featurize_with(&log, &plant.geometry, &FeatureConfig::default())?;

    println!("{} samples", table.len());
    for (i, a) in table.actuators.iter().enumerate() {
        let count = |d| a.direction.iter().filter(|x| **x == d).count();
        let peak = a.q_flow.iter().fold(0.0f64, |m, q| m.max(q.abs()));
        println!(
            "actuator {}: extend {:>4}  retract {:>4}  hold {:>4}  peak |Q| {:.3e} m^3/s",
            i + 1,
            count(Direction::Extend),
            count(Direction::Retract),
            count(Direction::Hold),
            peak
        );
    }

    let k = 150;
    println!("\nsample {k} (t = {:.2} s):", table.time[k]);
    for (i, a) in table.actuators.iter().enumerate() {
        println!(
            "  {}: xdot {:>9.5} m/s  Q {:>10.3e}  F {:>10.1} N  {:?}",
            i + 1,
            a.xdot[k],
            a.q_flow[k],
            a.f_static[k],
            a.direction[k]
        );
    }
    Ok(())
}
