//! Simulate the five-experiment suite and write each log as CSV.
//!
//! Usage: `cargo run --example synthetic_suite -- [out_dir]`

use hydrotwin::io::write_log;
use hydrotwin::testbed::{default_plant, experiment_suite, truth_columns, SUITE_DT};

fn main() -> hydrotwin::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "suite".into());
    std::fs::create_dir_all(&out).map_err(|e| hydrotwin::Error::io(&out, e))?;
    let plant = default_plant();
    for exp in experiment_suite(&plant, SUITE_DT, 0)? {
        let log = &exp.simulation.log;
        let pump = log.extra(truth_columns::PUMP).unwrap_or(&log.p_pump);
        let peak = pump.iter().fold(0.0f64, |m, v| m.max(*v));
        println!(
            "{:>3}: {:>5} samples, {:>5.1} s, peak pump {:>6.2} MPa, {} clip events",
            exp.name,
            log.len(),
            exp.schedule.duration(),
            peak / 1e6,
            exp.simulation.clips.len()
        );
        write_log(log, format!("{out}/{}.csv", exp.name))?;
    }
    println!("wrote {out}/");
    Ok(())
}
