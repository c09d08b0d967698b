//! Train on logs I-III, evaluate on IV and V, write plots.
//!
//! Usage: `cargo run --release --example end_to_end -- [out_dir]`

use hydrotwin::eval::{evaluate_log, metrics};
use hydrotwin::io::Config;
use hydrotwin::pipeline::train;
use hydrotwin::plot::write_evaluation_plots;
use hydrotwin::testbed::experiment_suite;

fn main() -> hydrotwin::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "end_to_end".into());
    std::fs::create_dir_all(&out).map_err(|e| hydrotwin::Error::io(&out, e))?;
    let cfg = Config::default();
    let geom = &cfg.plant.geometry;
    let suite = experiment_suite(&cfg.plant, cfg.dt, cfg.seed)?;
    let train_logs: Vec<_> = suite[..3].iter().map(|e| e.simulation.log.clone()).collect();

    let (bundle, report) = train(&train_logs, geom, &cfg.train_options())?;
    println!("margins {:?} Pa, unidentifiable {:?}", report.margins, report.unidentifiable);

    let mut evaluated = Vec::new();
    for exp in &suite[3..] {
        let ev = evaluate_log(&bundle, &exp.simulation.log, geom, Some(cfg.plant.standby))?;
        write_evaluation_plots(out.as_ref(), exp.name, &exp.simulation.log, &ev)?;
        evaluated.push(ev);
    }
    let m = metrics(&evaluated, cfg.gap_threshold())?;
    for (i, v) in m.working_nrmse.iter().enumerate() {
        println!("working NRMSE actuator {}: {:.3}%", i + 1, 100.0 * v);
    }
    println!("pump NRMSE: {:.3}%", 100.0 * m.pump_nrmse);
    if let Some(acc) = m.argmax_accuracy {
        println!("dominating actuator: {:.2}% of {} samples", 100.0 * acc, m.argmax_samples);
    }
    println!("plots in {out}/");
    Ok(())
}
