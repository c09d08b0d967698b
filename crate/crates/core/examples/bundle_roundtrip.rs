//! Save a trained bundle, load it back and predict from joint states only.

use hydrotwin::io::{load_bundle, save_bundle, Config};
use hydrotwin::pipeline::{predict, train};
use hydrotwin::pressure::Dominant;
use hydrotwin::testbed::experiment_suite;

fn main() -> hydrotwin::Result<()> {
    let mut cfg = Config::default();
    // Cheaper optimizer; the format is the point here.
    cfg.training.restarts = 1;
    cfg.training.max_rows = 80;
    let geom = &cfg.plant.geometry;
    let suite = experiment_suite(&cfg.plant, cfg.dt, cfg.seed)?;
    let logs: Vec<_> = suite[..3].iter().map(|e| e.simulation.log.clone()).collect();
    let (bundle, _) = train(&logs, geom, &cfg.train_options())?;

    let dir = std::env::temp_dir().join("hydrotwin_bundle_example");
    std::fs::create_dir_all(&dir).map_err(|e| hydrotwin::Error::io(&dir, e))?;
    let path = dir.join("bundle.json");
    save_bundle(&bundle, &path)?;
    let loaded = load_bundle(&path)?;
    println!("saved and reloaded {}", path.display());

    // Measured pressures are never read during prediction.
    let mut log = suite[4].simulation.log.clone();
    log.p_pump.iter_mut().for_each(|p| *p = 0.0);
    for side in log.p_a.iter_mut().chain(log.p_b.iter_mut()) {
        side.iter_mut().for_each(|p| *p = 0.0);
    }
    let p = predict(&loaded, &log, geom)?;
    let p0 = predict(&bundle, &suite[4].simulation.log, geom)?;
    assert_eq!(p.pump, p0.pump);
    for k in (0..p.pump.len()).step_by(250) {
        let who = match p.dominant[k] {
            Dominant::Standby => "standby".to_string(),
            Dominant::Actuator(i) => format!("actuator {}", i + 1),
        };
        println!("t = {:>5.2} s  pump {:>6.3} MPa  ({who})", p.table.time[k], p.pump[k] / 1e6);
    }
    Ok(())
}
