#![allow(dead_code)]

use std::sync::OnceLock;

use hydrotwin::io::{Bundle, Config, SignalLog};
use hydrotwin::pipeline::train;
use hydrotwin::testbed::experiment_suite;

/// Defaults with a cheap optimizer so integration tests train in seconds.
pub fn small_config() -> Config {
    let mut cfg = Config {
        seed: 11,
        ..Config::default()
    };
    cfg.training.restarts = 1;
    cfg.training.max_iter = 60;
    cfg.training.max_rows = 60;
    cfg
}

pub struct Trained {
    pub cfg: Config,
    pub bundle: Bundle,
    /// Logs I to V.
    pub logs: Vec<SignalLog>,
}

pub fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = small_config();
        let logs: Vec<SignalLog> = experiment_suite(&cfg.plant, cfg.dt, cfg.seed)
            .unwrap()
            .into_iter()
            .map(|e| e.simulation.log)
            .collect();
        let (bundle, _) = train(&logs[..3], &cfg.plant.geometry, &cfg.train_options()).unwrap();
        Trained { cfg, bundle, logs }
    })
}
