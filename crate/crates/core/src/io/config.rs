//! Run configuration in TOML. Every table is optional; missing keys take
//! their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::FitOptions;
use crate::pipeline::TrainOptions;
use crate::pressure::{MarginFitOptions, WorkingTrainOptions};
use crate::testbed::{default_plant, CommandSchedule, SyntheticPlantParams, EXPERIMENT_NAMES, SUITE_DT};

use super::features::FeatureConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    /// Optimizer starts per GP.
    pub restarts: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Rows per direction partition after thinning.
    pub max_rows: usize,
    pub fit_standby: bool,
    /// Pa; used as-is unless `fit_standby`.
    pub standby: f64,
    pub min_unique: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let fit = FitOptions::default();
        let margins = MarginFitOptions::default();
        Self {
            restarts: fit.restarts,
            max_iter: fit.max_iter,
            grad_tol: fit.grad_tol,
            max_rows: WorkingTrainOptions::default().max_rows,
            fit_standby: margins.fit_standby,
            standby: margins.standby,
            min_unique: margins.min_unique,
        }
    }
}

/// Trajectory-level split: whole logs, named by file stem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub train: Vec<String>,
    pub test: Vec<String>,
    /// Dominance is scored where the noise-free demand gap exceeds this
    /// many pressure-noise standard deviations.
    pub gap_factor: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            train: EXPERIMENT_NAMES[..3].iter().map(|s| s.to_string()).collect(),
            test: EXPERIMENT_NAMES[3..].iter().map(|s| s.to_string()).collect(),
            gap_factor: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    /// Simulation sample period (s).
    pub dt: f64,
    pub features: FeatureConfig,
    pub training: TrainingConfig,
    pub evaluation: EvaluationConfig,
    /// Plant for `simulate`; its `geometry` is the model geometry for every
    /// other command.
    pub plant: SyntheticPlantParams,
    /// Simulate this schedule instead of the five-experiment suite.
    pub schedule: Option<CommandSchedule>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            dt: SUITE_DT,
            features: FeatureConfig::default(),
            training: TrainingConfig::default(),
            evaluation: EvaluationConfig::default(),
            plant: default_plant(),
            schedule: None,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        self.features
            .validate()
            .map_err(|e| Error::Config(format!("features: {e}")))?;
        self.plant
            .validate()
            .map_err(|e| Error::Config(format!("plant: {e}")))?;
        let t = &self.training;
        if t.restarts == 0 || t.max_iter == 0 || t.max_rows < 2 {
            return bad("training: restarts, max_iter and max_rows must be positive (max_rows >= 2)".into());
        }
        if !(t.standby.is_finite() && t.standby >= 0.0) {
            return bad(format!("training: standby must be non-negative, got {}", t.standby));
        }
        let ev = &self.evaluation;
        if let Some(name) = ev.train.iter().find(|n| ev.test.contains(n)) {
            return bad(format!("evaluation: log \"{name}\" is in both train and test"));
        }
        if !(ev.gap_factor.is_finite() && ev.gap_factor >= 0.0) {
            return bad(format!("evaluation: gap_factor must be non-negative, got {}", ev.gap_factor));
        }
        Ok(())
    }

    pub fn train_options(&self) -> TrainOptions {
        let t = &self.training;
        TrainOptions {
            features: self.features,
            working: WorkingTrainOptions {
                fit: FitOptions {
                    restarts: t.restarts,
                    max_iter: t.max_iter,
                    grad_tol: t.grad_tol,
                    seed: self.seed,
                    ..Default::default()
                },
                max_rows: t.max_rows,
            },
            margins: MarginFitOptions {
                fit_standby: t.fit_standby,
                standby: t.standby,
                min_unique: t.min_unique,
                ..Default::default()
            },
        }
    }

    /// Pressure gap above which dominance is scored.
    pub fn gap_threshold(&self) -> f64 {
        self.evaluation.gap_factor * self.plant.noise.pressure
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parse a configuration; errors carry the line number.
pub fn parse_config(text: &str) -> Result<Config> {
    let cfg: Config = toml::from_str(text).map_err(|e| {
        let start = e.span().map_or(0, |s| s.start.min(text.len()));
        // unknown keys are reported with the span of their whole table
        let key_line = unknown_key(e.message()).and_then(|key| {
            text[start..].lines().position(|l| {
                l.trim_start()
                    .strip_prefix(key)
                    .is_some_and(|r| r.trim_start().starts_with('='))
            })
        });
        if e.span().is_none() && key_line.is_none() {
            return Error::Config(e.message().to_string());
        }
        let line = text[..start].matches('\n').count() + 1 + key_line.unwrap_or(0);
        Error::Config(format!("line {line}: {}", e.message()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn unknown_key(message: &str) -> Option<&str> {
    message.strip_prefix("unknown field `")?.split('`').next()
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
