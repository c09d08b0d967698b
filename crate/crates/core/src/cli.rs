//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::crane::NUM_JOINTS;
use crate::error::{Error, Result};
use crate::eval::{evaluate_log, metrics, Metrics};
use crate::io::{
    featurize_with, load_bundle, load_config, read_log, save_bundle, write_log, write_text, Config,
    SignalLog,
};
use crate::pipeline::{predict, train, Predictions};
use crate::plot::write_evaluation_plots;
use crate::pressure::Dominant;
use crate::testbed::{experiment_suite, simulate};

#[derive(Debug, Parser)]
#[command(name = "hydrotwin", version, about = "Pressure models for load-sensing hydraulic cranes")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for simulation noise and optimizer restarts.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Flow deadband on piston speed (m/s).
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub sg_window: Option<usize>,
    #[arg(long, global = true)]
    pub sg_order: Option<usize>,
    /// Fit the standby pressure together with the margins.
    #[arg(long, global = true)]
    pub fit_standby: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the five-experiment suite, or the schedule in the config.
    Simulate,
    /// Write the feature table of each log.
    Featurize {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
    /// Train working-pressure models and the pump model.
    Train {
        /// Directory holding `<name>.csv` for the configured training logs.
        #[arg(long, default_value = ".")]
        data: PathBuf,
        /// Explicit training logs; overrides the configured split.
        logs: Vec<PathBuf>,
    },
    /// Predict working and pump pressures from joint states.
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
    /// Metrics and plots on held-out logs.
    Evaluate {
        #[arg(long)]
        bundle: PathBuf,
        /// Directory holding `<name>.csv` for the configured test logs.
        #[arg(long, default_value = ".")]
        data: PathBuf,
        #[arg(long)]
        no_plots: bool,
        /// Explicit logs; overrides the configured split.
        logs: Vec<PathBuf>,
    },
}

impl Common {
    /// Config file (or defaults) with command-line overrides applied.
    pub fn resolve(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => Config::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(e) = self.epsilon {
            cfg.features.epsilon = e;
        }
        if let Some(w) = self.sg_window {
            cfg.features.sg_window = w;
        }
        if let Some(o) = self.sg_order {
            cfg.features.sg_order = o;
        }
        if self.fit_standby {
            cfg.training.fit_standby = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "log".into())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn split_logs(explicit: &[PathBuf], data: &Path, names: &[String]) -> Vec<PathBuf> {
    if explicit.is_empty() {
        names.iter().map(|n| data.join(format!("{n}.csv"))).collect()
    } else {
        explicit.to_vec()
    }
}

fn read_logs(paths: &[PathBuf]) -> Result<Vec<(String, SignalLog)>> {
    if paths.is_empty() {
        return Err(Error::Config("no input logs".into()));
    }
    paths.iter().map(|p| Ok((stem(p), read_log(p)?))).collect()
}

pub fn cmd_simulate(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out)?;
    let runs: Vec<(String, SignalLog)> = match &cfg.schedule {
        Some(s) => vec![("custom".into(), simulate(&cfg.plant, s, cfg.dt, cfg.seed)?.log)],
        None => experiment_suite(&cfg.plant, cfg.dt, cfg.seed)?
            .into_iter()
            .map(|e| (e.name.to_string(), e.simulation.log))
            .collect(),
    };
    let mut written = Vec::new();
    for (name, log) in runs {
        let path = out.join(format!("{name}.csv"));
        write_log(&log, &path)?;
        log::info!("wrote {}", path.display());
        written.push(path);
    }
    Ok(written)
}

pub fn cmd_featurize(cfg: &Config, logs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out)?;
    let mut written = Vec::new();
    for (name, log) in read_logs(logs)? {
        let table = featurize_with(&log, &cfg.plant.geometry, &cfg.features)?;
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        let path = out.join(format!("{name}_features.csv"));
        write_text(&path, &String::from_utf8_lossy(&buf))?;
        written.push(path);
    }
    Ok(written)
}

pub fn cmd_train(cfg: &Config, logs: &[PathBuf], out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let logs: Vec<SignalLog> = read_logs(logs)?.into_iter().map(|(_, l)| l).collect();
    let (bundle, report) = train(&logs, &cfg.plant.geometry, &cfg.train_options())?;
    save_bundle(&bundle, out.join("bundle.json"))?;
    write_json(&out.join("train_report.json"), &report)?;
    for (i, flag) in report.unidentifiable.iter().enumerate() {
        if *flag {
            log::warn!("margin of actuator {} is not identifiable from these logs", i + 1);
        }
    }
    Ok(())
}

fn dominant_label(d: Dominant) -> String {
    match d {
        Dominant::Standby => "standby".into(),
        Dominant::Actuator(i) => (i + 1).to_string(),
    }
}

fn predictions_csv(p: &Predictions) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["time_s".to_string()];
    for a in 1..=NUM_JOINTS {
        header.extend([format!("p_work{a}_pa"), format!("p_work{a}_var_pa2"), format!("dir{a}")]);
    }
    header.extend(["p_pump_pa".into(), "dominant".into()]);
    wtr.write_record(&header)?;
    for k in 0..p.table.len() {
        let mut row = vec![p.table.time[k].to_string()];
        for i in 0..NUM_JOINTS {
            row.extend([
                p.working[i][k].mean.to_string(),
                p.working[i][k].variance.to_string(),
                p.table.actuators[i].direction[k].sign().to_string(),
            ]);
        }
        row.push(p.pump[k].to_string());
        row.push(dominant_label(p.dominant[k]));
        wtr.write_record(&row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

pub fn cmd_predict(cfg: &Config, bundle: &Path, logs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out)?;
    let bundle = load_bundle(bundle)?;
    let mut written = Vec::new();
    for (name, log) in read_logs(logs)? {
        let p = predict(&bundle, &log, &cfg.plant.geometry)?;
        let path = out.join(format!("{name}_predictions.csv"));
        write_text(&path, &predictions_csv(&p)?)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Serialize)]
pub struct MetricsFile {
    pub overall: Metrics,
    pub logs: Vec<(String, Metrics)>,
}

pub fn cmd_evaluate(cfg: &Config, bundle: &Path, logs: &[PathBuf], out: &Path, plots: bool) -> Result<MetricsFile> {
    ensure_dir(out)?;
    let bundle = load_bundle(bundle)?;
    let gap = cfg.gap_threshold();
    let mut evaluated = Vec::new();
    let mut per_log = Vec::new();
    for (name, log) in read_logs(logs)? {
        let ev = evaluate_log(&bundle, &log, &cfg.plant.geometry, Some(cfg.plant.standby))?;
        per_log.push((name.clone(), metrics(std::slice::from_ref(&ev), gap)?));
        if plots {
            write_evaluation_plots(out, &name, &log, &ev)?;
        }
        evaluated.push(ev);
    }
    let file = MetricsFile {
        overall: metrics(&evaluated, gap)?,
        logs: per_log,
    };
    write_json(&out.join("metrics.json"), &file)?;
    Ok(file)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = cli.common.resolve()?;
    let out = &cli.common.out;
    match &cli.command {
        Command::Simulate => cmd_simulate(&cfg, out).map(drop),
        Command::Featurize { logs } => cmd_featurize(&cfg, logs, out).map(drop),
        Command::Train { data, logs } => {
            cmd_train(&cfg, &split_logs(logs, data, &cfg.evaluation.train), out)
        }
        Command::Predict { bundle, logs } => cmd_predict(&cfg, bundle, logs, out).map(drop),
        Command::Evaluate {
            bundle,
            data,
            no_plots,
            logs,
        } => {
            let paths = split_logs(logs, data, &cfg.evaluation.test);
            let m = cmd_evaluate(&cfg, bundle, &paths, out, !no_plots)?;
            println!("{}", serde_json::to_string_pretty(&m.overall)?);
            Ok(())
        }
    }
}

/// Exit code for an outcome: 0 success, 1 runtime failure, 2 bad
/// configuration or input schema.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_config_error() => 2,
        Err(_) => 1,
    }
}
