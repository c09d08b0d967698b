//! Training and prediction over whole logs: featurize, fit the
//! working-pressure models, then fit the pump margins on their predictions.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crane::{CraneGeometry, NUM_JOINTS};
use crate::error::Result;
use crate::io::{featurize_with, geometry_hash, Bundle, FeatureConfig, FeatureTable, SignalLog};
use crate::pressure::{
    build_training_set, dominating, fit_pump_margins, predict_working_pressure, thin_rows,
    train_working_pressure, Dominant, MarginFitOptions, PumpModel, WorkingPrediction,
    WorkingPressureModel, WorkingTrainOptions,
};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub features: FeatureConfig,
    pub working: WorkingTrainOptions,
    pub margins: MarginFitOptions,
}

impl TrainOptions {
    pub fn seed(&self) -> u64 {
        self.working.fit.seed
    }
}

/// Hyperparameters of one GP in physical units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpSummary {
    pub rows_available: usize,
    pub rows_used: usize,
    /// Flow (m^3/s) and force (N) lengthscales.
    pub lengthscales: Vec<f64>,
    pub signal_std: f64,
    pub noise_std: f64,
    pub log_likelihood: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActuatorReport {
    pub actuator: usize,
    pub extend: GpSummary,
    pub retract: GpSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub geometry_hash: String,
    pub training_fingerprint: String,
    pub samples: usize,
    pub actuators: Vec<ActuatorReport>,
    pub margins: Vec<f64>,
    pub standby: f64,
    pub standby_fitted: bool,
    pub unique_counts: Vec<usize>,
    pub unidentifiable: Vec<bool>,
    pub pump_fit_rmse: f64,
}

fn summarize(gp: &crate::gp::GpModel, available: usize) -> GpSummary {
    let (sf2, sn2) = gp.output_variances();
    GpSummary {
        rows_available: available,
        rows_used: gp.num_train(),
        lengthscales: gp.input_lengthscales(),
        signal_std: sf2.sqrt(),
        noise_std: sn2.sqrt(),
        log_likelihood: gp.log_likelihood(),
    }
}

fn fingerprint(datasets: &[crate::pressure::DirectionedDataset], tables: &[FeatureTable], max_rows: usize) -> String {
    let mut h = Sha256::new();
    for ds in datasets {
        for rows in [&ds.extend, &ds.retract] {
            for r in thin_rows(rows, max_rows) {
                for v in [r.q_abs, r.f_static, r.pressure] {
                    h.update(v.to_le_bytes());
                }
            }
        }
    }
    for t in tables {
        for v in &t.p_pump {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Working-pressure predictions for every actuator of a feature table.
pub fn predict_table(models: &[WorkingPressureModel], table: &FeatureTable) -> Result<Vec<Vec<WorkingPrediction>>> {
    models
        .iter()
        .map(|m| {
            let a = &table.actuators[m.actuator];
            a.q_flow
                .iter()
                .zip(&a.f_static)
                .map(|(q, f)| predict_working_pressure(m, *q, *f))
                .collect()
        })
        .collect()
}

/// Featurize the logs, train all working-pressure models, then fit the pump.
pub fn train(logs: &[SignalLog], geom: &CraneGeometry, opts: &TrainOptions) -> Result<(Bundle, TrainReport)> {
    opts.features.validate()?;
    let tables = logs
        .iter()
        .map(|l| featurize_with(l, geom, &opts.features))
        .collect::<Result<Vec<_>>>()?;
    let datasets = (0..NUM_JOINTS)
        .map(|i| build_training_set(&tables, i))
        .collect::<Result<Vec<_>>>()?;
    // the actuators are independent; each fit carries its own seed
    let models = std::thread::scope(|s| {
        let handles: Vec<_> = datasets
            .iter()
            .map(|ds| s.spawn(move || train_working_pressure(ds, &opts.working)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut pressures = vec![Vec::new(); NUM_JOINTS];
    let mut flows = vec![Vec::new(); NUM_JOINTS];
    let mut measured = Vec::new();
    for t in &tables {
        let pred = predict_table(&models, t)?;
        for i in 0..NUM_JOINTS {
            pressures[i].extend(pred[i].iter().map(|p| p.mean));
            flows[i].extend_from_slice(&t.actuators[i].q_flow);
        }
        measured.extend_from_slice(&t.p_pump);
    }
    let fit = fit_pump_margins(&pressures, &flows, &measured, &opts.margins)?;

    let hash = geometry_hash(geom);
    let training_fingerprint = fingerprint(&datasets, &tables, opts.working.max_rows);
    let report = TrainReport {
        geometry_hash: hash.clone(),
        training_fingerprint: training_fingerprint.clone(),
        samples: measured.len(),
        actuators: models
            .iter()
            .zip(&datasets)
            .map(|(m, ds)| ActuatorReport {
                actuator: m.actuator + 1,
                extend: summarize(&m.extend, ds.extend.len()),
                retract: summarize(&m.retract, ds.retract.len()),
            })
            .collect(),
        margins: fit.pump.margins.clone(),
        standby: fit.pump.standby,
        standby_fitted: opts.margins.fit_standby,
        unique_counts: fit.unique_counts.clone(),
        unidentifiable: fit.unidentifiable.clone(),
        pump_fit_rmse: fit.rmse,
    };
    let bundle = Bundle {
        seed: opts.seed(),
        geometry_hash: hash,
        features: opts.features,
        training_fingerprint,
        models,
        pump: fit.pump,
    };
    Ok((bundle, report))
}

/// Model outputs for one log.
#[derive(Clone, Debug)]
pub struct Predictions {
    pub table: FeatureTable,
    /// `[actuator][sample]`.
    pub working: Vec<Vec<WorkingPrediction>>,
    /// `[actuator][sample]`, working pressure plus margin when active.
    pub elevated: Vec<Vec<f64>>,
    pub pump: Vec<f64>,
    pub dominant: Vec<Dominant>,
}

/// Predict working and pump pressures from the joint states of `log`.
pub fn predict(bundle: &Bundle, log: &SignalLog, geom: &CraneGeometry) -> Result<Predictions> {
    bundle.check_geometry(geom)?;
    let table = featurize_with(log, geom, &bundle.features)?;
    predict_from_table(bundle, table)
}

pub fn predict_from_table(bundle: &Bundle, table: FeatureTable) -> Result<Predictions> {
    let working = predict_table(&bundle.models, &table)?;
    let pump: &PumpModel = &bundle.pump;
    let n = table.len();
    let mut elevated = vec![Vec::with_capacity(n); working.len()];
    let mut pump_out = Vec::with_capacity(n);
    let mut dominant = Vec::with_capacity(n);
    for k in 0..n {
        let e: Vec<f64> = working
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let q = table.actuators[i].q_flow[k];
                w[k].mean + if q != 0.0 { pump.margins[i] } else { 0.0 }
            })
            .collect();
        pump_out.push(e.iter().fold(pump.standby, |a, v| a.max(*v)));
        dominant.push(dominating(&e, pump.standby));
        for (i, v) in e.into_iter().enumerate() {
            elevated[i].push(v);
        }
    }
    Ok(Predictions {
        table,
        working,
        elevated,
        pump: pump_out,
        dominant,
    })
}
