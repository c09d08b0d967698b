use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::Direction;
use crate::gp::{fit_gp, FitOptions, GpModel, GpModelRecord};
use crate::io::FeatureTable;

/// Minimum rows per direction partition.
pub const MIN_PARTITION_ROWS: usize = 10;

/// One training row: flow magnitude, static force, measured side pressure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub q_abs: f64,
    pub f_static: f64,
    pub pressure: f64,
}

/// Training rows of one actuator split by motion direction. Holding samples
/// are dropped.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DirectionedDataset {
    pub actuator: usize,
    pub extend: Vec<TrainingRow>,
    pub retract: Vec<TrainingRow>,
}

impl DirectionedDataset {
    fn check(&self) -> Result<()> {
        for (name, rows) in [("extend", &self.extend), ("retract", &self.retract)] {
            if rows.len() < MIN_PARTITION_ROWS {
                return Err(Error::InsufficientData {
                    actuator: self.actuator + 1,
                    partition: name,
                    rows: rows.len(),
                    required: MIN_PARTITION_ROWS,
                });
            }
        }
        Ok(())
    }
}

/// Collect direction-partitioned rows for `actuator` from feature tables.
pub fn build_training_set(tables: &[FeatureTable], actuator: usize) -> Result<DirectionedDataset> {
    let mut ds = DirectionedDataset {
        actuator,
        ..Default::default()
    };
    for t in tables {
        let a = t.actuators.get(actuator).ok_or_else(|| {
            Error::InvalidArgument(format!("no actuator with index {actuator}"))
        })?;
        for i in 0..t.len() {
            let row = TrainingRow {
                q_abs: a.q_flow[i].abs(),
                f_static: a.f_static[i],
                pressure: a.target[i],
            };
            match a.direction[i] {
                Direction::Extend => ds.extend.push(row),
                Direction::Retract => ds.retract.push(row),
                Direction::Hold => {}
            }
        }
    }
    ds.check()?;
    Ok(ds)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkingTrainOptions {
    pub fit: FitOptions,
    /// Partitions with more rows are thinned by an even stride.
    pub max_rows: usize,
}

impl Default for WorkingTrainOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            max_rows: 250,
        }
    }
}

/// Evenly spaced subset of at most `max_rows` rows, keeping order.
pub fn thin_rows(rows: &[TrainingRow], max_rows: usize) -> Vec<TrainingRow> {
    let n = rows.len();
    if n <= max_rows || max_rows == 0 {
        return rows.to_vec();
    }
    (0..max_rows).map(|k| rows[k * n / max_rows]).collect()
}

/// The extend/retract GP pair of one actuator.
#[derive(Clone, Debug)]
pub struct WorkingPressureModel {
    pub actuator: usize,
    pub extend: GpModel,
    pub retract: GpModel,
}

/// Prediction of one working pressure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkingPrediction {
    /// Posterior mean clamped at 0 Pa.
    pub mean: f64,
    /// Posterior variance (Pa^2).
    pub variance: f64,
    /// Unclamped posterior mean.
    pub raw_mean: f64,
}

impl WorkingPrediction {
    const ZERO: Self = Self {
        mean: 0.0,
        variance: 0.0,
        raw_mean: 0.0,
    };
}

fn fit_partition(rows: &[TrainingRow], opts: &WorkingTrainOptions, seed_offset: u64) -> Result<GpModel> {
    let rows = thin_rows(rows, opts.max_rows);
    let x = DMatrix::from_fn(rows.len(), 2, |i, j| {
        if j == 0 {
            rows[i].q_abs
        } else {
            rows[i].f_static
        }
    });
    let y: Vec<f64> = rows.iter().map(|r| r.pressure).collect();
    let mut fit = opts.fit.clone();
    fit.seed = fit.seed.wrapping_add(seed_offset);
    fit_gp(&x, &y, &fit)
}

pub fn train_working_pressure(ds: &DirectionedDataset, opts: &WorkingTrainOptions) -> Result<WorkingPressureModel> {
    ds.check()?;
    let seed = 2 * ds.actuator as u64;
    let wrap = |partition: &'static str| {
        move |e: Error| Error::Training {
            actuator: ds.actuator + 1,
            partition,
            source: Box::new(e),
        }
    };
    let extend = fit_partition(&ds.extend, opts, seed).map_err(wrap("extend"))?;
    let retract = fit_partition(&ds.retract, opts, seed + 1).map_err(wrap("retract"))?;
    log::info!(
        "actuator {}: trained on {} extend / {} retract rows",
        ds.actuator + 1,
        extend.num_train(),
        retract.num_train()
    );
    Ok(WorkingPressureModel {
        actuator: ds.actuator,
        extend,
        retract,
    })
}

/// Working pressure for a signed, already deadbanded flow: the extend GP
/// for positive flow, the retract GP for negative flow, exactly zero
/// otherwise.
pub fn predict_working_pressure(m: &WorkingPressureModel, q_flow: f64, f_static: f64) -> Result<WorkingPrediction> {
    if !(q_flow.is_finite() && f_static.is_finite()) {
        return Err(Error::NonFinite("working-pressure query"));
    }
    let gp = if q_flow > 0.0 {
        &m.extend
    } else if q_flow < 0.0 {
        &m.retract
    } else {
        return Ok(WorkingPrediction::ZERO);
    };
    let (raw_mean, variance) = gp.predict_point(&[q_flow.abs(), f_static])?;
    Ok(WorkingPrediction {
        mean: raw_mean.max(0.0),
        variance,
        raw_mean,
    })
}

/// Serializable form of [`WorkingPressureModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkingPressureRecord {
    pub actuator: usize,
    pub extend: GpModelRecord,
    pub retract: GpModelRecord,
}

impl WorkingPressureModel {
    pub fn to_record(&self) -> WorkingPressureRecord {
        WorkingPressureRecord {
            actuator: self.actuator,
            extend: self.extend.to_record(),
            retract: self.retract.to_record(),
        }
    }

    pub fn from_record(rec: &WorkingPressureRecord) -> Result<Self> {
        Ok(Self {
            actuator: rec.actuator,
            extend: GpModel::from_record(&rec.extend)?,
            retract: GpModel::from_record(&rec.retract)?,
        })
    }
}
