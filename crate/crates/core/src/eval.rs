//! Accuracy metrics against measured or noise-free reference signals.

use serde::{Deserialize, Serialize};

use crate::crane::{CraneGeometry, NUM_JOINTS};
use crate::error::{Error, Result};
use crate::flow::Direction;
use crate::io::{Bundle, SignalLog};
use crate::pipeline::{predict, Predictions};
use crate::pressure::{dominating, Dominant};
use crate::testbed::truth_columns;

/// Root-mean-square error divided by the range of `truth`.
pub fn nrmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("nrmse of an empty series".into()));
    }
    let (lo, hi) = truth
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let range = hi - lo;
    let mse = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / truth.len() as f64;
    if range > 0.0 {
        Ok(mse.sqrt() / range)
    } else if mse == 0.0 {
        Ok(0.0)
    } else {
        Ok(f64::INFINITY)
    }
}

/// Reference signals for one log.
#[derive(Clone, Debug, Default)]
pub struct Reference {
    /// `[actuator][sample]`.
    pub working: Vec<Vec<f64>>,
    pub pump: Vec<f64>,
    /// Noise-free dominating actuator and its margin over the runner-up.
    pub dominant: Option<Vec<(Dominant, f64)>>,
    /// True when the working/pump references are noise-free.
    pub noise_free: bool,
}

/// Largest minus second-largest value.
fn top_gap(values: &[f64]) -> f64 {
    let mut top = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &v in values {
        if v > top {
            second = top;
            top = v;
        } else if v > second {
            second = v;
        }
    }
    top - second
}

/// Reference signals for `log` given the directions the model saw.
///
/// Working pressure: the chamber selected by the featurized direction, zero
/// when holding; noise-free chamber pressures are used when the log carries
/// them. Pump: the noise-free pump column if present, else the measurement.
/// Dominance needs the noise-free demand columns and the plant's standby.
pub fn reference(log: &SignalLog, pred: &Predictions, true_standby: Option<f64>) -> Reference {
    let n = log.len();
    let noise_free = (0..NUM_JOINTS).all(|i| {
        log.extra(&truth_columns::p_a(i)).is_some() && log.extra(&truth_columns::p_b(i)).is_some()
    }) && log.extra(truth_columns::PUMP).is_some();
    let working = (0..NUM_JOINTS)
        .map(|i| {
            let (pa, pb) = if noise_free {
                (
                    log.extra(&truth_columns::p_a(i)).unwrap_or_default(),
                    log.extra(&truth_columns::p_b(i)).unwrap_or_default(),
                )
            } else {
                (log.p_a[i].as_slice(), log.p_b[i].as_slice())
            };
            let dirs = &pred.table.actuators[i].direction;
            (0..n)
                .map(|k| match dirs[k] {
                    Direction::Extend => pa[k],
                    Direction::Retract => pb[k],
                    Direction::Hold => 0.0,
                })
                .collect()
        })
        .collect();
    let pump = log
        .extra(truth_columns::PUMP)
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| log.p_pump.clone());
    let demands: Option<Vec<&[f64]>> = (0..NUM_JOINTS)
        .map(|i| log.extra(&truth_columns::demand(i)))
        .collect();
    let dominant = match (demands, true_standby) {
        (Some(d), Some(standby)) => Some(
            (0..n)
                .map(|k| {
                    let e: Vec<f64> = d.iter().map(|col| col[k]).collect();
                    let mut all = e.clone();
                    all.push(standby);
                    (dominating(&e, standby), top_gap(&all))
                })
                .collect(),
        ),
        _ => None,
    };
    Reference {
        working,
        pump,
        dominant,
        noise_free,
    }
}

/// Metrics over one or more logs. NRMSE is computed on the concatenated
/// series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub samples: usize,
    pub working_nrmse: Vec<f64>,
    pub pump_nrmse: f64,
    /// Fraction of decisive samples whose predicted dominating actuator
    /// matches the reference.
    pub argmax_accuracy: Option<f64>,
    pub argmax_samples: usize,
    pub gap_threshold: f64,
    pub noise_free_reference: bool,
}

/// One evaluated log: predictions with their references.
#[derive(Clone, Debug)]
pub struct Evaluated {
    pub predictions: Predictions,
    pub reference: Reference,
}

pub fn evaluate_log(bundle: &Bundle, log: &SignalLog, geom: &CraneGeometry, true_standby: Option<f64>) -> Result<Evaluated> {
    let predictions = predict(bundle, log, geom)?;
    let reference = reference(log, &predictions, true_standby);
    Ok(Evaluated {
        predictions,
        reference,
    })
}

/// Aggregate metrics. Dominance is scored only where the reference gap
/// exceeds `gap_threshold`.
pub fn metrics(evaluated: &[Evaluated], gap_threshold: f64) -> Result<Metrics> {
    let mut work_pred = vec![Vec::new(); NUM_JOINTS];
    let mut work_ref = vec![Vec::new(); NUM_JOINTS];
    let (mut pump_pred, mut pump_ref) = (Vec::new(), Vec::new());
    let (mut hits, mut decisive) = (0usize, 0usize);
    let mut have_dominance = true;
    for e in evaluated {
        for i in 0..NUM_JOINTS {
            work_pred[i].extend(e.predictions.working[i].iter().map(|w| w.mean));
            work_ref[i].extend_from_slice(&e.reference.working[i]);
        }
        pump_pred.extend_from_slice(&e.predictions.pump);
        pump_ref.extend_from_slice(&e.reference.pump);
        match &e.reference.dominant {
            Some(dom) => {
                for (k, (d, gap)) in dom.iter().enumerate() {
                    if *gap > gap_threshold {
                        decisive += 1;
                        hits += usize::from(e.predictions.dominant[k] == *d);
                    }
                }
            }
            None => have_dominance = false,
        }
    }
    let working_nrmse = (0..NUM_JOINTS)
        .map(|i| nrmse(&work_pred[i], &work_ref[i]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Metrics {
        samples: pump_ref.len(),
        working_nrmse,
        pump_nrmse: nrmse(&pump_pred, &pump_ref)?,
        argmax_accuracy: (have_dominance && decisive > 0).then(|| hits as f64 / decisive as f64),
        argmax_samples: decisive,
        gap_threshold,
        noise_free_reference: evaluated.iter().all(|e| e.reference.noise_free),
    })
}
