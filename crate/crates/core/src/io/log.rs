//! Signal logs as CSV with unit-suffixed column names.
//!
//! Mandatory columns: `time_s`, `theta1_rad`, `theta2_rad`, `x_prism_m`,
//! `p_a{i}_pa`, `p_b{i}_pa` for actuators 1-3, and `p_pump_pa`. Optional
//! `u_cmd{i}_ma` command currents are carried as metadata. Any other column
//! must be numeric and is preserved as an extra column.

use std::path::Path;

use crate::crane::{JointState, NUM_JOINTS};
use crate::error::{Error, Result};

use super::write_atomic;

pub const TIME: &str = "time_s";
pub const THETA1: &str = "theta1_rad";
pub const THETA2: &str = "theta2_rad";
pub const X_PRISM: &str = "x_prism_m";
pub const P_PUMP: &str = "p_pump_pa";

pub fn p_a_column(actuator: usize) -> String {
    format!("p_a{}_pa", actuator + 1)
}

pub fn p_b_column(actuator: usize) -> String {
    format!("p_b{}_pa", actuator + 1)
}

pub fn u_cmd_column(actuator: usize) -> String {
    format!("u_cmd{}_ma", actuator + 1)
}

/// Relative tolerance on sample spacing.
const TIMING_TOL: f64 = 1e-6;

/// A named numeric column that is not part of the schema.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtraColumn {
    pub name: String,
    pub values: Vec<f64>,
}

/// Time-indexed record of joint states and pressures.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalLog {
    pub time: Vec<f64>,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub x_prism: Vec<f64>,
    pub p_a: [Vec<f64>; NUM_JOINTS],
    pub p_b: [Vec<f64>; NUM_JOINTS],
    pub p_pump: Vec<f64>,
    pub u_cmd: Option<[Vec<f64>; NUM_JOINTS]>,
    pub extras: Vec<ExtraColumn>,
}

impl SignalLog {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Sample period estimated from the first and last timestamps.
    pub fn dt(&self) -> f64 {
        let n = self.time.len();
        if n < 2 {
            return f64::NAN;
        }
        (self.time[n - 1] - self.time[0]) / (n - 1) as f64
    }

    pub fn joint_state(&self, i: usize) -> JointState {
        JointState::new(self.theta1[i], self.theta2[i], self.x_prism[i])
    }

    pub fn extra(&self, name: &str) -> Option<&[f64]> {
        self.extras
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    /// Insert or replace an extra column.
    pub fn set_extra(&mut self, name: &str, values: Vec<f64>) {
        match self.extras.iter_mut().find(|c| c.name == name) {
            Some(c) => c.values = values,
            None => self.extras.push(ExtraColumn {
                name: name.to_string(),
                values,
            }),
        }
    }

    fn columns(&self) -> Vec<(String, &[f64])> {
        let mut cols: Vec<(String, &[f64])> = vec![
            (TIME.into(), &self.time),
            (THETA1.into(), &self.theta1),
            (THETA2.into(), &self.theta2),
            (X_PRISM.into(), &self.x_prism),
        ];
        for i in 0..NUM_JOINTS {
            cols.push((p_a_column(i), &self.p_a[i]));
            cols.push((p_b_column(i), &self.p_b[i]));
        }
        cols.push((P_PUMP.into(), &self.p_pump));
        if let Some(u) = &self.u_cmd {
            for (i, col) in u.iter().enumerate() {
                cols.push((u_cmd_column(i), col));
            }
        }
        for e in &self.extras {
            cols.push((e.name.clone(), &e.values));
        }
        cols
    }

    /// Check column lengths, finiteness, non-negative pressures and uniform
    /// strictly increasing time.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for (name, col) in self.columns() {
            if col.len() != n {
                return Err(Error::Schema(format!(
                    "column \"{name}\" has {} rows, expected {n}",
                    col.len()
                )));
            }
            if let Some(r) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Schema(format!(
                    "column \"{name}\" row {r} is not a finite number"
                )));
            }
            if name.ends_with("_pa") && !name.starts_with("true_") {
                if let Some(r) = col.iter().position(|v| *v < 0.0) {
                    return Err(Error::Schema(format!(
                        "column \"{name}\" row {r} has negative pressure {}",
                        col[r]
                    )));
                }
            }
        }
        check_timing(&self.time)
    }
}

fn check_timing(time: &[f64]) -> Result<()> {
    let n = time.len();
    if n < 2 {
        return Err(Error::Schema(format!("log needs at least 2 samples, has {n}")));
    }
    let dt = (time[n - 1] - time[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Timing {
            row: n - 1,
            time: time[n - 1],
        });
    }
    for (i, t) in time.iter().enumerate() {
        let expected = time[0] + i as f64 * dt;
        if (t - expected).abs() > TIMING_TOL * dt {
            return Err(Error::Timing { row: i, time: *t });
        }
    }
    Ok(())
}

/// Read and validate a log.
pub fn read_log(path: impl AsRef<Path>) -> Result<SignalLog> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_log_from(file)
}

pub fn read_log_from<R: std::io::Read>(reader: R) -> Result<SignalLog> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Schema(format!(
                    "column \"{}\" row {r}: cannot parse \"{field}\" as a number",
                    headers[c]
                ))
            })?;
            data[c].push(v);
        }
    }
    let mut taken = vec![false; headers.len()];
    let mut take = |name: &str| -> Option<Vec<f64>> {
        let idx = headers.iter().position(|h| h == name)?;
        taken[idx] = true;
        Some(std::mem::take(&mut data[idx]))
    };
    let mut required = |name: &str| take(name).ok_or_else(|| Error::Schema(format!("missing column \"{name}\"")));
    let time = required(TIME)?;
    let theta1 = required(THETA1)?;
    let theta2 = required(THETA2)?;
    let x_prism = required(X_PRISM)?;
    let mut p_a: [Vec<f64>; NUM_JOINTS] = Default::default();
    let mut p_b: [Vec<f64>; NUM_JOINTS] = Default::default();
    for i in 0..NUM_JOINTS {
        p_a[i] = required(&p_a_column(i))?;
        p_b[i] = required(&p_b_column(i))?;
    }
    let p_pump = required(P_PUMP)?;
    let u: Vec<Option<Vec<f64>>> = (0..NUM_JOINTS).map(|i| take(&u_cmd_column(i))).collect();
    let u_cmd = if u.iter().all(Option::is_some) {
        let mut it = u.into_iter().flatten();
        Some(std::array::from_fn(|_| it.next().unwrap_or_default()))
    } else if u.iter().any(Option::is_some) {
        let missing = (0..NUM_JOINTS).find(|i| u[*i].is_none()).unwrap_or(0);
        return Err(Error::Schema(format!(
            "missing column \"{}\" (command columns must be given for every actuator)",
            u_cmd_column(missing)
        )));
    } else {
        None
    };
    let extras = headers
        .iter()
        .zip(data)
        .zip(&taken)
        .filter(|(_, t)| !**t)
        .map(|((name, values), _)| ExtraColumn {
            name: name.clone(),
            values,
        })
        .collect();
    let log = SignalLog {
        time,
        theta1,
        theta2,
        x_prism,
        p_a,
        p_b,
        p_pump,
        u_cmd,
        extras,
    };
    log.validate()?;
    Ok(log)
}

/// Write a log atomically. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_log(log: &SignalLog, path: impl AsRef<Path>) -> Result<()> {
    log.validate()?;
    write_atomic(path.as_ref(), |w| write_log_to(log, w))
}

pub fn write_log_to<W: std::io::Write>(log: &SignalLog, writer: W) -> Result<()> {
    let cols = log.columns();
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(cols.iter().map(|(n, _)| n.as_str()))?;
    let mut row = Vec::with_capacity(cols.len());
    for i in 0..log.len() {
        row.clear();
        row.extend(cols.iter().map(|(_, c)| c[i].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<log>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_log(n: usize) -> SignalLog {
        let time: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        SignalLog {
            theta1: time.iter().map(|t| 0.1 + 0.2 * t).collect(),
            theta2: vec![-0.3; n],
            x_prism: vec![0.0; n],
            p_a: std::array::from_fn(|i| vec![1e6 * (i + 1) as f64; n]),
            p_b: std::array::from_fn(|_| vec![5e5; n]),
            p_pump: vec![2e6; n],
            u_cmd: None,
            extras: vec![ExtraColumn {
                name: "note_x".into(),
                values: vec![1.0 / 3.0; n],
            }],
            time,
        }
    }

    #[test]
    fn roundtrip_is_exact() {
        let log = tiny_log(20);
        let mut buf = Vec::new();
        write_log_to(&log, &mut buf).unwrap();
        let back = read_log_from(buf.as_slice()).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn missing_pump_column_is_named() {
        let log = tiny_log(5);
        let mut buf = Vec::new();
        write_log_to(&log, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("p_pump_pa", "p_other_pa");
        let err = read_log_from(text.as_bytes()).unwrap_err();
        assert!(matches!(&err, Error::Schema(m) if m.contains("p_pump")), "{err}");
    }

    #[test]
    fn jittered_time_is_rejected() {
        let mut log = tiny_log(10);
        log.time[4] += 0.001;
        let mut buf = Vec::new();
        let mut wtr = csv::Writer::from_writer(&mut buf);
        let cols = log.columns();
        wtr.write_record(cols.iter().map(|(n, _)| n.as_str())).unwrap();
        for i in 0..log.len() {
            wtr.write_record(cols.iter().map(|(_, c)| c[i].to_string())).unwrap();
        }
        drop(wtr);
        assert!(matches!(
            read_log_from(buf.as_slice()),
            Err(Error::Timing { row: 4, .. })
        ));
        // a sub-tolerance wobble is accepted
        let mut ok = tiny_log(10);
        ok.time[4] += 1e-9;
        ok.validate().unwrap();
    }

    #[test]
    fn negative_pressure_rejected() {
        let mut log = tiny_log(6);
        log.p_b[1][2] = -1.0;
        assert!(matches!(log.validate(), Err(Error::Schema(m)) if m.contains("p_b2_pa")));
    }
}
