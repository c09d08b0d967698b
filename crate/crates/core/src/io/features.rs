//! Per-sample model features derived from a signal log and the crane
//! geometry: meter-in flow, static reaction force, motion direction and the
//! working-pressure target.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crane::{CraneGeometry, JointState, JointVelocity, NUM_JOINTS};
use crate::error::{Error, Result};
use crate::flow::{meter_in_flow, Direction, DEFAULT_EPSILON};
use crate::load::{joint_torques, static_reaction_force};
use crate::savgol::{FilterSpec, SavitzkyGolay};

use super::log::SignalLog;

/// Measured joint states may sit slightly outside the limits because of
/// sensor noise; violations up to this size (rad or m) are clamped.
pub const LIMIT_TOLERANCE: f64 = 1e-3;

/// Filter and deadband settings; the sample period comes from the log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub sg_window: usize,
    pub sg_order: usize,
    pub epsilon: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            sg_window: 11,
            sg_order: 3,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl FeatureConfig {
    pub fn filter_spec(&self, dt: f64) -> Result<FilterSpec> {
        FilterSpec::new(self.sg_window, self.sg_order, dt)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        self.filter_spec(1.0).map(|_| ())
    }
}

/// SHA-256 of the canonical JSON form of the geometry.
pub fn geometry_hash(geom: &CraneGeometry) -> String {
    let json = serde_json::to_string(geom).expect("geometry serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ActuatorFeatures {
    /// Piston speed (m/s) from filtered joint rates.
    pub xdot: Vec<f64>,
    /// Signed meter-in flow (m^3/s), zero inside the deadband.
    pub q_flow: Vec<f64>,
    /// Static reaction force (N), positive opposing extension.
    pub f_static: Vec<f64>,
    pub direction: Vec<Direction>,
    /// Side pressure selected by direction; zero when holding.
    pub target: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub geometry_hash: String,
    pub filter: FilterSpec,
    pub epsilon: f64,
    pub time: Vec<f64>,
    pub actuators: [ActuatorFeatures; NUM_JOINTS],
    pub p_pump: Vec<f64>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Flow of every actuator at sample `i`.
    pub fn flows_at(&self, i: usize) -> [f64; NUM_JOINTS] {
        std::array::from_fn(|a| self.actuators[a].q_flow[i])
    }

    /// Write as CSV (`time_s`, then per actuator `q{i}_m3ps`, `f{i}_n`,
    /// `dir{i}`, `p_work{i}_pa`, then `p_pump_pa`).
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["time_s".to_string()];
        for a in 1..=NUM_JOINTS {
            header.extend([
                format!("q{a}_m3ps"),
                format!("f{a}_n"),
                format!("dir{a}"),
                format!("p_work{a}_pa"),
            ]);
        }
        header.push("p_pump_pa".into());
        wtr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![self.time[i].to_string()];
            for a in &self.actuators {
                row.extend([
                    a.q_flow[i].to_string(),
                    a.f_static[i].to_string(),
                    a.direction[i].sign().to_string(),
                    a.target[i].to_string(),
                ]);
            }
            row.push(self.p_pump[i].to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|e| Error::io("<features>", e))?;
        Ok(())
    }
}

/// Clamp a measured pose into the joint limits if it is within
/// [`LIMIT_TOLERANCE`], otherwise report the violation.
pub(crate) fn admit_pose(geom: &CraneGeometry, q: &JointState) -> Result<JointState> {
    let limits = geom.joint_limits();
    for (v, [lo, hi]) in q.to_array().iter().zip(limits) {
        if *v < lo - LIMIT_TOLERANCE || *v > hi + LIMIT_TOLERANCE {
            return geom.check_limits(q).map(|_| *q);
        }
    }
    Ok(geom.clamp(q))
}

/// Features for every sample and actuator of `log`.
pub fn featurize(log: &SignalLog, geom: &CraneGeometry, spec: &FilterSpec, epsilon: f64) -> Result<FeatureTable> {
    log.validate()?;
    let dt = log.dt();
    if (spec.dt - dt).abs() > 1e-6 * dt {
        return Err(Error::InvalidArgument(format!(
            "filter sample period {} s does not match the log's {dt} s",
            spec.dt
        )));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    let sg = SavitzkyGolay::new(*spec)?;
    let rates = [
        sg.derivative(&log.theta1)?,
        sg.derivative(&log.theta2)?,
        sg.derivative(&log.x_prism)?,
    ];
    let n = log.len();
    let mut actuators: [ActuatorFeatures; NUM_JOINTS] = Default::default();
    for a in actuators.iter_mut() {
        *a = ActuatorFeatures {
            xdot: Vec::with_capacity(n),
            q_flow: Vec::with_capacity(n),
            f_static: Vec::with_capacity(n),
            direction: Vec::with_capacity(n),
            target: Vec::with_capacity(n),
        };
    }
    for i in 0..n {
        let q = admit_pose(geom, &log.joint_state(i)).map_err(|e| Error::at_sample(i, e))?;
        let qd = JointVelocity::new(rates[0][i], rates[1][i], rates[2][i]);
        let speeds = geom.actuator_speeds(&q, &qd);
        let tau = joint_torques(geom, &q).map_err(|e| Error::at_sample(i, e))?.to_array();
        for (k, feat) in actuators.iter_mut().enumerate() {
            let gain = geom.actuator_gain(k, &q);
            let force = static_reaction_force(gain, -tau[k]).map_err(|e| Error::at_sample(i, e))?;
            let flow = meter_in_flow(geom.cylinder(k), speeds[k], epsilon);
            let target = match flow.direction {
                Direction::Extend => log.p_a[k][i],
                Direction::Retract => log.p_b[k][i],
                Direction::Hold => 0.0,
            };
            feat.xdot.push(speeds[k]);
            feat.q_flow.push(flow.q);
            feat.f_static.push(force);
            feat.direction.push(flow.direction);
            feat.target.push(target);
        }
    }
    Ok(FeatureTable {
        geometry_hash: geometry_hash(geom),
        filter: *spec,
        epsilon,
        time: log.time.clone(),
        actuators,
        p_pump: log.p_pump.clone(),
    })
}

/// Featurize with settings from a [`FeatureConfig`], taking the sample
/// period from the log.
pub fn featurize_with(log: &SignalLog, geom: &CraneGeometry, cfg: &FeatureConfig) -> Result<FeatureTable> {
    log.validate()?;
    let spec = cfg.filter_spec(log.dt())?;
    featurize(log, geom, &spec, cfg.epsilon)
}
