use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::crane::{JointState, NUM_JOINTS};
use crate::error::{Error, Result};
use crate::io::SignalLog;

use super::plant::{PlantState, SyntheticPlantParams};

/// Constant target joint velocities held for `duration` seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub duration: f64,
    /// rad/s, rad/s, m/s.
    pub velocity: [f64; NUM_JOINTS],
}

/// Piecewise-constant joint velocity commands from an initial pose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandSchedule {
    pub initial: [f64; NUM_JOINTS],
    pub segments: Vec<Segment>,
}

impl CommandSchedule {
    pub fn new(initial: [f64; NUM_JOINTS]) -> Self {
        Self {
            initial,
            segments: Vec::new(),
        }
    }

    /// Append a segment.
    pub fn then(mut self, duration: f64, velocity: [f64; NUM_JOINTS]) -> Self {
        self.segments.push(Segment { duration, velocity });
        self
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Target velocity at time `t`; zero after the last segment.
    pub fn target(&self, t: f64) -> [f64; NUM_JOINTS] {
        self.segment_at(t)
            .map(|k| self.segments[k].velocity)
            .unwrap_or([0.0; NUM_JOINTS])
    }

    fn segment_at(&self, t: f64) -> Option<usize> {
        let mut end = 0.0;
        for (k, s) in self.segments.iter().enumerate() {
            end += s.duration;
            if t < end {
                return Some(k);
            }
        }
        None
    }
}

/// A joint stopped at its limit during simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipEvent {
    pub time: f64,
    pub joint: usize,
    pub position: f64,
}

/// Simulated log plus its noise-free counterpart.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub log: SignalLog,
    pub truth: Vec<PlantState>,
    pub poses: Vec<JointState>,
    pub clips: Vec<ClipEvent>,
}

/// Extra log columns carrying the noise-free plant signals.
pub mod truth_columns {
    pub fn p_a(i: usize) -> String {
        format!("true_p_a{}_pa", i + 1)
    }
    pub fn p_b(i: usize) -> String {
        format!("true_p_b{}_pa", i + 1)
    }
    pub fn working(i: usize) -> String {
        format!("true_p_work{}_pa", i + 1)
    }
    pub fn demand(i: usize) -> String {
        format!("true_demand{}_pa", i + 1)
    }
    pub fn force(i: usize) -> String {
        format!("true_force{}_n", i + 1)
    }
    pub fn xdot(i: usize) -> String {
        format!("true_xdot{}_mps", i + 1)
    }
    pub const PUMP: &str = "true_p_pump_pa";
}

/// Integrate the schedule with acceleration-limited velocity tracking and
/// sample the plant every `dt` seconds.
pub fn simulate(plant: &SyntheticPlantParams, sched: &CommandSchedule, dt: f64, seed: u64) -> Result<Simulation> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    plant.validate()?;
    let truth_geom = plant.true_geometry()?;
    let limits = truth_geom.joint_limits();
    let start = JointState::from_array(sched.initial);
    truth_geom.check_limits(&start)?;

    let n = (sched.duration() / dt).round() as usize + 1;
    let mut pos = sched.initial;
    let mut vel = [0.0; NUM_JOINTS];
    // joints stopped at a limit stay parked until the segment changes
    let mut parked = [false; NUM_JOINTS];
    let mut segment = sched.segment_at(0.0);
    let mut clips = Vec::new();
    let mut poses = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut time = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        if k > 0 {
            let t_prev = (k - 1) as f64 * dt;
            let seg = sched.segment_at(t_prev);
            if seg != segment {
                parked = [false; NUM_JOINTS];
                segment = seg;
            }
            let target = sched.target(t_prev);
            for j in 0..NUM_JOINTS {
                if parked[j] {
                    continue;
                }
                let dv_max = plant.max_accel[j] * dt;
                let v_new = vel[j] + (target[j] - vel[j]).clamp(-dv_max, dv_max);
                let mut p_new = pos[j] + 0.5 * (vel[j] + v_new) * dt;
                vel[j] = v_new;
                let [lo, hi] = limits[j];
                if p_new < lo || p_new > hi {
                    p_new = p_new.clamp(lo, hi);
                    vel[j] = 0.0;
                    parked[j] = true;
                    log::warn!("joint {} clipped at {p_new} (t = {t:.3} s)", j + 1);
                    clips.push(ClipEvent {
                        time: t,
                        joint: j,
                        position: p_new,
                    });
                }
                pos[j] = p_new;
            }
        }
        let q = JointState::from_array(pos);
        states.push(plant.state(&truth_geom, &q, &vel)?);
        poses.push(q);
        time.push(t);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = |std: f64| Normal::new(0.0, std).map_err(|e| Error::Config(e.to_string()));
    let (pn, an, xn) = (
        noise(plant.noise.pressure)?,
        noise(plant.noise.angle)?,
        noise(plant.noise.extension)?,
    );
    let mut log = SignalLog {
        time,
        theta1: Vec::with_capacity(n),
        theta2: Vec::with_capacity(n),
        x_prism: Vec::with_capacity(n),
        p_a: Default::default(),
        p_b: Default::default(),
        p_pump: Vec::with_capacity(n),
        u_cmd: None,
        extras: Vec::new(),
    };
    for (q, s) in poses.iter().zip(&states) {
        log.theta1.push(q.theta1 + an.sample(&mut rng));
        log.theta2.push(q.theta2 + an.sample(&mut rng));
        log.x_prism.push(q.x_prism + xn.sample(&mut rng));
        for i in 0..NUM_JOINTS {
            log.p_a[i].push((s.p_a[i] + pn.sample(&mut rng)).max(0.0));
            log.p_b[i].push((s.p_b[i] + pn.sample(&mut rng)).max(0.0));
        }
        log.p_pump.push((s.pump + pn.sample(&mut rng)).max(0.0));
    }
    for i in 0..NUM_JOINTS {
        let col = |f: &dyn Fn(&PlantState) -> f64| states.iter().map(f).collect::<Vec<f64>>();
        log.set_extra(&truth_columns::p_a(i), col(&|s| s.p_a[i]));
        log.set_extra(&truth_columns::p_b(i), col(&|s| s.p_b[i]));
        log.set_extra(&truth_columns::working(i), col(&|s| s.working[i]));
        log.set_extra(&truth_columns::demand(i), col(&|s| s.demand[i]));
        log.set_extra(&truth_columns::force(i), col(&|s| s.force[i]));
        log.set_extra(&truth_columns::xdot(i), col(&|s| s.xdot[i]));
    }
    log.set_extra(truth_columns::PUMP, states.iter().map(|s| s.pump).collect());
    Ok(Simulation {
        log,
        truth: states,
        poses,
        clips,
    })
}

/// [`simulate`] returning only the log.
pub fn simulate_trajectory(plant: &SyntheticPlantParams, sched: &CommandSchedule, dt: f64, seed: u64) -> Result<SignalLog> {
    simulate(plant, sched, dt, seed).map(|s| s.log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testbed::default_plant;

    #[test]
    fn zero_schedule_holds_still() {
        let plant = default_plant();
        let sched = CommandSchedule::new([0.3, -0.4, 0.2]).then(2.0, [0.0; 3]);
        let sim = simulate(&plant, &sched, 0.01, 1).unwrap();
        assert_eq!(sim.log.len(), 201);
        for s in &sim.truth {
            assert_eq!(s.q_flow, [0.0; 3]);
            assert_eq!(s.pump, plant.standby);
        }
        assert!(sim.poses.iter().all(|q| q.to_array() == [0.3, -0.4, 0.2]));
    }

    #[test]
    fn constant_extension_gives_constant_pressure() {
        let plant = default_plant();
        let sched = CommandSchedule::new([0.5, 0.0, 0.2]).then(3.0, [0.0, 0.0, 0.1]);
        let sim = simulate(&plant, &sched, 0.01, 1).unwrap();
        // after the 0.2 s ramp the prismatic joint moves at 0.1 m/s; its
        // force is constant because the boom angle does not change
        let steady: Vec<&PlantState> = sim.truth[30..].iter().collect();
        let p0 = steady[0].working[2];
        assert!(p0 > 0.0);
        for s in &steady {
            assert!((s.working[2] - p0).abs() < 1e-9 * p0);
            assert!((s.pump - (p0 + plant.margins[2]).max(plant.standby)).abs() < 1e-6);
        }
    }

    #[test]
    fn same_seed_same_log() {
        let plant = default_plant();
        let sched = CommandSchedule::new([0.3, -0.4, 0.2]).then(1.0, [0.05, 0.05, 0.05]);
        let a = simulate_trajectory(&plant, &sched, 0.01, 9).unwrap();
        let b = simulate_trajectory(&plant, &sched, 0.01, 9).unwrap();
        assert_eq!(a, b);
        let c = simulate_trajectory(&plant, &sched, 0.01, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn limit_violation_is_clipped_and_recorded() {
        let plant = default_plant();
        let sched = CommandSchedule::new([1.1, -0.4, 0.0]).then(2.0, [0.2, 0.0, 0.0]);
        let sim = simulate(&plant, &sched, 0.01, 1).unwrap();
        assert_eq!(sim.clips.len(), 1);
        assert_eq!(sim.clips[0].joint, 0);
        assert!(sim.poses.iter().all(|q| q.theta1 <= 1.2));
        assert_eq!(sim.poses.last().unwrap().theta1, 1.2);
    }
}
