use crate::crane::{JointState, NUM_JOINTS};
use crate::error::{Error, Result};

use super::plant::SyntheticPlantParams;
use super::sim::{simulate, CommandSchedule, Simulation};

pub const EXPERIMENT_NAMES: [&str; 5] = ["I", "II", "III", "IV", "V"];

/// Default sample period of the suite (s).
pub const SUITE_DT: f64 = 0.01;

/// One scenario of the suite.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub name: &'static str,
    pub schedule: CommandSchedule,
    pub simulation: Simulation,
}

const HOME: [f64; NUM_JOINTS] = [0.1, -0.5, 0.0];

/// I: the two revolute actuators only, extension fully retracted.
fn schedule_i() -> CommandSchedule {
    CommandSchedule::new(HOME)
        .then(1.0, [0.0, 0.0, 0.0])
        .then(5.0, [0.08, 0.0, 0.0])
        .then(1.0, [0.0, 0.0, 0.0])
        .then(5.0, [0.0, 0.1, 0.0])
        .then(1.0, [0.0, 0.0, 0.0])
        .then(3.0, [0.15, -0.08, 0.0])
        .then(1.0, [0.0, 0.0, 0.0])
        .then(4.0, [-0.12, 0.0, 0.0])
        .then(4.0, [0.0, -0.12, 0.0])
        .then(4.0, [0.05, 0.15, 0.0])
        .then(1.0, [0.0, 0.0, 0.0])
        .then(4.0, [-0.1, -0.1, 0.0])
        .then(1.0, [0.0, 0.0, 0.0])
}

/// II: all actuators, wide speed and pose coverage, including the jib
/// raised past vertical.
fn schedule_ii() -> CommandSchedule {
    CommandSchedule::new(HOME)
        .then(1.0, [0.0, 0.0, 0.0])
        .then(4.0, [0.06, 0.05, 0.1])
        .then(3.0, [0.0, 0.0, 0.3])
        .then(1.0, [0.0, 0.0, 0.0])
        .then(3.0, [0.1, 0.08, -0.2])
        .then(2.0, [0.0, 0.12, 0.15])
        .then(3.0, [0.12, 0.0, -0.1])
        .then(1.0, [0.0, 0.0, 0.0])
        .then(3.0, [0.0, 0.1, 0.25])
        .then(3.0, [0.0, -0.1, -0.25])
        .then(3.0, [0.05, 0.12, 0.0])
        .then(4.0, [0.0, -0.15, 0.2])
        .then(3.0, [-0.1, 0.0, -0.2])
        .then(3.0, [-0.05, -0.08, 0.05])
        .then(1.0, [0.0, 0.0, 0.0])
}

/// III: jib alone, then boom joins and takes over, then boom alone.
fn schedule_iii() -> CommandSchedule {
    CommandSchedule::new(HOME)
        .then(4.0, [0.0, 0.08, 0.0])
        .then(4.0, [0.1, 0.08, 0.0])
        .then(4.0, [0.1, 0.0, 0.0])
        .then(2.0, [0.0, 0.0, 0.0])
}

/// IV: jib alone, then a fast extension joins and takes over, then the
/// extension alone.
fn schedule_iv() -> CommandSchedule {
    CommandSchedule::new([0.4, -0.8, 0.2])
        .then(4.0, [0.0, 0.08, 0.0])
        .then(3.0, [0.0, 0.08, 0.28])
        .then(3.0, [0.0, 0.0, 0.2])
        .then(2.0, [0.0, 0.0, 0.0])
}

const V_START: [f64; NUM_JOINTS] = [0.3, -0.5, 0.1];
const V_BOOM_RATE: f64 = 0.06;
const V_FINAL: f64 = 3.0;

/// V: fast extension, then a slow extension while the boom takes over,
/// then an extension speed that brings both working pressures together.
/// The boom stops first so the extension keeps the lead through the stop.
fn schedule_v(ext_matched: f64) -> CommandSchedule {
    CommandSchedule::new(V_START)
        .then(3.0, [0.0, 0.0, 0.3])
        .then(4.0, [V_BOOM_RATE, 0.0, 0.05])
        .then(V_FINAL, [V_BOOM_RATE, 0.0, ext_matched])
        .then(1.0, [0.0, 0.0, ext_matched])
        .then(2.0, [0.0, 0.0, 0.0])
}

/// Extension speed at which the extension's working pressure equals the
/// boom's at the middle of V's final segment.
fn matched_extension_speed(plant: &SyntheticPlantParams) -> Result<f64> {
    let truth = plant.true_geometry()?;
    let sched = schedule_v(0.05);
    let before: f64 = sched.segments[..2].iter().map(|s| s.duration).sum();
    let ext_before = 3.0 * 0.3 + 4.0 * 0.05;
    let mid = JointState::new(
        V_START[0] + V_BOOM_RATE * (before - 3.0 + 0.5 * V_FINAL),
        V_START[1],
        V_START[2] + ext_before,
    );
    let gap = |v: f64| -> Result<f64> {
        let s = plant.state(&truth, &mid, &[V_BOOM_RATE, 0.0, v])?;
        Ok(s.working[2] - s.working[0])
    };
    let (mut lo, mut hi) = (0.01, 0.6);
    if gap(lo)? > 0.0 || gap(hi)? < 0.0 {
        return Err(Error::Config(
            "plant cannot match boom and extension pressures in experiment V".into(),
        ));
    }
    for _ in 0..60 {
        let m = 0.5 * (lo + hi);
        if gap(m)? < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The five scenarios, each simulated with its own seed derived from `seed`.
pub fn experiment_schedules(plant: &SyntheticPlantParams) -> Result<Vec<(&'static str, CommandSchedule)>> {
    Ok(vec![
        ("I", schedule_i()),
        ("II", schedule_ii()),
        ("III", schedule_iii()),
        ("IV", schedule_iv()),
        ("V", schedule_v(matched_extension_speed(plant)?)),
    ])
}

pub fn experiment_suite(plant: &SyntheticPlantParams, dt: f64, seed: u64) -> Result<Vec<Experiment>> {
    experiment_schedules(plant)?
        .into_iter()
        .enumerate()
        .map(|(k, (name, schedule))| {
            let simulation = simulate(plant, &schedule, dt, seed.wrapping_add(k as u64))?;
            Ok(Experiment {
                name,
                schedule,
                simulation,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Direction;
    use crate::pressure::{elevated_demands, PumpModel};
    use crate::testbed::default_plant;

    fn suite() -> (SyntheticPlantParams, Vec<Experiment>) {
        let plant = default_plant();
        let s = experiment_suite(&plant, SUITE_DT, 3).unwrap();
        (plant, s)
    }

    /// Run-length sequence of the actuator with the highest demand, over
    /// samples where at least one actuator moves.
    fn handovers(e: &Experiment) -> Vec<usize> {
        let mut seq: Vec<usize> = Vec::new();
        for s in &e.simulation.truth {
            if s.q_flow.iter().all(|q| *q == 0.0) {
                continue;
            }
            let mut best = 0;
            for i in 1..NUM_JOINTS {
                if s.demand[i] > s.demand[best] {
                    best = i;
                }
            }
            if seq.last() != Some(&best) {
                seq.push(best);
            }
        }
        seq
    }

    #[test]
    fn five_logs_without_clipping() {
        let (_, s) = suite();
        assert_eq!(s.iter().map(|e| e.name).collect::<Vec<_>>(), EXPERIMENT_NAMES);
        for e in &s {
            assert!(e.simulation.clips.is_empty(), "{} clipped", e.name);
        }
    }

    #[test]
    fn log_i_keeps_extension_fixed() {
        let (_, s) = suite();
        for st in &s[0].simulation.truth {
            assert_eq!(st.q_flow[2], 0.0);
            assert_eq!(st.xdot[2], 0.0);
        }
        assert!(s[0].simulation.poses.iter().all(|q| q.x_prism == 0.0));
    }

    #[test]
    fn log_ii_moves_every_actuator() {
        let (_, s) = suite();
        for i in 0..NUM_JOINTS {
            assert!(s[1].simulation.truth.iter().any(|st| st.q_flow[i] > 0.0));
            assert!(s[1].simulation.truth.iter().any(|st| st.q_flow[i] < 0.0));
        }
    }

    #[test]
    fn takeover_sequences() {
        let (_, s) = suite();
        assert_eq!(handovers(&s[2]), vec![1, 0]);
        assert_eq!(handovers(&s[3]), vec![1, 2]);
        assert_eq!(handovers(&s[4]), vec![2, 0, 2]);
    }

    #[test]
    fn log_v_ends_with_close_pressures() {
        let (_, s) = suite();
        let v = &s[4];
        // last second of the matched segment
        let end: f64 = v.schedule.segments[..3].iter().map(|s| s.duration).sum();
        let (k0, k1) = (((end - 1.0) / SUITE_DT).round() as usize, (end / SUITE_DT).round() as usize);
        for st in &v.simulation.truth[k0..k1] {
            let (a, b) = (st.working[0], st.working[2]);
            assert!(a > 0.0 && b > 0.0);
            assert!((a - b).abs() < 0.1 * 0.5 * (a + b), "{a} {b}");
        }
    }

    #[test]
    fn some_retraction_is_pulled_by_gravity() {
        let (_, s) = suite();
        let clamped = s
            .iter()
            .flat_map(|e| &e.simulation.truth)
            .filter(|st| (0..NUM_JOINTS).any(|i| st.direction[i] == Direction::Retract && st.working[i] == 0.0))
            .count();
        assert!(clamped > 0);
    }

    #[test]
    fn pump_composition_on_every_sample() {
        let (plant, s) = suite();
        let pump = PumpModel::new(plant.margins.to_vec(), plant.standby).unwrap();
        for e in &s {
            for st in &e.simulation.truth {
                let elevated = elevated_demands(&st.working, &st.q_flow, &pump).unwrap();
                let expect = elevated.iter().fold(plant.standby, |a, v| a.max(*v));
                assert!((st.pump - expect).abs() <= 1e-9 * expect);
                assert!(st.pump >= plant.standby);
                for i in 0..NUM_JOINTS {
                    if st.q_flow[i] != 0.0 {
                        assert!(st.pump >= st.working[i]);
                    }
                }
            }
        }
    }
}
