//! Gravity torques and static actuator forces along a jib sweep, with a
//! check that actuator power matches joint power.

use hydrotwin::crane::{JointState, JointVelocity};
use hydrotwin::load::{joint_torques, static_reaction_forces};
use hydrotwin::testbed::default_plant;

fn main() -> hydrotwin::Result<()> {
    let geom = default_plant().geometry;
    println!("{:>8} {:>12} {:>12} {:>12} {:>12}", "theta2", "tau2 (Nm)", "F1 (N)", "F2 (N)", "F3 (N)");
    let [lo, hi] = geom.joint_limits()[1];
    for k in 0..=8 {
        let theta2 = (lo + (hi - lo) * k as f64 / 8.0).min(hi);
        let q = JointState::new(0.3, theta2, 0.5);
        let tau = joint_torques(&geom, &q)?;
        let f = static_reaction_forces(&geom, &q)?.0;
        println!("{theta2:>8.3} {:>12.1} {:>12.1} {:>12.1} {:>12.1}", tau.tau2, f[0], f[1], f[2]);
    }

    let q = JointState::new(0.3, -0.2, 0.5);
    let qd = JointVelocity::new(0.05, -0.08, 0.1);
    let tau = joint_torques(&geom, &q)?.to_array();
    let f = static_reaction_forces(&geom, &q)?.0;
    let v = geom.actuator_speeds(&q, &qd);
    let p_act: f64 = f.iter().zip(&v).map(|(f, v)| f * v).sum();
    let p_joint: f64 = tau.iter().zip(qd.to_array()).map(|(t, r)| -t * r).sum();
    println!("\npower: actuators {p_act:.6} W, joints {p_joint:.6} W");
    Ok(())
}
