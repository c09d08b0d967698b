//! Forward kinematics, point Jacobians and cylinder linkages of the default
//! crane.

use hydrotwin::crane::{JointState, PointSelector};
use hydrotwin::testbed::default_plant;

fn main() -> hydrotwin::Result<()> {
    let geom = default_plant().geometry;
    let q = JointState::new(0.4, -0.6, 0.8);

    let pts = geom.forward_kinematics(&q)?;
    println!("end effector: ({:.4}, {:.4}) m", pts.end_effector[0], pts.end_effector[1]);
    for (k, p) in pts.cg_positions.iter().enumerate() {
        println!("cg {k}: ({:.4}, {:.4})", p[0], p[1]);
    }

    let jac = geom.jacobian_point(&q, PointSelector::EndEffector)?;
    println!("\nend-effector Jacobian (rows x, y):");
    for row in jac {
        println!("  {:>9.4} {:>9.4} {:>9.4}", row[0], row[1], row[2]);
    }

    println!("\nactuator  position      gain");
    for i in 0..3 {
        println!("{:>8}  {:>8.4}  {:>8.4}", i + 1, geom.actuator_position(i, &q), geom.actuator_gain(i, &q));
    }

    // Length back to angle on the boom linkage.
    let len = geom.actuator_position(0, &q);
    println!("\nboom length {len:.6} m -> theta1 {:.6} rad", geom.joint_angle_from_length(0, len)?);
    Ok(())
}
