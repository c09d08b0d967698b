//! Gravity loads: joint torques by virtual work, static cylinder reaction
//! forces, and the total force measured from chamber pressures.
//!
//! Sign convention for cylinder forces: positive opposes extension, i.e. a
//! positive force is a load the pump has to push against when extending.

use crate::crane::{
    reaction_force_from_gain, CraneGeometry, CylinderGeometry, JointState, PointSelector, GRAVITY,
    NUM_JOINTS,
};
use crate::error::{Error, Result};

/// Gravity force acting at one center of gravity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralizedForce {
    pub point: PointSelector,
    /// `(0, -m g)`.
    pub force: [f64; 2],
}

/// Generalized gravity forces on the joint coordinates.
///
/// These are the torques gravity exerts, so a boom pulled downward gives a
/// negative `tau1`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JointTorques {
    pub tau1: f64,
    pub tau2: f64,
    pub f_prism: f64,
}

impl JointTorques {
    pub fn to_array(self) -> [f64; NUM_JOINTS] {
        [self.tau1, self.tau2, self.f_prism]
    }
}

/// Static reaction force on each actuator (N), positive opposing extension.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ActuatorForces(pub [f64; NUM_JOINTS]);

/// Gravity force of every weight component plus the load.
pub fn generalized_forces(geom: &CraneGeometry, gravity: f64) -> Vec<GeneralizedForce> {
    let mut forces: Vec<GeneralizedForce> = geom
        .weights()
        .iter()
        .enumerate()
        .map(|(k, w)| GeneralizedForce {
            point: PointSelector::Weight(k),
            force: [0.0, -w.mass * gravity],
        })
        .collect();
    if let Some(m) = geom.load() {
        forces.push(GeneralizedForce {
            point: PointSelector::Load,
            force: [0.0, -m * gravity],
        });
    }
    forces
}

/// Joint torques `tau = sum_k J_k^T gamma_k` at static equilibrium.
pub fn joint_torques(geom: &CraneGeometry, q: &JointState) -> Result<JointTorques> {
    geom.check_limits(q)?;
    joint_torques_with_gravity(geom, q, GRAVITY)
}

pub(crate) fn joint_torques_with_gravity(
    geom: &CraneGeometry,
    q: &JointState,
    gravity: f64,
) -> Result<JointTorques> {
    let mut tau = [0.0; NUM_JOINTS];
    for gf in generalized_forces(geom, gravity) {
        let jac = geom.jacobian_unchecked(q, gf.point)?;
        for (j, t) in tau.iter_mut().enumerate() {
            *t += jac[0][j] * gf.force[0] + jac[1][j] * gf.force[1];
        }
    }
    Ok(JointTorques {
        tau1: tau[0],
        tau2: tau[1],
        f_prism: tau[2],
    })
}

/// Total gravitational potential energy `sum m g y`.
pub fn potential_energy(geom: &CraneGeometry, q: &JointState) -> Result<f64> {
    geom.check_limits(q)?;
    let points = geom.forward_kinematics_unchecked(q);
    let masses = geom.weights().iter().map(|w| w.mass).chain(geom.load());
    Ok(masses
        .zip(points.cg_positions.iter())
        .map(|(m, p)| m * GRAVITY * p[1])
        .sum())
}

/// Static reaction force `F = tau / gain`.
pub fn static_reaction_force(gain: f64, tau: f64) -> Result<f64> {
    reaction_force_from_gain(gain, tau)
}

/// Static reaction forces on all three actuators from the gravity load.
///
/// The actuator has to balance the gravity torque, so the force it carries
/// is the co-mapped holding torque `-tau`.
pub fn static_reaction_forces(geom: &CraneGeometry, q: &JointState) -> Result<ActuatorForces> {
    let tau = joint_torques(geom, q)?.to_array();
    let mut forces = [0.0; NUM_JOINTS];
    for (i, f) in forces.iter_mut().enumerate() {
        *f = static_reaction_force(geom.actuator_gain(i, q), -tau[i])?;
    }
    Ok(ActuatorForces(forces))
}

/// Net piston force from the two chamber pressures,
/// `count * (p_a A_a - p_b A_b)`.
pub fn total_force(cyl: &CylinderGeometry, p_a: f64, p_b: f64) -> Result<f64> {
    if !(p_a >= 0.0 && p_b >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "chamber pressures must be non-negative (p_a {p_a}, p_b {p_b})"
        )));
    }
    Ok(p_a * cyl.effective_area_a() - p_b * cyl.effective_area_b())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crane::{CraneGeometrySpec, CylinderLinkage, WeightComponent};

    fn cyl() -> CylinderGeometry {
        CylinderGeometry::new(0.1, 0.05, 2.0, 1).unwrap()
    }

    fn geometry(weights: Vec<WeightComponent>, load: Option<f64>) -> CraneGeometry {
        CraneGeometry::new(CraneGeometrySpec {
            link_lengths: [2.0, 1.5, 0.5],
            weights,
            load,
            linkages: [
                CylinderLinkage::new(0.5, 1.0, 1.0, cyl()).unwrap(),
                CylinderLinkage::new(0.4, 0.8, 1.7, cyl()).unwrap(),
            ],
            prism_cylinder: cyl(),
            joint_limits: [[-0.5, 1.5], [-1.5, 1.2], [0.0, 1.5]],
        })
        .unwrap()
    }

    #[test]
    fn massless_crane_has_no_torque() {
        let g = geometry(vec![WeightComponent::new(0.0, [1.0, 0.0], 0)], Some(0.0));
        let t = joint_torques(&g, &JointState::new(0.3, 0.2, 0.4)).unwrap();
        assert_eq!(t.to_array(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn point_mass_moment_arm() {
        let (m, d) = (120.0, 1.3);
        let g = geometry(vec![WeightComponent::new(m, [d, 0.0], 0)], None);
        let t = joint_torques(&g, &JointState::new(0.0, 0.4, 0.2)).unwrap();
        assert!((t.tau1 + m * GRAVITY * d).abs() < 1e-10);
        assert_eq!(t.tau2, 0.0);
        assert_eq!(t.f_prism, 0.0);
    }

    #[test]
    fn torque_is_negative_energy_gradient() {
        let g = geometry(
            vec![
                WeightComponent::new(300.0, [1.0, 0.1], 0),
                WeightComponent::new(150.0, [0.7, -0.05], 1),
                WeightComponent::new(80.0, [-0.2, 0.0], 2),
            ],
            Some(250.0),
        );
        let q = JointState::new(0.4, -0.6, 0.7);
        let t = joint_torques(&g, &q).unwrap().to_array();
        let h = 1e-6;
        for j in 0..3 {
            let mut plus = q.to_array();
            let mut minus = q.to_array();
            plus[j] += h;
            minus[j] -= h;
            let fd = -(potential_energy(&g, &JointState::from_array(plus)).unwrap()
                - potential_energy(&g, &JointState::from_array(minus)).unwrap())
                / (2.0 * h);
            assert!((fd - t[j]).abs() <= 1e-5 * t[j].abs().max(1.0), "{j}: {fd} vs {}", t[j]);
        }
    }

    #[test]
    fn superposition_of_masses() {
        let w = |m| vec![WeightComponent::new(m, [0.9, 0.1], 1)];
        let q = JointState::new(0.2, 0.3, 0.0);
        let single = joint_torques(&geometry(w(40.0), None), &q).unwrap().to_array();
        let double = joint_torques(&geometry(w(80.0), None), &q).unwrap().to_array();
        for j in 0..3 {
            assert_eq!(double[j], 2.0 * single[j]);
        }
    }

    #[test]
    fn reaction_force_division() {
        assert_eq!(static_reaction_force(0.5, 0.0).unwrap(), 0.0);
        assert_eq!(static_reaction_force(0.5, 1000.0).unwrap(), 2000.0);
        assert!(matches!(
            static_reaction_force(1e-12, 5.0),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn reaction_force_power_balance() {
        let l = CylinderLinkage::new(0.5, 1.0, 1.0, cyl()).unwrap();
        let (theta, tau, rate) = (0.7, -3456.7, 0.123);
        let f = l.static_reaction_force(theta, tau).unwrap();
        let v = l.cylinder_speed(theta, rate);
        assert!((f * v - tau * rate).abs() <= 1e-12 * (tau * rate).abs());
    }

    #[test]
    fn lifting_load_compresses_cylinder() {
        let g = geometry(vec![WeightComponent::new(500.0, [1.0, 0.0], 0)], None);
        let f = static_reaction_forces(&g, &JointState::new(0.2, 0.0, 0.0)).unwrap();
        assert!(f.0[0] > 0.0);
    }

    #[test]
    fn total_force_values() {
        let c = cyl();
        assert_eq!(total_force(&c, 0.0, 0.0).unwrap(), 0.0);
        assert!(total_force(&c, -1.0, 0.0).is_err());
        // 10 MPa on 0.01 m^2 against 5 MPa on 0.005 m^2
        let d_a = (0.01 / std::f64::consts::FRAC_PI_4).sqrt();
        let d_rod = (0.005 / std::f64::consts::FRAC_PI_4).sqrt();
        let c = CylinderGeometry::new(d_a, d_rod, 1.0, 1).unwrap();
        let f = total_force(&c, 10e6, 5e6).unwrap();
        assert!((f - 75_000.0).abs() < 1e-6);
        let p = 3e6;
        let f = total_force(&c, p, p).unwrap();
        assert!((f - p * (c.area_a() - c.area_b())).abs() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pose() -> impl Strategy<Value = JointState> {
            (-0.49f64..1.49, -1.49f64..1.19, 0.001f64..1.49)
                .prop_map(|(a, b, x)| JointState::new(a, b, x))
        }

        fn weights(m: [f64; 3]) -> Vec<WeightComponent> {
            vec![
                WeightComponent::new(m[0], [1.0, 0.1], 0),
                WeightComponent::new(m[1], [0.7, -0.05], 1),
                WeightComponent::new(m[2], [0.2, 0.0], 2),
            ]
        }

        proptest! {
            #[test]
            fn torques_superpose(q in pose(), m in prop::array::uniform3(0.0f64..500.0),
                                 n in prop::array::uniform3(0.0f64..500.0), load in 0.0f64..300.0) {
                let mut both = weights(m);
                both.extend(weights(n));
                let t_both = joint_torques(&geometry(both, Some(load)), &q).unwrap().to_array();
                let t_m = joint_torques(&geometry(weights(m), Some(load)), &q).unwrap().to_array();
                let t_n = joint_torques(&geometry(weights(n), None), &q).unwrap().to_array();
                for j in 0..NUM_JOINTS {
                    let sum = t_m[j] + t_n[j];
                    prop_assert!((t_both[j] - sum).abs() <= 1e-9 * (1.0 + sum.abs()));
                }
            }

            #[test]
            fn torque_is_minus_energy_gradient(q in pose(), m in prop::array::uniform3(1.0f64..500.0)) {
                let g = geometry(weights(m), Some(100.0));
                let tau = joint_torques(&g, &q).unwrap().to_array();
                let h = 1e-6;
                for j in 0..NUM_JOINTS {
                    let mut lo = q.to_array();
                    let mut hi = q.to_array();
                    lo[j] -= h;
                    hi[j] += h;
                    let du = potential_energy(&g, &JointState::from_array(hi)).unwrap()
                        - potential_energy(&g, &JointState::from_array(lo)).unwrap();
                    let grad = du / (2.0 * h);
                    prop_assert!((tau[j] + grad).abs() <= 1e-5 * (1.0 + grad.abs()), "{}: {} vs {}", j, tau[j], -grad);
                }
            }

            #[test]
            fn actuator_power_equals_joint_power(q in pose(), m in prop::array::uniform3(1.0f64..500.0),
                                                 rates in prop::array::uniform3(-0.5f64..0.5)) {
                let g = geometry(weights(m), Some(50.0));
                let tau = joint_torques(&g, &q).unwrap().to_array();
                let forces = static_reaction_forces(&g, &q).unwrap().0;
                let speeds = g.actuator_speeds(&q, &crate::crane::JointVelocity::from_array(rates));
                let p_act: f64 = forces.iter().zip(&speeds).map(|(f, v)| f * v).sum();
                let p_joint: f64 = tau.iter().zip(&rates).map(|(t, r)| -t * r).sum();
                let scale: f64 = tau.iter().zip(&rates).map(|(t, r)| (t * r).abs()).sum();
                prop_assert!((p_act - p_joint).abs() <= 1e-12 * (1.0 + scale));
            }
        }
    }
}
