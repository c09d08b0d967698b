//! Meter-in flow from piston speed (ideal volumetric continuity) and motion
//! direction classification.

use serde::{Deserialize, Serialize};

use crate::crane::CylinderGeometry;

/// Default velocity deadband (m/s) below which a piston counts as holding.
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Extend,
    Hold,
    Retract,
}

impl Direction {
    /// `+1`, `0`, `-1`.
    pub fn sign(self) -> i8 {
        match self {
            Direction::Extend => 1,
            Direction::Hold => 0,
            Direction::Retract => -1,
        }
    }

    pub fn from_sign(s: i8) -> Option<Self> {
        match s {
            1 => Some(Direction::Extend),
            0 => Some(Direction::Hold),
            -1 => Some(Direction::Retract),
            _ => None,
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            Direction::Extend => Direction::Retract,
            Direction::Hold => Direction::Hold,
            Direction::Retract => Direction::Extend,
        }
    }
}

/// Signed meter-in flow (m^3/s) and the direction it was classified under.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowSample {
    pub q: f64,
    pub direction: Direction,
}

/// Extend above `epsilon`, retract below `-epsilon`, hold otherwise
/// (inclusive at the boundary).
pub fn classify_direction(xdot: f64, epsilon: f64) -> Direction {
    if xdot > epsilon {
        Direction::Extend
    } else if xdot < -epsilon {
        Direction::Retract
    } else {
        Direction::Hold
    }
}

/// Flow into the driving chamber: piston side when extending, rod side
/// (negative) when retracting, zero inside the deadband.
pub fn meter_in_flow(cyl: &CylinderGeometry, xdot: f64, epsilon: f64) -> FlowSample {
    let direction = classify_direction(xdot, epsilon);
    let q = match direction {
        Direction::Extend => cyl.effective_area_a() * xdot,
        Direction::Retract => cyl.effective_area_b() * xdot,
        Direction::Hold => 0.0,
    };
    FlowSample { q, direction }
}

/// Piston speed for a signed meter-in flow; inverse of [`meter_in_flow`]
/// outside the deadband.
pub fn rate_from_flow(cyl: &CylinderGeometry, q: f64) -> f64 {
    if q > 0.0 {
        q / cyl.effective_area_a()
    } else if q < 0.0 {
        q / cyl.effective_area_b()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Cylinder with area_a = 0.01 and area_b = 0.006.
    fn cyl() -> CylinderGeometry {
        let d = (0.01 / std::f64::consts::FRAC_PI_4).sqrt();
        let rod = (0.004 / std::f64::consts::FRAC_PI_4).sqrt();
        CylinderGeometry::new(d, rod, 1.0, 1).unwrap()
    }

    #[test]
    fn flow_examples() {
        let c = cyl();
        let s = meter_in_flow(&c, 0.0, DEFAULT_EPSILON);
        assert_eq!((s.q, s.direction), (0.0, Direction::Hold));
        let s = meter_in_flow(&c, 0.1, DEFAULT_EPSILON);
        assert!((s.q - 1.0e-3).abs() < 1e-15);
        assert_eq!(s.direction, Direction::Extend);
        let s = meter_in_flow(&c, -0.1, DEFAULT_EPSILON);
        assert!((s.q + 6.0e-4).abs() < 1e-15);
        assert_eq!(s.direction, Direction::Retract);
    }

    #[test]
    fn rate_examples() {
        let c = cyl();
        assert_eq!(rate_from_flow(&c, 0.0), 0.0);
        assert!((rate_from_flow(&c, 1.0e-3) - 0.1).abs() < 1e-14);
    }

    #[test]
    fn count_scales_flow() {
        let c = CylinderGeometry::new(0.1, 0.05, 1.0, 3).unwrap();
        let s = meter_in_flow(&c, 0.2, DEFAULT_EPSILON);
        assert!((s.q - 3.0 * c.area_a() * 0.2).abs() < 1e-15);
    }

    #[test]
    fn direction_boundaries() {
        let eps = 1e-3;
        assert_eq!(classify_direction(0.0, eps), Direction::Hold);
        assert_eq!(classify_direction(2.0 * eps, eps), Direction::Extend);
        assert_eq!(classify_direction(-2.0 * eps, eps), Direction::Retract);
        assert_eq!(classify_direction(eps, eps), Direction::Hold);
        assert_eq!(classify_direction(-eps, eps), Direction::Hold);
    }

    proptest! {
        #[test]
        fn flow_roundtrip(v in prop_oneof![-2.0f64..-1.001e-3, 1.001e-3f64..2.0]) {
            let c = cyl();
            let s = meter_in_flow(&c, v, DEFAULT_EPSILON);
            let back = rate_from_flow(&c, s.q);
            prop_assert!((back - v).abs() <= 1e-12 * v.abs());
            prop_assert_eq!(s.q.signum(), v.signum());
        }

        #[test]
        fn direction_is_antisymmetric(v in -0.1f64..0.1, eps in 1e-4f64..1e-2) {
            prop_assert_eq!(classify_direction(-v, eps), classify_direction(v, eps).mirrored());
        }
    }
}
