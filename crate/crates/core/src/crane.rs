//! Planar kinematics of a three-joint loader crane.
//!
//! The crane has two revolute joints followed by one prismatic joint:
//!
//! ```text
//!  joint 1 (base pivot) --link 1--> joint 2 --link 2--> extension --> end effector
//! ```
//!
//! Link 1 points along `theta1` measured from the horizontal. Link 2 and the
//! extension share the absolute direction `theta1 + theta2`. The extension
//! frame sits at `l2 + x_prism` along link 2 and the end effector a further
//! `l3` beyond it. Each revolute joint is driven by a cylinder mounted as a
//! two-pin triangle; the prismatic joint is driven directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gravitational acceleration used for all weight forces.
pub const GRAVITY: f64 = 9.81;

/// Number of joints, and of actuators (one per joint).
pub const NUM_JOINTS: usize = 3;

const JOINT_NAMES: [&str; NUM_JOINTS] = ["theta1", "theta2", "x_prism"];

/// Crane pose.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub theta1: f64,
    pub theta2: f64,
    pub x_prism: f64,
}

impl JointState {
    pub fn new(theta1: f64, theta2: f64, x_prism: f64) -> Self {
        Self {
            theta1,
            theta2,
            x_prism,
        }
    }

    pub fn to_array(self) -> [f64; NUM_JOINTS] {
        [self.theta1, self.theta2, self.x_prism]
    }

    pub fn from_array(a: [f64; NUM_JOINTS]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Rate of change of a [`JointState`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JointVelocity {
    pub dtheta1: f64,
    pub dtheta2: f64,
    pub dx_prism: f64,
}

impl JointVelocity {
    pub fn new(dtheta1: f64, dtheta2: f64, dx_prism: f64) -> Self {
        Self {
            dtheta1,
            dtheta2,
            dx_prism,
        }
    }

    pub fn to_array(self) -> [f64; NUM_JOINTS] {
        [self.dtheta1, self.dtheta2, self.dx_prism]
    }

    pub fn from_array(a: [f64; NUM_JOINTS]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Hydraulic cylinder dimensions.
///
/// `count` identical cylinders act as one equivalent actuator sharing a single
/// displacement, so flows and forces scale with `count`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CylinderGeometryDef", into = "CylinderGeometryDef")]
pub struct CylinderGeometry {
    piston_diameter: f64,
    rod_diameter: f64,
    stroke: f64,
    count: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CylinderGeometryDef {
    piston_diameter: f64,
    rod_diameter: f64,
    stroke: f64,
    #[serde(default = "one")]
    count: u32,
}

fn one() -> u32 {
    1
}

impl TryFrom<CylinderGeometryDef> for CylinderGeometry {
    type Error = Error;
    fn try_from(d: CylinderGeometryDef) -> Result<Self> {
        CylinderGeometry::new(d.piston_diameter, d.rod_diameter, d.stroke, d.count)
    }
}

impl From<CylinderGeometry> for CylinderGeometryDef {
    fn from(c: CylinderGeometry) -> Self {
        Self {
            piston_diameter: c.piston_diameter,
            rod_diameter: c.rod_diameter,
            stroke: c.stroke,
            count: c.count,
        }
    }
}

impl CylinderGeometry {
    pub fn new(piston_diameter: f64, rod_diameter: f64, stroke: f64, count: u32) -> Result<Self> {
        let all_finite = [piston_diameter, rod_diameter, stroke]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || piston_diameter <= 0.0 || rod_diameter <= 0.0 {
            return Err(Error::Geometry(format!(
                "cylinder diameters must be positive (piston {piston_diameter}, rod {rod_diameter})"
            )));
        }
        if rod_diameter >= piston_diameter {
            return Err(Error::Geometry(format!(
                "rod diameter {rod_diameter} must be smaller than piston diameter {piston_diameter}"
            )));
        }
        if stroke <= 0.0 {
            return Err(Error::Geometry(format!("stroke {stroke} must be positive")));
        }
        if count == 0 {
            return Err(Error::Geometry("cylinder count must be at least 1".into()));
        }
        Ok(Self {
            piston_diameter,
            rod_diameter,
            stroke,
            count,
        })
    }

    pub fn piston_diameter(&self) -> f64 {
        self.piston_diameter
    }

    pub fn rod_diameter(&self) -> f64 {
        self.rod_diameter
    }

    pub fn stroke(&self) -> f64 {
        self.stroke
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    /// Piston-side area of one cylinder.
    pub fn area_a(&self) -> f64 {
        std::f64::consts::FRAC_PI_4 * self.piston_diameter.powi(2)
    }

    /// Rod-side (annulus) area of one cylinder.
    pub fn area_b(&self) -> f64 {
        std::f64::consts::FRAC_PI_4 * (self.piston_diameter.powi(2) - self.rod_diameter.powi(2))
    }

    /// Piston-side area of the whole actuator (`count` cylinders).
    pub fn effective_area_a(&self) -> f64 {
        f64::from(self.count) * self.area_a()
    }

    pub fn effective_area_b(&self) -> f64 {
        f64::from(self.count) * self.area_b()
    }
}

/// Two-pin triangle mount of a cylinder driving a revolute joint.
///
/// Base pin at distance `a` from the pivot, rod pin at distance `b`. The
/// angle between the two mount arms is `theta + theta0`, so the cylinder
/// length follows the law of cosines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderLinkage {
    pub a: f64,
    pub b: f64,
    pub theta0: f64,
    pub cylinder: CylinderGeometry,
}

impl CylinderLinkage {
    pub fn new(a: f64, b: f64, theta0: f64, cylinder: CylinderGeometry) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && theta0.is_finite()) || a <= 0.0 || b <= 0.0 {
            return Err(Error::Geometry(format!(
                "linkage mount distances must be positive (a {a}, b {b})"
            )));
        }
        Ok(Self {
            a,
            b,
            theta0,
            cylinder,
        })
    }

    /// Cylinder pin-to-pin length at joint angle `theta`.
    pub fn length(&self, theta: f64) -> f64 {
        let (a, b) = (self.a, self.b);
        (a * a + b * b - 2.0 * a * b * (theta + self.theta0).cos())
            .max(0.0)
            .sqrt()
    }

    /// Open interval of lengths the triangle can take.
    pub fn length_bounds(&self) -> (f64, f64) {
        ((self.a - self.b).abs(), self.a + self.b)
    }

    /// Inverse of [`length`](Self::length) on the branch where the mount
    /// angle lies in `(0, pi)`, the branch on which the gain is positive.
    pub fn angle_from_length(&self, length: f64) -> Result<f64> {
        let (lo, hi) = self.length_bounds();
        if !(length > lo && length < hi) {
            return Err(Error::LengthOutOfRange { length, lo, hi });
        }
        let (a, b) = (self.a, self.b);
        let cos_phi = (a * a + b * b - length * length) / (2.0 * a * b);
        // atan2 keeps precision near the ends of the range where acos is flat.
        let sin_phi = (1.0 - cos_phi * cos_phi).max(0.0).sqrt();
        Ok(sin_phi.atan2(cos_phi) - self.theta0)
    }

    /// dC/dtheta.
    pub fn gain(&self, theta: f64) -> f64 {
        let c = self.length(theta);
        self.a * self.b * (theta + self.theta0).sin() / c
    }

    /// Piston speed produced by joint rate `dtheta`.
    pub fn cylinder_speed(&self, theta: f64, dtheta: f64) -> f64 {
        self.gain(theta) * dtheta
    }

    /// Cylinder force equivalent to joint torque `tau`, by the co-mapping
    /// `F = tau / (dC/dtheta)`.
    pub fn static_reaction_force(&self, theta: f64, tau: f64) -> Result<f64> {
        reaction_force_from_gain(self.gain(theta), tau)
    }
}

pub(crate) const MIN_GAIN: f64 = 1e-9;

pub(crate) fn reaction_force_from_gain(gain: f64, tau: f64) -> Result<f64> {
    if !(gain.abs() >= MIN_GAIN) {
        return Err(Error::Singular { gain });
    }
    Ok(tau / gain)
}

/// Point mass rigidly attached to one link.
///
/// `offset` is `(along, normal)` in the owning link's frame. Link indices:
/// 0 = link 1 (frame at joint 1), 1 = link 2 (frame at joint 2), 2 = the
/// extension (frame at `l2 + x_prism` along link 2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightComponent {
    pub mass: f64,
    pub offset: [f64; 2],
    pub link: usize,
}

impl WeightComponent {
    pub fn new(mass: f64, offset: [f64; 2], link: usize) -> Self {
        Self { mass, offset, link }
    }
}

/// Which point of the crane a Jacobian is taken at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointSelector {
    EndEffector,
    /// Center of gravity of weight component `k`.
    Weight(usize),
    /// The end-effector load (same location as the end effector).
    Load,
}

/// Planar positions of the end effector and every center of gravity.
#[derive(Clone, Debug, PartialEq)]
pub struct CranePoints {
    pub end_effector: [f64; 2],
    /// One per weight component, followed by the load if present.
    pub cg_positions: Vec<[f64; 2]>,
}

/// Raw, unvalidated description of a crane; the on-disk form of
/// [`CraneGeometry`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CraneGeometrySpec {
    /// `[l1, l2, l3]`: joint 1 to joint 2, joint 2 to the extension frame
    /// when retracted, extension frame to end effector.
    pub link_lengths: [f64; 3],
    #[serde(default)]
    pub weights: Vec<WeightComponent>,
    /// End-effector load mass (kg).
    #[serde(default)]
    pub load: Option<f64>,
    /// Linkages of the two revolute actuators.
    pub linkages: [CylinderLinkage; 2],
    pub prism_cylinder: CylinderGeometry,
    /// `[lo, hi]` per joint.
    pub joint_limits: [[f64; 2]; 3],
}

/// Validated crane geometry. Construct through [`CraneGeometry::new`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CraneGeometrySpec", into = "CraneGeometrySpec")]
pub struct CraneGeometry {
    spec: CraneGeometrySpec,
}

impl TryFrom<CraneGeometrySpec> for CraneGeometry {
    type Error = Error;
    fn try_from(spec: CraneGeometrySpec) -> Result<Self> {
        CraneGeometry::new(spec)
    }
}

impl From<CraneGeometry> for CraneGeometrySpec {
    fn from(g: CraneGeometry) -> Self {
        g.spec
    }
}

struct LinkFrame {
    origin: [f64; 2],
    along: [f64; 2],
    normal: [f64; 2],
}

impl LinkFrame {
    fn point(&self, offset: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + offset[0] * self.along[0] + offset[1] * self.normal[0],
            self.origin[1] + offset[0] * self.along[1] + offset[1] * self.normal[1],
        ]
    }
}

impl CraneGeometry {
    pub fn new(spec: CraneGeometrySpec) -> Result<Self> {
        if spec.link_lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::Geometry(format!(
                "link lengths must be positive, got {:?}",
                spec.link_lengths
            )));
        }
        for (k, w) in spec.weights.iter().enumerate() {
            if !(w.mass.is_finite() && w.mass >= 0.0) {
                return Err(Error::Geometry(format!(
                    "weight {k}: mass {} must be non-negative",
                    w.mass
                )));
            }
            if w.link >= NUM_JOINTS {
                return Err(Error::Geometry(format!(
                    "weight {k}: link index {} out of range",
                    w.link
                )));
            }
            if !w.offset.iter().all(|v| v.is_finite()) {
                return Err(Error::Geometry(format!("weight {k}: non-finite offset")));
            }
        }
        if let Some(m) = spec.load {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::Geometry(format!("load mass {m} must be non-negative")));
            }
        }
        for (j, [lo, hi]) in spec.joint_limits.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Geometry(format!(
                    "joint {}: limits [{lo}, {hi}] must satisfy lo < hi",
                    JOINT_NAMES[j]
                )));
            }
        }
        for (j, linkage) in spec.linkages.iter().enumerate() {
            let linkage = CylinderLinkage::new(
                linkage.a,
                linkage.b,
                linkage.theta0,
                linkage.cylinder.clone(),
            )?;
            let [lo, hi] = spec.joint_limits[j];
            // gain > 0 exactly when the mount angle stays inside (0, pi).
            if !(lo + linkage.theta0 > 0.0 && hi + linkage.theta0 < std::f64::consts::PI) {
                return Err(Error::Geometry(format!(
                    "actuator {}: mount angle range [{}, {}] leaves (0, pi), linkage gain would not stay positive",
                    j + 1,
                    lo + linkage.theta0,
                    hi + linkage.theta0
                )));
            }
            let travel = linkage.length(hi) - linkage.length(lo);
            if travel > linkage.cylinder.stroke() {
                return Err(Error::Geometry(format!(
                    "actuator {}: joint range needs {travel:.4} m of travel, stroke is {}",
                    j + 1,
                    linkage.cylinder.stroke()
                )));
            }
        }
        let [lo, hi] = spec.joint_limits[2];
        if hi - lo > spec.prism_cylinder.stroke() {
            return Err(Error::Geometry(format!(
                "actuator 3: extension range {} m exceeds stroke {}",
                hi - lo,
                spec.prism_cylinder.stroke()
            )));
        }
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &CraneGeometrySpec {
        &self.spec
    }

    pub fn link_lengths(&self) -> [f64; 3] {
        self.spec.link_lengths
    }

    pub fn weights(&self) -> &[WeightComponent] {
        &self.spec.weights
    }

    pub fn load(&self) -> Option<f64> {
        self.spec.load
    }

    pub fn linkage(&self, joint: usize) -> &CylinderLinkage {
        &self.spec.linkages[joint]
    }

    pub fn joint_limits(&self) -> [[f64; 2]; 3] {
        self.spec.joint_limits
    }

    /// Cylinder of actuator `i` (0-based).
    pub fn cylinder(&self, actuator: usize) -> &CylinderGeometry {
        match actuator {
            0 | 1 => &self.spec.linkages[actuator].cylinder,
            _ => &self.spec.prism_cylinder,
        }
    }

    /// Copy of this geometry with a different load. Validation cannot fail
    /// for a non-negative mass.
    pub fn with_load(&self, load: Option<f64>) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.load = load;
        Self::new(spec)
    }

    pub fn check_limits(&self, q: &JointState) -> Result<()> {
        for (j, v) in q.to_array().into_iter().enumerate() {
            let [lo, hi] = self.spec.joint_limits[j];
            if !(v >= lo && v <= hi) {
                return Err(Error::OutOfLimits {
                    joint: JOINT_NAMES[j],
                    value: v,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    /// Clamp a pose into the joint limits.
    pub fn clamp(&self, q: &JointState) -> JointState {
        let mut a = q.to_array();
        for (j, v) in a.iter_mut().enumerate() {
            let [lo, hi] = self.spec.joint_limits[j];
            *v = v.clamp(lo, hi);
        }
        JointState::from_array(a)
    }

    fn frames(&self, q: &JointState) -> [LinkFrame; 3] {
        let [l1, l2, _] = self.spec.link_lengths;
        let (s1, c1) = q.theta1.sin_cos();
        let (s2, c2) = (q.theta1 + q.theta2).sin_cos();
        let joint2 = [l1 * c1, l1 * s1];
        let ext = l2 + q.x_prism;
        [
            LinkFrame {
                origin: [0.0, 0.0],
                along: [c1, s1],
                normal: [-s1, c1],
            },
            LinkFrame {
                origin: joint2,
                along: [c2, s2],
                normal: [-s2, c2],
            },
            LinkFrame {
                origin: [joint2[0] + ext * c2, joint2[1] + ext * s2],
                along: [c2, s2],
                normal: [-s2, c2],
            },
        ]
    }

    fn end_effector_unchecked(&self, frames: &[LinkFrame; 3]) -> [f64; 2] {
        frames[2].point([self.spec.link_lengths[2], 0.0])
    }

    /// Positions of the end effector and all centers of gravity.
    pub fn forward_kinematics(&self, q: &JointState) -> Result<CranePoints> {
        self.check_limits(q)?;
        Ok(self.forward_kinematics_unchecked(q))
    }

    pub(crate) fn forward_kinematics_unchecked(&self, q: &JointState) -> CranePoints {
        let frames = self.frames(q);
        let end_effector = self.end_effector_unchecked(&frames);
        let mut cg_positions: Vec<[f64; 2]> = self
            .spec
            .weights
            .iter()
            .map(|w| frames[w.link].point(w.offset))
            .collect();
        if self.spec.load.is_some() {
            cg_positions.push(end_effector);
        }
        CranePoints {
            end_effector,
            cg_positions,
        }
    }

    /// 2x3 Jacobian `d point / d q`, rows x/y, columns per joint.
    pub fn jacobian_point(&self, q: &JointState, point: PointSelector) -> Result<[[f64; 3]; 2]> {
        self.check_limits(q)?;
        self.jacobian_unchecked(q, point)
    }

    pub(crate) fn jacobian_unchecked(
        &self,
        q: &JointState,
        point: PointSelector,
    ) -> Result<[[f64; 3]; 2]> {
        let frames = self.frames(q);
        let (p, link) = match point {
            PointSelector::EndEffector => (self.end_effector_unchecked(&frames), 2),
            PointSelector::Load => {
                if self.spec.load.is_none() {
                    return Err(Error::InvalidArgument("geometry has no load".into()));
                }
                (self.end_effector_unchecked(&frames), 2)
            }
            PointSelector::Weight(k) => {
                let w = self.spec.weights.get(k).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "weight index {k} out of range ({} weights)",
                        self.spec.weights.len()
                    ))
                })?;
                (frames[w.link].point(w.offset), w.link)
            }
        };
        let mut jac = [[0.0; 3]; 2];
        // Revolute joints 1 and 2 rotate every point on links at or after
        // them about their pivot.
        for (j, pivot) in [frames[0].origin, frames[1].origin].iter().enumerate() {
            if link >= j {
                jac[0][j] = -(p[1] - pivot[1]);
                jac[1][j] = p[0] - pivot[0];
            }
        }
        if link == 2 {
            jac[0][2] = frames[2].along[0];
            jac[1][2] = frames[2].along[1];
        }
        Ok(jac)
    }

    /// Linkage gain of actuator `i`: dC/dtheta for revolute actuators and
    /// exactly 1 for the direct-drive prismatic actuator.
    pub fn actuator_gain(&self, actuator: usize, q: &JointState) -> f64 {
        match actuator {
            0 => self.spec.linkages[0].gain(q.theta1),
            1 => self.spec.linkages[1].gain(q.theta2),
            _ => 1.0,
        }
    }

    /// Actuator position: cylinder length for revolute joints, `x_prism`
    /// for the prismatic one.
    pub fn actuator_position(&self, actuator: usize, q: &JointState) -> f64 {
        match actuator {
            0 => self.spec.linkages[0].length(q.theta1),
            1 => self.spec.linkages[1].length(q.theta2),
            _ => q.x_prism,
        }
    }

    /// Piston speeds of all three actuators.
    pub fn actuator_speeds(&self, q: &JointState, qd: &JointVelocity) -> [f64; NUM_JOINTS] {
        let rates = qd.to_array();
        std::array::from_fn(|i| self.actuator_gain(i, q) * rates[i])
    }

    /// Joint angle of revolute actuator `joint` for cylinder length `length`,
    /// restricted to the configured joint limits.
    pub fn joint_angle_from_length(&self, joint: usize, length: f64) -> Result<f64> {
        let linkage = self.spec.linkages.get(joint).ok_or_else(|| {
            Error::InvalidArgument(format!("joint {joint} is not a revolute actuator"))
        })?;
        let [lo, hi] = self.spec.joint_limits[joint];
        let (c_lo, c_hi) = (linkage.length(lo), linkage.length(hi));
        let tol = 1e-12 * c_hi;
        if !(length >= c_lo - tol && length <= c_hi + tol) {
            return Err(Error::LengthOutOfRange {
                length,
                lo: c_lo,
                hi: c_hi,
            });
        }
        linkage.angle_from_length(length)
    }
}
