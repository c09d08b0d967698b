use serde::{Deserialize, Serialize};

use crate::crane::{
    CraneGeometry, CraneGeometrySpec, CylinderGeometry, CylinderLinkage, JointState,
    WeightComponent, NUM_JOINTS,
};
use crate::error::{Error, Result};
use crate::flow::{meter_in_flow, Direction, DEFAULT_EPSILON};
use crate::load::static_reaction_forces;

/// Quasi-static pressure law of one chamber when it drives the motion.
///
/// `P0 = k_f * load + k_q2 * Q^2 + bias`, then
/// `P = max(0, P0 + k_q * (|Q| + leakage * max(P0, 0)))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideLaw {
    /// Pa/N.
    pub k_f: f64,
    /// Pa/(m^3/s).
    pub k_q: f64,
    /// Pa/(m^3/s)^2.
    pub k_q2: f64,
    /// Pa.
    pub bias: f64,
}

/// Planted behaviour of one actuator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorLaw {
    pub extend: SideLaw,
    pub retract: SideLaw,
    /// Coulomb friction (N).
    pub coulomb: f64,
    /// Viscous friction (N s/m).
    pub viscous: f64,
    /// Internal leakage (m^3/(s Pa)).
    pub leakage: f64,
    /// Pressure of the non-driving chamber (Pa).
    pub back_pressure: f64,
}

impl ActuatorLaw {
    /// Law whose force term reproduces the net-force balance
    /// `P_drive * A_drive - p_back * A_other = load` exactly.
    pub fn balanced(cyl: &CylinderGeometry, back_pressure: f64, k_q: f64, k_q2: f64) -> Self {
        let (aa, ab) = (cyl.effective_area_a(), cyl.effective_area_b());
        Self {
            extend: SideLaw {
                k_f: 1.0 / aa,
                k_q,
                k_q2,
                bias: back_pressure * ab / aa,
            },
            retract: SideLaw {
                k_f: 1.0 / ab,
                k_q,
                k_q2,
                bias: back_pressure * aa / ab,
            },
            coulomb: 0.0,
            viscous: 0.0,
            leakage: 0.0,
            back_pressure,
        }
    }

    fn side_pressure(&self, law: &SideLaw, load: f64, q_abs: f64) -> f64 {
        let p0 = law.k_f * load + law.k_q2 * q_abs * q_abs + law.bias;
        (p0 + law.k_q * (q_abs + self.leakage * p0.max(0.0))).max(0.0)
    }

    /// Chamber pressures `(p_a, p_b)` for the true static force (positive
    /// opposing extension), piston speed and meter-in flow.
    pub fn chamber_pressures(&self, direction: Direction, force: f64, xdot: f64, q: f64) -> (f64, f64) {
        let friction = self.coulomb + self.viscous * xdot.abs();
        match direction {
            Direction::Extend => (
                self.side_pressure(&self.extend, force + friction, q.abs()),
                self.back_pressure,
            ),
            Direction::Retract => (
                self.back_pressure,
                self.side_pressure(&self.retract, -force + friction, q.abs()),
            ),
            Direction::Hold => {
                if force >= 0.0 {
                    (
                        (self.extend.k_f * force + self.extend.bias).max(0.0),
                        self.back_pressure,
                    )
                } else {
                    (
                        self.back_pressure,
                        (-self.retract.k_f * force + self.retract.bias).max(0.0),
                    )
                }
            }
        }
    }

    fn validate(&self, i: usize) -> Result<()> {
        let vals = [
            self.extend.k_f,
            self.extend.k_q,
            self.extend.k_q2,
            self.extend.bias,
            self.retract.k_f,
            self.retract.k_q,
            self.retract.k_q2,
            self.retract.bias,
            self.coulomb,
            self.viscous,
            self.leakage,
            self.back_pressure,
        ];
        if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!(
                "actuator {}: plant law coefficients must be non-negative",
                i + 1
            )));
        }
        Ok(())
    }
}

/// Standard deviations of the Gaussian sensor noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Pa, all pressure channels.
    pub pressure: f64,
    /// rad, both revolute joints.
    pub angle: f64,
    /// m, prismatic joint.
    pub extension: f64,
}

/// Everything the simulator needs: the nominal geometry the models are
/// given, the extra masses only the plant knows about, the planted
/// pressure law and the pump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticPlantParams {
    pub geometry: CraneGeometry,
    /// Hoses, oil and fittings missing from the nominal geometry.
    #[serde(default)]
    pub unmodeled_weights: Vec<WeightComponent>,
    pub actuators: [ActuatorLaw; NUM_JOINTS],
    pub margins: [f64; NUM_JOINTS],
    pub standby: f64,
    pub noise: NoiseSpec,
    /// Velocity deadband the plant's valves open at (m/s).
    pub epsilon: f64,
    /// Joint acceleration limits (rad/s^2, rad/s^2, m/s^2).
    pub max_accel: [f64; NUM_JOINTS],
    /// Oil bulk modulus (Pa). Recorded for reference; the quasi-static law
    /// does not use it.
    pub bulk_modulus: f64,
}

/// Pressures and flows of the plant at one instant, before sensor noise.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantState {
    pub xdot: [f64; NUM_JOINTS],
    pub q_flow: [f64; NUM_JOINTS],
    pub force: [f64; NUM_JOINTS],
    pub direction: [Direction; NUM_JOINTS],
    pub p_a: [f64; NUM_JOINTS],
    pub p_b: [f64; NUM_JOINTS],
    /// Driving-chamber pressure, zero when holding.
    pub working: [f64; NUM_JOINTS],
    /// `working + margin * activation`.
    pub demand: [f64; NUM_JOINTS],
    pub pump: f64,
}

impl SyntheticPlantParams {
    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.actuators.iter().enumerate() {
            a.validate(i)?;
        }
        let scalars = [
            self.standby,
            self.noise.pressure,
            self.noise.angle,
            self.noise.extension,
            self.epsilon,
            self.bulk_modulus,
        ];
        if self.margins.iter().chain(&scalars).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(
                "margins, standby, noise, epsilon and bulk modulus must be non-negative".into(),
            ));
        }
        if self.max_accel.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Config("acceleration limits must be positive".into()));
        }
        self.true_geometry().map(|_| ())
    }

    /// Nominal geometry plus the unmodeled weights.
    pub fn true_geometry(&self) -> Result<CraneGeometry> {
        let mut spec = self.geometry.spec().clone();
        spec.weights.extend(self.unmodeled_weights.iter().cloned());
        CraneGeometry::new(spec)
    }

    /// Same plant carrying an end-effector load.
    pub fn with_load(&self, load: Option<f64>) -> Result<Self> {
        Ok(Self {
            geometry: self.geometry.with_load(load)?,
            ..self.clone()
        })
    }

    /// Pre-noise plant response at pose `q` with joint rates `qd`.
    pub fn state(&self, truth: &CraneGeometry, q: &JointState, qd: &[f64; NUM_JOINTS]) -> Result<PlantState> {
        let xdot: [f64; NUM_JOINTS] =
            std::array::from_fn(|i| truth.actuator_gain(i, q) * qd[i]);
        let force = static_reaction_forces(truth, q)?.0;
        let mut s = PlantState {
            xdot,
            q_flow: [0.0; NUM_JOINTS],
            force,
            direction: [Direction::Hold; NUM_JOINTS],
            p_a: [0.0; NUM_JOINTS],
            p_b: [0.0; NUM_JOINTS],
            working: [0.0; NUM_JOINTS],
            demand: [0.0; NUM_JOINTS],
            pump: 0.0,
        };
        for i in 0..NUM_JOINTS {
            let flow = meter_in_flow(truth.cylinder(i), xdot[i], self.epsilon);
            let (pa, pb) = self.actuators[i].chamber_pressures(flow.direction, force[i], xdot[i], flow.q);
            s.q_flow[i] = flow.q;
            s.direction[i] = flow.direction;
            s.p_a[i] = pa;
            s.p_b[i] = pb;
            s.working[i] = match flow.direction {
                Direction::Extend => pa,
                Direction::Retract => pb,
                Direction::Hold => 0.0,
            };
            s.demand[i] = s.working[i] + if flow.q != 0.0 { self.margins[i] } else { 0.0 };
        }
        s.pump = s.demand.iter().fold(self.standby, |a, d| a.max(*d));
        Ok(s)
    }
}

/// Built-in three-actuator loader crane used by the experiment suite.
pub fn default_plant() -> SyntheticPlantParams {
    let boom_cyl = CylinderGeometry::new(0.11, 0.07, 1.2, 1).expect("valid cylinder");
    let jib_cyl = CylinderGeometry::new(0.07, 0.045, 1.0, 1).expect("valid cylinder");
    let ext_cyl = CylinderGeometry::new(0.05, 0.032, 2.05, 2).expect("valid cylinder");
    let spec = CraneGeometrySpec {
        link_lengths: [3.2, 2.6, 1.2],
        weights: vec![
            WeightComponent::new(1100.0, [1.6, 0.1], 0),
            WeightComponent::new(700.0, [1.3, 0.05], 1),
            WeightComponent::new(450.0, [-0.6, 0.0], 2),
        ],
        load: None,
        linkages: [
            CylinderLinkage::new(0.9, 1.6, 0.7, boom_cyl.clone()).expect("valid linkage"),
            CylinderLinkage::new(0.6, 1.3, 1.9, jib_cyl.clone()).expect("valid linkage"),
        ],
        prism_cylinder: ext_cyl.clone(),
        joint_limits: [[-0.2, 1.2], [-1.4, 0.6], [0.0, 2.0]],
    };
    let geometry = CraneGeometry::new(spec).expect("default geometry is valid");
    let back = 0.5e6;
    let mut boom = ActuatorLaw::balanced(&boom_cyl, back, 1.5e9, 4.0e12);
    boom.coulomb = 1500.0;
    boom.viscous = 4.0e4;
    boom.leakage = 2.0e-12;
    let mut jib = ActuatorLaw::balanced(&jib_cyl, back, 2.0e9, 8.0e12);
    jib.coulomb = 800.0;
    jib.viscous = 2.5e4;
    jib.leakage = 2.0e-12;
    let mut ext = ActuatorLaw::balanced(&ext_cyl, back, 3.0e9, 1.2e13);
    ext.coulomb = 600.0;
    ext.viscous = 1.5e4;
    ext.leakage = 2.0e-12;
    SyntheticPlantParams {
        geometry,
        unmodeled_weights: vec![
            WeightComponent::new(80.0, [2.0, 0.15], 0),
            WeightComponent::new(60.0, [1.5, 0.1], 1),
        ],
        actuators: [boom, jib, ext],
        margins: [1.6e6, 2.0e6, 2.4e6],
        standby: 2.0e6,
        noise: NoiseSpec {
            pressure: 0.005 * 25.0e6,
            angle: 1e-5,
            extension: 1e-5,
        },
        epsilon: DEFAULT_EPSILON,
        max_accel: [0.5, 0.5, 0.5],
        bulk_modulus: 1.5e9,
    }
}
