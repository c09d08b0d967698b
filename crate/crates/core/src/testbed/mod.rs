//! Quasi-static load-sensing crane simulator with a planted pressure law.
//! Its logs stand in for measurements from a real machine and carry the
//! noise-free signals as extra columns for evaluation.

mod plant;
mod sim;
mod suite;

pub use plant::{default_plant, ActuatorLaw, NoiseSpec, PlantState, SideLaw, SyntheticPlantParams};
pub use sim::{
    simulate, simulate_trajectory, truth_columns, ClipEvent, CommandSchedule, Segment, Simulation,
};
pub use suite::{experiment_schedules, experiment_suite, Experiment, EXPERIMENT_NAMES, SUITE_DT};
