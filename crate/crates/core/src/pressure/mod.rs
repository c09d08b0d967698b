//! Per-actuator working-pressure models and the pump composition.
//!
//! Each actuator has two independent GPs, one for extension and one for
//! retraction, mapping (|flow|, static reaction force) to the pressure of
//! the driving chamber. The pump pressure is the largest working pressure
//! raised by its actuator's margin, floored at the standby pressure. The two
//! stages are trained separately: the max composition passes no gradient to
//! non-dominant actuators.

mod pump;
mod working;

pub use pump::{
    activation, dominating, elevated_demands, fit_pump_margins, pump_demand, pump_pressure,
    Dominant, MarginFit, MarginFitOptions, PumpModel,
};
pub use working::{
    build_training_set, predict_working_pressure, thin_rows, train_working_pressure,
    DirectionedDataset, TrainingRow, WorkingPrediction, WorkingPressureModel,
    WorkingPressureRecord, WorkingTrainOptions, MIN_PARTITION_ROWS,
};
