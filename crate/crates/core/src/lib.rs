//! Pressure prediction for load-sensing hydraulic cranes.

pub mod cli;
pub mod crane;
pub mod error;
pub mod eval;
pub mod flow;
pub mod gp;
pub mod io;
pub mod load;
pub mod pipeline;
pub mod plot;
pub mod pressure;
pub mod savgol;
pub mod testbed;

pub use error::{Error, Result};
