//! Persistence: signal logs, feature tables, configuration and model
//! bundles.

mod bundle;
mod config;
mod features;
mod log;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use bundle::{load_bundle, save_bundle, Bundle, BUNDLE_FORMAT_VERSION};
pub use config::{load_config, parse_config, Config, EvaluationConfig, TrainingConfig};

pub use features::{
    featurize, featurize_with, geometry_hash, ActuatorFeatures, FeatureConfig, FeatureTable,
    LIMIT_TOLERANCE,
};
pub use log::{
    p_a_column, p_b_column, read_log, read_log_from, u_cmd_column, write_log, write_log_to,
    ExtraColumn, SignalLog, P_PUMP, THETA1, THETA2, TIME, X_PRISM,
};


/// Write to a temporary file next to `path`, then rename it into place.
pub(crate) fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<&mut tempfile::NamedTempFile>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut buf = std::io::BufWriter::new(&mut tmp);
        write(&mut buf)?;
        buf.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Atomically write a string.
pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    write_atomic(path, |w| w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e)))
}
