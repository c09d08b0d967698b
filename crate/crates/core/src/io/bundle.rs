//! Versioned JSON model bundle. The format is frozen per version; factor
//! matrices are not stored but recomputed deterministically on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crane::CraneGeometry;
use crate::error::{Error, Result};
use crate::pressure::{PumpModel, WorkingPressureModel, WorkingPressureRecord};

use super::features::{geometry_hash, FeatureConfig};
use super::write_atomic;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;
const CREATOR: &str = "hydrotwin";

/// Trained working-pressure models, pump model and the provenance needed to
/// apply them safely.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub seed: u64,
    pub geometry_hash: String,
    pub features: FeatureConfig,
    /// SHA-256 over the training rows and pump targets.
    pub training_fingerprint: String,
    pub models: Vec<WorkingPressureModel>,
    pub pump: PumpModel,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleFile {
    format_version: u32,
    creator: String,
    creator_version: String,
    seed: u64,
    geometry_hash: String,
    features: FeatureConfig,
    training_fingerprint: String,
    models: Vec<WorkingPressureRecord>,
    pump: PumpModel,
}

impl Bundle {
    /// Refuse geometry other than the one the bundle was trained with.
    pub fn check_geometry(&self, geom: &CraneGeometry) -> Result<()> {
        let current = geometry_hash(geom);
        if current != self.geometry_hash {
            return Err(Error::GeometryMismatch {
                bundle: self.geometry_hash.clone(),
                current,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = BundleFile {
            format_version: BUNDLE_FORMAT_VERSION,
            creator: CREATOR.into(),
            creator_version: env!("CARGO_PKG_VERSION").into(),
            seed: self.seed,
            geometry_hash: self.geometry_hash.clone(),
            features: self.features,
            training_fingerprint: self.training_fingerprint.clone(),
            models: self.models.iter().map(WorkingPressureModel::to_record).collect(),
            pump: self.pump.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Schema("bundle has no format_version".into()))?;
        if found != u64::from(BUNDLE_FORMAT_VERSION) {
            return Err(Error::Version {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                expected: BUNDLE_FORMAT_VERSION,
            });
        }
        let file: BundleFile = serde_json::from_value(value)?;
        let models = file
            .models
            .iter()
            .map(WorkingPressureModel::from_record)
            .collect::<Result<Vec<_>>>()?;
        if models.len() != file.pump.margins.len() {
            return Err(Error::Schema(format!(
                "bundle has {} working-pressure models but {} margins",
                models.len(),
                file.pump.margins.len()
            )));
        }
        Ok(Self {
            seed: file.seed,
            geometry_hash: file.geometry_hash,
            features: file.features,
            training_fingerprint: file.training_fingerprint,
            models,
            pump: file.pump,
        })
    }
}

pub fn save_bundle(bundle: &Bundle, path: impl AsRef<Path>) -> Result<()> {
    let text = bundle.to_json()?;
    let path = path.as_ref();
    write_atomic(path, |w| {
        std::io::Write::write_all(w, text.as_bytes()).map_err(|e| Error::io(path, e))
    })
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<Bundle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Bundle::from_json(&text)
}
