//! Versioned JSON container for trained models.
//!
//! A model is stored with its full parent chain so that vertices it never
//! saw during training still resolve by transfer after loading. Weights are
//! written with shortest round-trip float formatting, so a loaded model
//! predicts bit-for-bit like the saved one.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::NormalizationTransform;
use crate::error::{Result, SimapError};
use crate::key::{VertexId, VertexKey};
use crate::layer::SimapModel;

pub const FORMAT: &str = "simap-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LevelRecord {
    dim: usize,
    classes: usize,
    level: usize,
    /// Canonical key strings in id order.
    vertices: Vec<String>,
    /// Weight rows in id order.
    weights: Vec<Vec<f64>>,
    parent: Option<Box<LevelRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Container {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalizer: Option<NormalizationTransform>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label_values: Option<Vec<i64>>,
    model: LevelRecord,
}

/// A model together with the preprocessing it was trained under.
#[derive(Debug, Clone)]
pub struct SavedModel {
    pub model: SimapModel,
    pub normalizer: Option<NormalizationTransform>,
    /// Original label value of each class index.
    pub label_values: Option<Vec<i64>>,
}

fn to_record(model: &SimapModel) -> LevelRecord {
    let interner = model.interner();
    LevelRecord {
        dim: model.dim(),
        classes: model.classes(),
        level: model.level(),
        vertices: interner.keys().iter().map(ToString::to_string).collect(),
        weights: (0..interner.len())
            .map(|i| model.row(VertexId(i)).to_vec())
            .collect(),
        parent: model.parent().map(|p| Box::new(to_record(p))),
    }
}

fn from_record(record: LevelRecord) -> Result<SimapModel> {
    if record.vertices.len() != record.weights.len() {
        return Err(SimapError::ModelFormat(format!(
            "{} vertices but {} weight rows",
            record.vertices.len(),
            record.weights.len()
        )));
    }
    let parent = record.parent.map(|p| from_record(*p)).transpose()?;
    let vertices = record
        .vertices
        .iter()
        .map(|s| s.parse::<VertexKey>())
        .zip(record.weights)
        .map(|(k, w)| k.map(|k| (k, w)))
        .collect::<Result<Vec<_>>>()?;
    SimapModel::from_parts(record.dim, record.classes, record.level, vertices, parent)
}

impl SavedModel {
    pub fn new(model: SimapModel) -> Self {
        Self {
            model,
            normalizer: None,
            label_values: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let container = Container {
            format: FORMAT.into(),
            version: VERSION,
            normalizer: self.normalizer.clone(),
            label_values: self.label_values.clone(),
            model: to_record(&self.model),
        };
        let mut s = serde_json::to_string_pretty(&container)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let container: Container = serde_json::from_str(s)?;
        if container.format != FORMAT {
            return Err(SimapError::ModelFormat(format!(
                "unknown format `{}`",
                container.format
            )));
        }
        if container.version != VERSION {
            return Err(SimapError::ModelFormat(format!(
                "unsupported version {}",
                container.version
            )));
        }
        let model = from_record(container.model)?;
        if let Some(n) = &container.normalizer {
            if n.dim() != model.dim() {
                return Err(SimapError::ModelFormat(
                    "normalizer dimension mismatch".into(),
                ));
            }
        }
        if let Some(l) = &container.label_values {
            if l.len() != model.classes() {
                return Err(SimapError::ModelFormat("label table size mismatch".into()));
            }
        }
        Ok(Self {
            model,
            normalizer: container.normalizer,
            label_values: container.label_values,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
