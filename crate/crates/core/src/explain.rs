//! Per-prediction reports: which subdivision vertices a point is expressed
//! in, where they are, what each of them votes for, and how the votes mix.

use serde::Serialize;

use crate::error::Result;
use crate::layer::{softmax, Prediction, SimapModel};
use crate::subdivision::vertex_ambient_position;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplainedVertex {
    pub key: String,
    pub position: Vec<f64>,
    pub coefficient: f64,
    /// Softmax of the vertex's weight row.
    pub class_distribution: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    pub level: usize,
    pub point: Vec<f64>,
    /// All vertices of the containing maximal simplex, zero coefficients
    /// included.
    pub vertices: Vec<ExplainedVertex>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub label: usize,
}

impl Explanation {
    /// Vertices that actually contribute.
    pub fn support(&self) -> impl Iterator<Item = &ExplainedVertex> {
        self.vertices.iter().filter(|v| v.coefficient != 0.0)
    }

    pub fn prediction(&self) -> Prediction {
        Prediction {
            logits: self.logits.clone(),
            probs: self.probs.clone(),
            label: self.label,
        }
    }
}

pub fn explain(model: &SimapModel, x: &[f64]) -> Result<Explanation> {
    let located = model.locate(x)?;
    let prediction = model.predict_located(&located)?;
    let vertices = located
        .keys
        .iter()
        .zip(&located.coefficients)
        .map(|(key, &coefficient)| {
            Ok(ExplainedVertex {
                key: key.to_string(),
                position: vertex_ambient_position(key, model.simplex()),
                coefficient,
                class_distribution: softmax(&model.resolve_row(key)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Explanation {
        level: model.level(),
        point: x.to_vec(),
        vertices,
        logits: prediction.logits,
        probs: prediction.probs,
        label: prediction.label,
    })
}
