//! The SIMAP layer: softmax over barycentric coordinates with respect to
//! `Sd^k` of the enclosing simplex, one weight row per subdivision vertex.
//!
//! Rows are materialized lazily. A level-`k+1` model keeps its level-`k`
//! parent; a vertex it has not seen yet gets the mean of the parent rows of
//! the face it is the barycenter of, so a freshly subdivided model computes
//! exactly the same function as its parent.

use rand::Rng;

use crate::error::{Result, SimapError};
use crate::geometry::EnclosingSimplex;
use crate::key::{VertexId, VertexInterner, VertexKey};
use crate::subdivision::{self, Located, SparseActivation};

/// Initial values for the level-0 rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    Uniform { low: f64, high: f64 },
}

impl Default for Init {
    fn default() -> Self {
        Init::Uniform {
            low: -0.5,
            high: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub label: usize,
}

impl Prediction {
    fn from_logits(logits: Vec<f64>) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let probs = exps.iter().map(|e| e / total).collect();
        let label = argmax(&logits);
        Self {
            logits,
            probs,
            label,
        }
    }

    pub fn max_prob(&self) -> f64 {
        self.probs[self.label]
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Softmax of a single weight row.
pub fn softmax(values: &[f64]) -> Vec<f64> {
    Prediction::from_logits(values.to_vec()).probs
}

/// Cross-entropy `-sum_h target_h * log(prob_h)` over all classes, computed
/// from the logits so that it stays finite for saturated probabilities.
pub fn loss(pred: &Prediction, onehot: &[f64]) -> f64 {
    let max = pred
        .logits
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let lse = max
        + pred
            .logits
            .iter()
            .map(|z| (z - max).exp())
            .sum::<f64>()
            .ln();
    -onehot
        .iter()
        .zip(&pred.logits)
        .filter(|(&t, _)| t != 0.0)
        .map(|(&t, &z)| t * (z - lse))
        .sum::<f64>()
}

/// Sparse gradient of the loss: one row per activated vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub rows: Vec<(VertexId, Vec<f64>)>,
}

impl Gradient {
    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|(_, r)| r.iter().all(|&g| g == 0.0))
    }
}

#[derive(Debug, Clone)]
pub struct SimapModel {
    simplex: EnclosingSimplex,
    classes: usize,
    level: usize,
    interner: VertexInterner,
    /// Row-major, `interner.len() * classes`.
    weights: Vec<f64>,
    parent: Option<Box<SimapModel>>,
}

impl SimapModel {
    /// Level-0 model over the `dim`-simplex with rows drawn from `init`.
    pub fn new<R: Rng + ?Sized>(
        dim: usize,
        classes: usize,
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        let rows = (0..=dim)
            .map(|_| {
                (0..classes)
                    .map(|_| match init {
                        Init::Zeros => 0.0,
                        Init::Uniform { low, high } => rng.random_range(low..high),
                    })
                    .collect()
            })
            .collect();
        Self::from_base_rows(dim, classes, rows)
    }

    /// Level-0 model with explicit rows for the `dim + 1` base vertices.
    pub fn from_base_rows(dim: usize, classes: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let simplex = EnclosingSimplex::new(dim)?;
        if classes == 0 {
            return Err(SimapError::InvalidConfig(
                "at least one class is required".into(),
            ));
        }
        if rows.len() != dim + 1 {
            return Err(SimapError::DimensionMismatch {
                expected: dim + 1,
                found: rows.len(),
            });
        }
        let mut interner = VertexInterner::new();
        let mut weights = Vec::with_capacity((dim + 1) * classes);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != classes {
                return Err(SimapError::DimensionMismatch {
                    expected: classes,
                    found: row.len(),
                });
            }
            interner.intern(&VertexKey::Base(i));
            weights.extend(row);
        }
        Ok(Self {
            simplex,
            classes,
            level: 0,
            interner,
            weights,
            parent: None,
        })
    }

    /// Reassembles a model from its parts. Every key must have the model's
    /// level and every row `classes` entries.
    pub fn from_parts(
        dim: usize,
        classes: usize,
        level: usize,
        vertices: Vec<(VertexKey, Vec<f64>)>,
        parent: Option<SimapModel>,
    ) -> Result<Self> {
        let simplex = EnclosingSimplex::new(dim)?;
        match &parent {
            Some(p) if p.level + 1 != level || p.dim() != dim || p.classes != classes => {
                return Err(SimapError::ModelFormat(
                    "parent level does not match the model".into(),
                ));
            }
            None if level > 0 => {
                return Err(SimapError::ModelFormat(format!(
                    "level {level} model without a parent"
                )));
            }
            _ => {}
        }
        let mut interner = VertexInterner::new();
        let mut weights = Vec::with_capacity(vertices.len() * classes);
        for (key, row) in vertices {
            if key.level() != level {
                return Err(SimapError::LevelMismatch {
                    expected: level,
                    found: key.level(),
                });
            }
            if row.len() != classes || row.iter().any(|w| !w.is_finite()) {
                return Err(SimapError::ModelFormat(format!("bad weight row for {key}")));
            }
            if !interner.intern(&key).1 {
                return Err(SimapError::ModelFormat(format!("duplicate vertex {key}")));
            }
            weights.extend(row);
        }
        Ok(Self {
            simplex,
            classes,
            level,
            interner,
            weights,
            parent: parent.map(Box::new),
        })
    }

    /// A level-`k+1` model whose parent is a copy of this one. No rows are
    /// materialized until vertices are activated.
    pub fn subdivided(&self) -> Self {
        Self {
            simplex: self.simplex.clone(),
            classes: self.classes,
            level: self.level + 1,
            interner: VertexInterner::new(),
            weights: Vec::new(),
            parent: Some(Box::new(self.clone())),
        }
    }

    pub fn dim(&self) -> usize {
        self.simplex.dim()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn simplex(&self) -> &EnclosingSimplex {
        &self.simplex
    }

    pub fn interner(&self) -> &VertexInterner {
        &self.interner
    }

    pub fn parent(&self) -> Option<&SimapModel> {
        self.parent.as_deref()
    }

    pub fn row(&self, id: VertexId) -> &[f64] {
        &self.weights[id.0 * self.classes..(id.0 + 1) * self.classes]
    }

    pub fn row_mut(&mut self, id: VertexId) -> &mut [f64] {
        &mut self.weights[id.0 * self.classes..(id.0 + 1) * self.classes]
    }

    /// The row this model would give `key` by inheritance from its parent:
    /// the mean of the parent rows of the key's children.
    pub fn transfer_weight(&self, key: &VertexKey) -> Result<Vec<f64>> {
        if key.level() != self.level {
            return Err(SimapError::LevelMismatch {
                expected: self.level,
                found: key.level(),
            });
        }
        let parent = self
            .parent
            .as_deref()
            .ok_or_else(|| SimapError::MissingParent {
                key: key.to_string(),
            })?;
        let children = key.children();
        let mut row = vec![0.0; self.classes];
        for child in children {
            for (r, w) in row.iter_mut().zip(parent.resolve_row(child)?) {
                *r += w;
            }
        }
        let m = children.len() as f64;
        row.iter_mut().for_each(|r| *r /= m);
        Ok(row)
    }

    /// The stored row of `key`, falling back to [`Self::transfer_weight`]
    /// for vertices this model has never materialized.
    pub fn resolve_row(&self, key: &VertexKey) -> Result<Vec<f64>> {
        match self.interner.get(key) {
            Some(id) => Ok(self.row(id).to_vec()),
            None => self.transfer_weight(key),
        }
    }

    pub fn locate(&self, x: &[f64]) -> Result<Located> {
        subdivision::locate(&self.simplex, x, self.level)
    }

    /// Interns the vertices of `located`, materializing rows for new ones.
    pub fn intern_located(&mut self, located: &Located) -> Result<SparseActivation> {
        if located.level != self.level {
            return Err(SimapError::LevelMismatch {
                expected: self.level,
                found: located.level,
            });
        }
        let mut entries = Vec::with_capacity(located.keys.len());
        for (key, &c) in located.keys.iter().zip(&located.coefficients) {
            let id = match self.interner.get(key) {
                Some(id) => id,
                None => {
                    let row = self.transfer_weight(key)?;
                    let (id, _) = self.interner.intern(key);
                    self.weights.extend(row);
                    id
                }
            };
            entries.push((id, c));
        }
        Ok(SparseActivation {
            level: self.level,
            entries,
        })
    }

    pub fn activate(&mut self, x: &[f64]) -> Result<SparseActivation> {
        let located = self.locate(x)?;
        self.intern_located(&located)
    }

    pub fn forward(&self, act: &SparseActivation) -> Result<Prediction> {
        if act.level != self.level {
            return Err(SimapError::LevelMismatch {
                expected: self.level,
                found: act.level,
            });
        }
        Ok(self.combine(act.entries.iter().map(|&(id, c)| (c, self.row(id)))))
    }

    /// Prediction for a located point without touching the interner.
    pub fn predict_located(&self, located: &Located) -> Result<Prediction> {
        if located.level != self.level {
            return Err(SimapError::LevelMismatch {
                expected: self.level,
                found: located.level,
            });
        }
        let rows = located
            .keys
            .iter()
            .map(|k| self.resolve_row(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.combine(
            located
                .coefficients
                .iter()
                .zip(&rows)
                .map(|(&c, r)| (c, r.as_slice())),
        ))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.predict_located(&self.locate(x)?)
    }

    fn combine<'a>(&self, terms: impl Iterator<Item = (f64, &'a [f64])>) -> Prediction {
        let mut logits = vec![0.0; self.classes];
        for (c, row) in terms {
            for (z, w) in logits.iter_mut().zip(row) {
                *z += c * w;
            }
        }
        Prediction::from_logits(logits)
    }

    /// `dL/dw[t][j] = (N_j - l_j) * b_t` for every activated vertex `t`.
    pub fn gradient(&self, act: &SparseActivation, onehot: &[f64]) -> Result<Gradient> {
        let pred = self.forward(act)?;
        Ok(gradient_from(&pred, act, onehot))
    }

    pub fn sgd_step(&mut self, grads: &Gradient, learning_rate: f64) {
        for (id, g) in &grads.rows {
            for (w, d) in self.row_mut(*id).iter_mut().zip(g) {
                *w -= learning_rate * d;
            }
        }
    }
}

pub(crate) fn gradient_from(pred: &Prediction, act: &SparseActivation, onehot: &[f64]) -> Gradient {
    let delta: Vec<f64> = pred.probs.iter().zip(onehot).map(|(p, l)| p - l).collect();
    let rows = act
        .entries
        .iter()
        .map(|&(id, b)| (id, delta.iter().map(|d| d * b).collect()))
        .collect();
    Gradient { rows }
}

/// Adam moment state, one accumulator pair per `(vertex, class)`, grown on
/// demand and updated only for rows present in a gradient.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// One bias-corrected update; `step` counts from 1.
    pub fn step(
        &mut self,
        model: &mut SimapModel,
        grads: &Gradient,
        learning_rate: f64,
        step: u64,
    ) {
        let classes = model.classes();
        let needed = model.interner().len() * classes;
        if self.m.len() < needed {
            self.m.resize(needed, 0.0);
            self.v.resize(needed, 0.0);
        }
        let t = step.min(i32::MAX as u64) as i32;
        let correct1 = 1.0 - self.beta1.powi(t);
        let correct2 = 1.0 - self.beta2.powi(t);
        for (id, g) in &grads.rows {
            let base = id.0 * classes;
            let row = model.row_mut(*id);
            for (j, (&gj, w)) in g.iter().zip(row.iter_mut()).enumerate() {
                let m = &mut self.m[base + j];
                let v = &mut self.v[base + j];
                *m = self.beta1 * *m + (1.0 - self.beta1) * gj;
                *v = self.beta2 * *v + (1.0 - self.beta2) * gj * gj;
                let m_hat = *m / correct1;
                let v_hat = *v / correct2;
                *w -= learning_rate * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

impl Default for Adam {
    fn default() -> Self {
        Self::new(0.9, 0.999, 1e-8)
    }
}
