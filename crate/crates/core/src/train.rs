//! Level-by-level training: fit the level-0 layer, subdivide, inherit the
//! weights, fit again, up to the requested number of subdivisions.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::LabeledDataset;
use crate::error::{Result, SimapError};
use crate::geometry::EnclosingSimplex;
use crate::key::{VertexId, VertexKey};
use crate::layer::{gradient_from, loss, Adam, Gradient, Init, SimapModel};
use crate::subdivision::{self, Located, SparseActivation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    /// One update per point, points visited in a seeded random order.
    PerSample,
    /// One update per epoch with the mean gradient, in dataset order.
    FullBatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub batch_mode: BatchMode,
    pub seed: u64,
    pub init: Init,
    /// Stop a level once its epoch train loss is at or below this value.
    pub loss_threshold: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 1000,
            optimizer: OptimizerKind::adam(),
            batch_mode: BatchMode::PerSample,
            seed: 0,
            init: Init::default(),
            loss_threshold: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(SimapError::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if let Init::Uniform { low, high } = self.init {
            if low.partial_cmp(&high) != Some(std::cmp::Ordering::Less) {
                return Err(SimapError::InvalidConfig(format!(
                    "empty init range [{low}, {high})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

/// One row of the training log. Epoch 0 is the state before the level's
/// first update.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub level: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Final model of each level, `models[k]` at level `k`.
    pub models: Vec<SimapModel>,
    pub metrics: Vec<MetricsRecord>,
}

impl TrainOutcome {
    /// Last record of every level.
    pub fn final_metrics(&self) -> Vec<&MetricsRecord> {
        (0..self.models.len())
            .filter_map(|level| self.metrics.iter().rev().find(|m| m.level == level))
            .collect()
    }
}

/// Mean loss and accuracy of `model` over `dataset`, in dataset order.
pub fn evaluate(model: &SimapModel, dataset: &LabeledDataset) -> Result<Evaluation> {
    let located = dataset
        .points()
        .iter()
        .map(|x| model.locate(x))
        .collect::<Result<Vec<_>>>()?;
    evaluate_located(model, &located, dataset)
}

fn evaluate_located(
    model: &SimapModel,
    located: &[Located],
    dataset: &LabeledDataset,
) -> Result<Evaluation> {
    let mut total = 0.0;
    let mut hits = 0usize;
    for (i, l) in located.iter().enumerate() {
        let pred = model.predict_located(l)?;
        total += loss(&pred, &dataset.onehot(i));
        hits += usize::from(pred.label == dataset.labels()[i]);
    }
    let n = dataset.len() as f64;
    Ok(Evaluation {
        loss: total / n,
        accuracy: hits as f64 / n,
    })
}

fn evaluate_activations(
    model: &SimapModel,
    acts: &[SparseActivation],
    onehots: &[Vec<f64>],
    labels: &[usize],
) -> Result<Evaluation> {
    let mut total = 0.0;
    let mut hits = 0usize;
    for ((act, onehot), &label) in acts.iter().zip(onehots).zip(labels) {
        let pred = model.forward(act)?;
        total += loss(&pred, onehot);
        hits += usize::from(pred.label == label);
    }
    let n = acts.len() as f64;
    Ok(Evaluation {
        loss: total / n,
        accuracy: hits as f64 / n,
    })
}

/// Trains levels `0..=levels`. Points must already lie in the enclosing
/// simplex (normalize first). Each level after the first starts from the
/// previous level's weights by transfer, so its epoch-0 metrics equal the
/// previous level's last ones.
pub fn train(
    dataset: &LabeledDataset,
    levels: usize,
    config: &TrainConfig,
    test: Option<&LabeledDataset>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if let Some(t) = test {
        if t.dim() != dataset.dim() || t.class_count() != dataset.class_count() {
            return Err(SimapError::InvalidConfig(
                "test set shape differs from the training set".into(),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = SimapModel::new(dataset.dim(), dataset.class_count(), config.init, &mut rng)?;
    let onehots = dataset.onehots();
    let mut models = Vec::with_capacity(levels + 1);
    let mut metrics = Vec::new();

    for level in 0..=levels {
        if level > 0 {
            model = model.subdivided();
        }
        // Activations are static per level: compute and intern them once,
        // in dataset order so ids are deterministic.
        let acts = dataset
            .points()
            .iter()
            .map(|x| model.activate(x))
            .collect::<Result<Vec<_>>>()?;
        let test_located = test
            .map(|t| {
                t.points()
                    .iter()
                    .map(|x| model.locate(x))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;

        let record = |model: &SimapModel, epoch: usize| -> Result<MetricsRecord> {
            let tr = evaluate_activations(model, &acts, &onehots, dataset.labels())?;
            let te = match (test, &test_located) {
                (Some(t), Some(l)) => Some(evaluate_located(model, l, t)?),
                _ => None,
            };
            Ok(MetricsRecord {
                level,
                epoch,
                train_loss: tr.loss,
                train_accuracy: tr.accuracy,
                test_loss: te.map(|e| e.loss),
                test_accuracy: te.map(|e| e.accuracy),
            })
        };

        metrics.push(record(&model, 0)?);
        let mut adam = match config.optimizer {
            OptimizerKind::Adam { beta1, beta2, eps } => Some(Adam::new(beta1, beta2, eps)),
            OptimizerKind::Sgd => None,
        };
        let mut step: u64 = 0;
        let mut order: Vec<usize> = (0..acts.len()).collect();
        let mut apply = |model: &mut SimapModel, grads: &Gradient| {
            step += 1;
            match adam.as_mut() {
                Some(a) => a.step(model, grads, config.learning_rate, step),
                None => model.sgd_step(grads, config.learning_rate),
            }
        };

        for epoch in 1..=config.epochs {
            match config.batch_mode {
                BatchMode::PerSample => {
                    order.shuffle(&mut rng);
                    for &i in &order {
                        let pred = model.forward(&acts[i])?;
                        let grads = gradient_from(&pred, &acts[i], &onehots[i]);
                        apply(&mut model, &grads);
                    }
                }
                BatchMode::FullBatch => {
                    let grads = mean_gradient(&model, &acts, &onehots)?;
                    apply(&mut model, &grads);
                }
            }
            let rec = record(&model, epoch)?;
            let done = config.loss_threshold.is_some_and(|t| rec.train_loss <= t);
            metrics.push(rec);
            if done {
                break;
            }
        }
        models.push(model.clone());
    }
    Ok(TrainOutcome { models, metrics })
}

/// Mean of the per-point gradients, summed in dataset order.
fn mean_gradient(
    model: &SimapModel,
    acts: &[SparseActivation],
    onehots: &[Vec<f64>],
) -> Result<Gradient> {
    let classes = model.classes();
    let mut sums: Vec<f64> = vec![0.0; model.interner().len() * classes];
    let mut touched = vec![false; model.interner().len()];
    for (act, onehot) in acts.iter().zip(onehots) {
        let pred = model.forward(act)?;
        for (id, g) in gradient_from(&pred, act, onehot).rows {
            touched[id.0] = true;
            for (s, v) in sums[id.0 * classes..].iter_mut().zip(g) {
                *s += v;
            }
        }
    }
    let n = acts.len() as f64;
    let rows = touched
        .iter()
        .enumerate()
        .filter(|(_, &t)| t)
        .map(|(i, _)| {
            let row = sums[i * classes..(i + 1) * classes]
                .iter()
                .map(|s| s / n)
                .collect();
            (VertexId(i), row)
        })
        .collect();
    Ok(Gradient { rows })
}

/// `((n+1)!)^k * (n+1)`.
pub fn vc_dimension(n: usize, k: usize) -> Result<u128> {
    let census = subdivision::subdivision_census(n, k)?;
    census
        .maximal_simplices
        .checked_mul(n as u128 + 1)
        .ok_or_else(|| SimapError::Overflow {
            what: format!("VC dimension for n={n}, k={k}"),
        })
}

/// A maximal simplex holding points with more distinct labels than it has
/// vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct UnclassifiableGroup {
    /// Vertices of the maximal simplex, sorted.
    pub vertices: Vec<VertexKey>,
    pub distinct_labels: usize,
    /// Indices of the points inside it.
    pub points: Vec<usize>,
}

/// Groups points by their containing maximal simplex of `Sd^level` and
/// reports every group carrying more than `n + 1` distinct labels, in order
/// of first appearance.
pub fn detect_unclassifiable(
    dataset: &LabeledDataset,
    level: usize,
) -> Result<Vec<UnclassifiableGroup>> {
    let simplex = EnclosingSimplex::new(dataset.dim())?;
    let mut groups: Vec<(Vec<VertexKey>, BTreeSet<usize>, Vec<usize>)> = Vec::new();
    let mut index: HashMap<Vec<VertexKey>, usize> = HashMap::new();
    for (i, x) in dataset.points().iter().enumerate() {
        let mut keys = subdivision::locate(&simplex, x, level)?.keys;
        keys.sort();
        let g = *index.entry(keys.clone()).or_insert_with(|| {
            groups.push((keys, BTreeSet::new(), Vec::new()));
            groups.len() - 1
        });
        groups[g].1.insert(dataset.labels()[i]);
        groups[g].2.push(i);
    }
    let limit = dataset.dim() + 1;
    Ok(groups
        .into_iter()
        .filter(|(_, labels, _)| labels.len() > limit)
        .map(|(vertices, labels, points)| UnclassifiableGroup {
            vertices,
            distinct_labels: labels.len(),
            points,
        })
        .collect())
}
