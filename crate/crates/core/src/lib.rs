//! Simplicial-map (SIMAP) classification layers.
//!
//! Data in `[0, 1]^n` is expressed in barycentric coordinates with respect
//! to a fixed `n`-simplex containing the unit hypercube. A softmax layer over
//! those coordinates is a perceptron; subdividing the simplex barycentrically
//! `k` times turns it into `((n+1)!)^k` perceptrons glued along shared
//! vertices, each point activating only the `n+1` vertices of the simplex it
//! falls in. Point location and coordinate transport need only a sort and a
//! bidiagonal matrix product per level, and a subdivided layer inherits its
//! parent's weights so that it starts out computing the same function.
//!
//! Modules:
//! - [`geometry`]: the enclosing simplex and barycentric coordinates.
//! - [`subdivision`]: locating points in `Sd^k` and vertex identities ([`key`]).
//! - [`layer`]: forward pass, loss, gradient, optimizers, weight transfer.
//! - [`train`]: level-by-level training and diagnostics.
//! - [`data`]: datasets, normalization, generators, CSV.
//! - [`explain`], [`persist`], [`commands`]: reports, model files, CLI.

pub mod commands;
pub mod data;
pub mod error;
pub mod explain;
pub mod geometry;
pub mod key;
pub mod layer;
pub mod persist;
pub mod subdivision;
pub mod train;

pub use data::{LabeledDataset, NormalizationTransform};
pub use error::{Result, SimapError};
pub use explain::{explain, Explanation};
pub use geometry::EnclosingSimplex;
pub use key::{VertexId, VertexInterner, VertexKey};
pub use layer::{Adam, Init, Prediction, SimapModel};
pub use persist::SavedModel;
pub use subdivision::{Located, Ordering, SparseActivation};
pub use train::{train, BatchMode, MetricsRecord, OptimizerKind, TrainConfig, TrainOutcome};
