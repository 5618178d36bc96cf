//! Local losses, dual regularizers, simplex projection and data provisioning.

pub mod data;
pub mod idx;
pub mod model;
pub mod problem;
pub mod regularizer;
pub mod simplex;

pub use data::{partition_classwise, synth_heterogeneous, ClasswisePlacement, Dataset, SynthSpec};
pub use idx::load_idx;
pub use model::Model;
pub use problem::{
    Batch, ClassificationObjective, LocalObjective, NodeGrads, QuadraticObjective, RobustObjective,
};
pub use regularizer::{Regularizer, RegularizerKind};
pub use simplex::{is_in_simplex, project_simplex};
