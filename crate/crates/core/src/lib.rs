//! Decentralized distributionally robust learning over gossip networks with
//! compressed communication.
//!
//! Nodes jointly solve `min_theta max_{lambda in simplex} (1/m) sum_i lambda_i f_i(theta) + alpha r(lambda)`
//! by local gradient descent-ascent, compressed gossip on the primal
//! iterates and exact averaging of the duals.

pub mod compression;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod harness;
pub mod objective;
pub mod oracle;
pub mod rng;
pub mod topology;

pub use compression::{CompressedMessage, CompressionChoice, CompressionKind, CompressionSpec};
pub use diagnostics::{RecordRow, RunRecord, TheoryParams};
pub use engine::{
    Algorithm, DualInit, Engine, EngineOptions, Evaluation, HyperParams, NodeState, RoundAudit,
    RunOutput, Schedule, TrackerInit,
};
pub use error::{Error, Result};
pub use objective::{
    Batch, ClassificationObjective, Dataset, LocalObjective, Model, QuadraticObjective,
    Regularizer, RegularizerKind, RobustObjective, SynthSpec,
};
pub use topology::{MixingMatrix, MixingRule, Topology, TopologyKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
