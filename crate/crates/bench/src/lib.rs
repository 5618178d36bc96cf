//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use rand::Rng;

use drgossip_core::rng::{global_stream, Purpose};
use drgossip_core::{
    Algorithm, ClassificationObjective, CompressionSpec, DualInit, Engine, EngineOptions,
    HyperParams, LocalObjective, MixingMatrix, MixingRule, Model, Regularizer, RegularizerKind,
    RobustObjective, Schedule, SynthSpec, Topology, TopologyKind, TrackerInit,
};

pub fn random_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = global_stream(seed, Purpose::Data);
    (0..dim).map(|_| rng.random::<f64>() - 0.5).collect()
}

/// A ring of `nodes` nodes training logistic regression on synthetic data.
pub fn logistic_engine(
    nodes: usize,
    features: usize,
    compression: drgossip_core::CompressionKind,
    rounds: usize,
) -> Engine {
    let data = Arc::new(
        SynthSpec::new(nodes, features, 2.0)
            .generate(1)
            .expect("valid spec"),
    );
    let model = Model::Logistic {
        features,
        classes: 2,
        bias: true,
    };
    let local = ClassificationObjective::new(data, model).expect("consistent model");
    let reg =
        Regularizer::new(RegularizerKind::Chi2, 1.0, local.node_weights()).expect("valid weights");
    let obj = Arc::new(RobustObjective::new(Arc::new(local), reg).expect("consistent objective"));
    let w = MixingMatrix::from_topology(
        &Topology::build(TopologyKind::Ring, nodes).expect("ring"),
        MixingRule::Metropolis,
    )
    .expect("mixing");
    let hyper = HyperParams {
        algorithm: Algorithm::AdGda,
        eta_theta: 0.1,
        eta_lambda: 0.1,
        schedule: Schedule::Constant,
        gamma: 0.1,
        rounds,
        batch: 32,
        tracker_init: TrackerInit::Zero,
        dual_init: DualInit::NodeWeights,
    };
    let q = CompressionSpec::new(compression, model.dim()).expect("compression");
    Engine::new(obj, w, q, hyper, EngineOptions::default(), 1).expect("engine")
}
