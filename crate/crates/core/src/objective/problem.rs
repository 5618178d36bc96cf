//! Local losses `f_i`, their stochastic oracles, and the robust network
//! objective `g(theta, lambda) = (1/m) sum_i g_i` with
//! `g_i = lambda_i f_i(theta) + alpha r(lambda)`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::objective::data::Dataset;
use crate::objective::model::Model;
use crate::objective::regularizer::Regularizer;
use crate::rng::{global_stream, NodeRng, Purpose};

/// A minibatch: positions inside a node's shard, or the whole shard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Batch {
    Full,
    Samples(Vec<usize>),
}

/// Per-node empirical risks with gradient oracles.
pub trait LocalObjective: Send + Sync {
    fn num_nodes(&self) -> usize;

    fn dim(&self) -> usize;

    /// Empirical weights `p_i = n_i / n`.
    fn node_weights(&self) -> Vec<f64>;

    fn shard_size(&self, node: usize) -> usize;

    fn initial_params(&self, seed: u64) -> Vec<f64>;

    /// Mean loss over `batch` of node `node`; overwrites `grad` with its gradient.
    fn loss_grad(&self, node: usize, theta: &[f64], batch: &Batch, grad: &mut [f64]) -> f64;

    fn loss(&self, node: usize, theta: &[f64], batch: &Batch) -> f64 {
        let mut scratch = vec![0.0; self.dim()];
        self.loss_grad(node, theta, batch, &mut scratch)
    }

    /// Uniform sampling with replacement inside the node's shard; size 0
    /// means the full shard.
    fn sample_batch(&self, node: usize, size: usize, rng: &mut NodeRng) -> Batch {
        let n = self.shard_size(node);
        if size == 0 {
            return Batch::Full;
        }
        Batch::Samples((0..size).map(|_| rng.random_range(0..n)).collect())
    }
}

/// Softmax classifier over a sharded dataset.
#[derive(Debug, Clone)]
pub struct ClassificationObjective {
    data: Arc<Dataset>,
    model: Model,
}

impl ClassificationObjective {
    pub fn new(data: Arc<Dataset>, model: Model) -> Result<Self> {
        if model.features() != data.num_features() {
            return Err(Error::Dimension(format!(
                "model expects {} features, data has {}",
                model.features(),
                data.num_features()
            )));
        }
        if model.classes() < data.num_classes() {
            return Err(Error::Dimension(format!(
                "model has {} classes, data has {}",
                model.classes(),
                data.num_classes()
            )));
        }
        Ok(ClassificationObjective { data, model })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }
}

impl LocalObjective for ClassificationObjective {
    fn num_nodes(&self) -> usize {
        self.data.num_shards()
    }

    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn node_weights(&self) -> Vec<f64> {
        self.data.node_weights()
    }

    fn shard_size(&self, node: usize) -> usize {
        self.data.shard(node).len()
    }

    fn initial_params(&self, seed: u64) -> Vec<f64> {
        self.model.init_params(seed)
    }

    fn loss_grad(&self, node: usize, theta: &[f64], batch: &Batch, grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let shard = self.data.shard(node);
        let run = |idx: &mut dyn Iterator<Item = usize>, count: usize, grad: &mut [f64]| {
            assert!(count > 0, "empty batch");
            let scale = 1.0 / count as f64;
            let mut total = 0.0;
            for i in idx {
                total += self.model.sample_loss(
                    theta,
                    self.data.x(i),
                    self.data.y(i),
                    Some(&mut *grad),
                    scale,
                );
            }
            total * scale
        };
        match batch {
            Batch::Full => run(&mut shard.iter().copied(), shard.len(), grad),
            Batch::Samples(pos) => run(&mut pos.iter().map(|&k| shard[k]), pos.len(), grad),
        }
    }

    fn loss(&self, node: usize, theta: &[f64], batch: &Batch) -> f64 {
        let shard = self.data.shard(node);
        let idx: Vec<usize> = match batch {
            Batch::Full => shard.to_vec(),
            Batch::Samples(pos) => pos.iter().map(|&k| shard[k]).collect(),
        };
        assert!(!idx.is_empty(), "empty batch");
        idx.iter()
            .map(|&i| {
                self.model
                    .sample_loss(theta, self.data.x(i), self.data.y(i), None, 1.0)
            })
            .sum::<f64>()
            / idx.len() as f64
    }
}

/// `f_i(theta) = 0.5 ||theta - a_i||^2`, estimated from samples `z` whose
/// mean is exactly `a_i`: the batch loss is `mean 0.5 ||theta - z||^2 - c_i`
/// with `c_i` the sample spread, so batch losses and gradients are unbiased.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    centers: Vec<Vec<f64>>,
    samples: Vec<Vec<Vec<f64>>>,
    offsets: Vec<f64>,
}

impl QuadraticObjective {
    /// Noise-free oracles (one sample per node, the center itself).
    pub fn new(centers: Vec<Vec<f64>>) -> Result<Self> {
        Self::noisy(centers, 0.0, 1, 0)
    }

    pub fn noisy(
        centers: Vec<Vec<f64>>,
        noise: f64,
        samples_per_node: usize,
        seed: u64,
    ) -> Result<Self> {
        if centers.is_empty() || centers[0].is_empty() {
            return Err(Error::Dimension(
                "quadratic objective needs nonempty centers".into(),
            ));
        }
        let d = centers[0].len();
        if centers.iter().any(|c| c.len() != d) {
            return Err(Error::Dimension("centers differ in dimension".into()));
        }
        if samples_per_node == 0 || !(noise >= 0.0) {
            return Err(Error::Param(
                "need samples_per_node >= 1 and noise >= 0".into(),
            ));
        }
        let mut rng = global_stream(seed, Purpose::Data);
        let mut samples = Vec::with_capacity(centers.len());
        let mut offsets = Vec::with_capacity(centers.len());
        for a in &centers {
            let mut pts: Vec<Vec<f64>> = (0..samples_per_node)
                .map(|_| {
                    (0..d)
                        .map(|_| noise * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect();
            let mut mean = vec![0.0; d];
            for p in &pts {
                for (m, v) in mean.iter_mut().zip(p) {
                    *m += v / samples_per_node as f64;
                }
            }
            for p in pts.iter_mut() {
                for ((v, m), c) in p.iter_mut().zip(&mean).zip(a) {
                    *v = *v - m + c;
                }
            }
            let spread = pts
                .iter()
                .map(|p| 0.5 * p.iter().zip(a).map(|(x, c)| (x - c) * (x - c)).sum::<f64>())
                .sum::<f64>()
                / samples_per_node as f64;
            samples.push(pts);
            offsets.push(spread);
        }
        Ok(QuadraticObjective {
            centers,
            samples,
            offsets,
        })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }
}

impl LocalObjective for QuadraticObjective {
    fn num_nodes(&self) -> usize {
        self.centers.len()
    }

    fn dim(&self) -> usize {
        self.centers[0].len()
    }

    fn node_weights(&self) -> Vec<f64> {
        vec![1.0 / self.centers.len() as f64; self.centers.len()]
    }

    fn shard_size(&self, node: usize) -> usize {
        self.samples[node].len()
    }

    fn initial_params(&self, _seed: u64) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn loss_grad(&self, node: usize, theta: &[f64], batch: &Batch, grad: &mut [f64]) -> f64 {
        if let Batch::Full = batch {
            // exact: 0.5 ||theta - a||^2
            let a = &self.centers[node];
            let mut loss = 0.0;
            for ((g, t), c) in grad.iter_mut().zip(theta).zip(a) {
                *g = t - c;
                loss += 0.5 * (t - c) * (t - c);
            }
            return loss;
        }
        let Batch::Samples(pos) = batch else {
            unreachable!()
        };
        assert!(!pos.is_empty(), "empty batch");
        let scale = 1.0 / pos.len() as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for &k in pos {
            let z = &self.samples[node][k];
            for ((g, t), zv) in grad.iter_mut().zip(theta).zip(z) {
                *g += scale * (t - zv);
                loss += 0.5 * scale * (t - zv) * (t - zv);
            }
        }
        loss - self.offsets[node]
    }
}

/// Stochastic gradients of `g_i` from one minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGrads {
    /// Minibatch estimate of `f_i`.
    pub loss: f64,
    /// `lambda_ii * grad f_i`.
    pub primal: Vec<f64>,
    /// `loss * e_i + alpha grad r(lambda)`.
    pub dual: Vec<f64>,
}

/// The min-max network objective over node losses and a dual regularizer.
#[derive(Clone)]
pub struct RobustObjective {
    local: Arc<dyn LocalObjective>,
    regularizer: Regularizer,
}

impl std::fmt::Debug for RobustObjective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RobustObjective")
            .field("nodes", &self.local.num_nodes())
            .field("dim", &self.local.dim())
            .field("regularizer", &self.regularizer)
            .finish()
    }
}

impl RobustObjective {
    pub fn new(local: Arc<dyn LocalObjective>, regularizer: Regularizer) -> Result<Self> {
        if regularizer.weights().len() != local.num_nodes() {
            return Err(Error::Dimension(format!(
                "regularizer over {} nodes, objective has {}",
                regularizer.weights().len(),
                local.num_nodes()
            )));
        }
        Ok(RobustObjective { local, regularizer })
    }

    pub fn local(&self) -> &Arc<dyn LocalObjective> {
        &self.local
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn alpha(&self) -> f64 {
        self.regularizer.alpha
    }

    pub fn num_nodes(&self) -> usize {
        self.local.num_nodes()
    }

    pub fn dim(&self) -> usize {
        self.local.dim()
    }

    pub fn node_weights(&self) -> &[f64] {
        self.regularizer.weights()
    }

    pub fn stoch_grads(
        &self,
        node: usize,
        theta: &[f64],
        lambda: &[f64],
        batch: &Batch,
    ) -> NodeGrads {
        let mut primal = vec![0.0; self.dim()];
        let loss = self.local.loss_grad(node, theta, batch, &mut primal);
        let weight = lambda[node];
        primal.iter_mut().for_each(|g| *g *= weight);
        let (_, rgrad) = self.regularizer.value_grad(lambda);
        let mut dual: Vec<f64> = rgrad.iter().map(|g| self.regularizer.alpha * g).collect();
        dual[node] += loss;
        NodeGrads { loss, primal, dual }
    }

    pub fn primal_stoch_grad(
        &self,
        node: usize,
        theta: &[f64],
        lambda: &[f64],
        batch: &Batch,
    ) -> Vec<f64> {
        self.stoch_grads(node, theta, lambda, batch).primal
    }

    pub fn dual_stoch_grad(
        &self,
        node: usize,
        theta: &[f64],
        lambda: &[f64],
        batch: &Batch,
    ) -> Vec<f64> {
        self.stoch_grads(node, theta, lambda, batch).dual
    }

    /// Exact `f_i(theta)` for every node.
    pub fn full_losses(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.num_nodes())
            .map(|i| self.local.loss(i, theta, &Batch::Full))
            .collect()
    }

    /// `g_i(theta, lambda)` on the full shard.
    pub fn node_value(&self, node: usize, theta: &[f64], lambda: &[f64]) -> f64 {
        lambda[node] * self.local.loss(node, theta, &Batch::Full)
            + self.regularizer.alpha * self.regularizer.value(lambda)
    }

    /// `g(theta, lambda) = (1/m) sum_i lambda_i f_i(theta) + alpha r(lambda)`.
    pub fn value(&self, theta: &[f64], lambda: &[f64]) -> f64 {
        self.value_from_losses(&self.full_losses(theta), lambda)
    }

    pub fn value_from_losses(&self, losses: &[f64], lambda: &[f64]) -> f64 {
        let m = self.num_nodes() as f64;
        losses.iter().zip(lambda).map(|(f, l)| l * f).sum::<f64>() / m
            + self.regularizer.alpha * self.regularizer.value(lambda)
    }

    /// `grad_theta g = (1/m) sum_i lambda_i grad f_i` on full shards.
    pub fn primal_full_grad(&self, theta: &[f64], lambda: &[f64], grad: &mut [f64]) -> f64 {
        let m = self.num_nodes();
        let mut scratch = vec![0.0; self.dim()];
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        for i in 0..m {
            let f = self.local.loss_grad(i, theta, &Batch::Full, &mut scratch);
            value += lambda[i] * f / m as f64;
            for (g, s) in grad.iter_mut().zip(&scratch) {
                *g += lambda[i] * s / m as f64;
            }
        }
        value + self.regularizer.alpha * self.regularizer.value(lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::regularizer::RegularizerKind;

    fn quad() -> RobustObjective {
        let local = QuadraticObjective::new(vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let reg = Regularizer::new(RegularizerKind::Chi2, 0.5, vec![0.5, 0.5]).unwrap();
        RobustObjective::new(Arc::new(local), reg).unwrap()
    }

    #[test]
    fn primal_grad_scaled_by_own_weight() {
        let obj = quad();
        let g = obj.primal_stoch_grad(0, &[3.0, 3.0], &[0.0, 1.0], &Batch::Full);
        assert_eq!(g, vec![0.0, 0.0]);
        let g = obj.primal_stoch_grad(0, &[3.0, 3.0], &[1.0, 0.0], &Batch::Full);
        assert_eq!(g, vec![2.0, 3.0]);
    }

    #[test]
    fn dual_grad_without_regularizer() {
        let local = QuadraticObjective::new(vec![vec![1.0], vec![0.0], vec![4.0]]).unwrap();
        let reg = Regularizer::new(RegularizerKind::Chi2, 0.0, vec![1.0 / 3.0; 3]).unwrap();
        let obj = RobustObjective::new(Arc::new(local), reg).unwrap();
        let d = obj.dual_stoch_grad(2, &[0.0], &[0.2, 0.3, 0.5], &Batch::Full);
        assert_eq!(d, vec![0.0, 0.0, 8.0]);
    }

    #[test]
    fn network_value_assembles_from_nodes() {
        let obj = quad();
        let theta = [0.3, -0.7];
        let lambda = [0.8, 0.2];
        let per_node: f64 = (0..2)
            .map(|i| obj.node_value(i, &theta, &lambda))
            .sum::<f64>()
            / 2.0;
        assert!((per_node - obj.value(&theta, &lambda)).abs() < 1e-12);
    }

    #[test]
    fn noisy_quadratic_is_unbiased() {
        let local = QuadraticObjective::noisy(vec![vec![1.0, -1.0]], 0.5, 50, 3).unwrap();
        let theta = [0.2, 0.4];
        // averaging over every sample reproduces the exact loss and gradient
        let all = Batch::Samples((0..50).collect());
        let mut g = vec![0.0; 2];
        let l = local.loss_grad(0, &theta, &all, &mut g);
        let mut ge = vec![0.0; 2];
        let le = local.loss_grad(0, &theta, &Batch::Full, &mut ge);
        assert!((l - le).abs() < 1e-12);
        assert!(g.iter().zip(&ge).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn classification_rejects_mismatch() {
        let d = Dataset::new(vec![0.0; 4], vec![0, 1], 2, 2).unwrap();
        let m = Model::Logistic {
            features: 3,
            classes: 2,
            bias: true,
        };
        assert!(ClassificationObjective::new(Arc::new(d), m).is_err());
    }

    #[test]
    fn single_sample_batch_is_per_sample_gradient() {
        let d = Dataset::new(vec![1.0, 2.0, -1.0, 0.5], vec![0, 1], 2, 2).unwrap();
        let model = Model::Logistic {
            features: 2,
            classes: 2,
            bias: true,
        };
        let obj = ClassificationObjective::new(Arc::new(d.clone()), model).unwrap();
        let theta: Vec<f64> = (0..model.dim()).map(|k| 0.1 * k as f64).collect();
        let mut g = vec![0.0; model.dim()];
        let l = obj.loss_grad(0, &theta, &Batch::Samples(vec![1]), &mut g);
        let mut want = vec![0.0; model.dim()];
        let lw = model.sample_loss(&theta, d.x(1), d.y(1), Some(&mut want), 1.0);
        assert_eq!(l, lw);
        assert_eq!(g, want);
    }
}
