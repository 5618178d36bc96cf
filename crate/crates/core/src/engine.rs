//! Round-by-round execution of compressed decentralized gradient descent-ascent
//! and the two baselines (non-robust compressed gossip SGD, and a variant
//! whose dual is the closed-form KL maximizer of gossiped losses).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::compression::{CompressedMessage, CompressionSpec, FLOAT_BITS};
use crate::diagnostics::{
    consensus_error, mean_vector, tilted_weights, worst_group_metrics, RecordRow, RunRecord,
};
use crate::error::{Error, Result};
use crate::objective::{project_simplex, Dataset, Model, RegularizerKind, RobustObjective};
use crate::rng::{stream, Purpose};
use crate::topology::MixingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    AdGda,
    /// Dual frozen at the empirical weights; no dual messages.
    ChocoSgd,
    /// Dual set to `p exp(f/alpha)` from a gossiped table of minibatch losses.
    DrDsgd,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::AdGda => "adgda",
            Algorithm::ChocoSgd => "choco_sgd",
            Algorithm::DrDsgd => "dr_dsgd",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adgda" => Ok(Algorithm::AdGda),
            "choco_sgd" | "choco" => Ok(Algorithm::ChocoSgd),
            "dr_dsgd" => Ok(Algorithm::DrDsgd),
            _ => Err(Error::Param(format!(
                "unknown algorithm {s:?} (adgda | choco_sgd | dr_dsgd)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Constant,
    /// `eta0 / sqrt(T)` at every round.
    InvSqrtT,
    /// `eta0 r^t`, decreasing.
    Geometric(f64),
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Schedule::Geometric(r) if !(r > 0.0 && r < 1.0) => {
                Err(Error::Param(format!("geometric ratio {r} not in (0, 1)")))
            }
            _ => Ok(()),
        }
    }

    pub fn factor(&self, t: usize, rounds: usize) -> f64 {
        match *self {
            Schedule::Constant => 1.0,
            Schedule::InvSqrtT => 1.0 / (rounds as f64).sqrt(),
            Schedule::Geometric(r) => r.powi(t as i32),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant => f.write_str("constant"),
            Schedule::InvSqrtT => f.write_str("invsqrtT"),
            Schedule::Geometric(r) => write!(f, "geometric:{r}"),
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sched = match s {
            "constant" => Schedule::Constant,
            "invsqrtT" | "invsqrt" => Schedule::InvSqrtT,
            _ => match s.strip_prefix("geometric:") {
                Some(r) => Schedule::Geometric(
                    r.parse()
                        .map_err(|_| Error::Param(format!("bad geometric ratio {r:?}")))?,
                ),
                None => {
                    return Err(Error::Param(format!(
                        "unknown schedule {s:?} (constant | invsqrtT | geometric:<r>)"
                    )))
                }
            },
        };
        sched.validate()?;
        Ok(sched)
    }
}

/// `(eta_theta, eta_lambda)` at round `t`.
pub fn lr_schedule(
    schedule: Schedule,
    eta_theta0: f64,
    eta_lambda0: f64,
    t: usize,
    rounds: usize,
) -> (f64, f64) {
    let f = schedule.factor(t, rounds);
    (eta_theta0 * f, eta_lambda0 * f)
}

/// `eta_lambda / (16 (kappa + 1)^2)` with `kappa = L / mu`.
pub fn coupled_primal_rate(eta_lambda: f64, smoothness: f64, concavity: f64) -> Result<f64> {
    if !(concavity > 0.0) || !(smoothness > 0.0) {
        return Err(Error::Param(
            "coupled rates need positive smoothness and concavity".into(),
        ));
    }
    let kappa = smoothness / concavity;
    Ok(eta_lambda / (16.0 * (kappa + 1.0).powi(2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrackerInit {
    /// `theta_hat = s = 0`.
    #[default]
    Zero,
    /// `theta_hat = theta0`, `s = W theta0`.
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualInit {
    #[default]
    NodeWeights,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub algorithm: Algorithm,
    pub eta_theta: f64,
    pub eta_lambda: f64,
    pub schedule: Schedule,
    pub gamma: f64,
    pub rounds: usize,
    /// Minibatch size; 0 means the full shard.
    pub batch: usize,
    pub tracker_init: TrackerInit,
    pub dual_init: DualInit,
}

/// The config defaults, with full gossip (`gamma = 1`).
impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            algorithm: Algorithm::AdGda,
            eta_theta: 0.1,
            eta_lambda: 0.1,
            schedule: Schedule::Constant,
            gamma: 1.0,
            rounds: 1000,
            batch: 32,
            tracker_init: TrackerInit::default(),
            dual_init: DualInit::default(),
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_theta >= 0.0 && self.eta_theta.is_finite())
            || !(self.eta_lambda >= 0.0 && self.eta_lambda.is_finite())
        {
            return Err(Error::Param(
                "learning rates must be finite and nonnegative".into(),
            ));
        }
        if !(self.gamma >= 0.0 && self.gamma <= 1.0) {
            return Err(Error::Param(format!("gamma {} not in [0, 1]", self.gamma)));
        }
        if self.rounds == 0 {
            return Err(Error::Param("need at least one round".into()));
        }
        self.schedule.validate()
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub data: Arc<Dataset>,
    pub model: Model,
}

#[derive(Debug, Clone)]
pub struct EngineOptions {
    /// Rounds between metric rows; rows are also taken at 0 and T.
    pub cadence: usize,
    pub parallel: bool,
    /// Compute per-round conservation audits.
    pub audit: bool,
    pub eval: Option<Evaluation>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            cadence: 10,
            parallel: true,
            audit: false,
            eval: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub s: Vec<f64>,
    /// Gossiped loss table, only used by the closed-form dual variant.
    pub loss_table: Vec<f64>,
    pub bits: u64,
}

/// Conservation checks for one round.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoundAudit {
    /// `|mean theta^{t+1} - mean theta^{t+1/2}|_inf / (1 + |mean theta^{t+1/2}|_inf)`.
    pub gossip_mean_drift: f64,
    /// `|mean lambda^{t+1} - mean lambda^{t+1/2}|_inf`.
    pub lambda_mean_drift: f64,
    /// `max_i |s_i - sum_j w_ij theta_hat_j|_inf` after the exchange.
    pub tracker_drift: f64,
    /// Every `lambda_i` on the simplex.
    pub lambda_feasible: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub theta_out: Vec<f64>,
    pub lambda_out: Vec<f64>,
    pub final_states: Vec<NodeState>,
    pub record: RunRecord,
}

/// Result of the local phase at one node.
struct HalfStep {
    theta_half: Vec<f64>,
    theta_next: Vec<f64>,
    lambda_half: Vec<f64>,
    q: CompressedMessage,
    /// Loss table with the node's fresh entry (closed-form dual variant only).
    loss_table: Vec<f64>,
    g_theta: f64,
    g_lambda: f64,
}

pub struct Engine {
    objective: Arc<RobustObjective>,
    mixing: MixingMatrix,
    compression: CompressionSpec,
    hyper: HyperParams,
    options: EngineOptions,
    seed: u64,
    nodes: Vec<NodeState>,
    t: usize,
    theta_sum: Vec<f64>,
    lambda_sum: Vec<f64>,
    g_theta_max: f64,
    g_lambda_max: f64,
}

impl Engine {
    pub fn new(
        objective: Arc<RobustObjective>,
        mixing: MixingMatrix,
        compression: CompressionSpec,
        hyper: HyperParams,
        options: EngineOptions,
        seed: u64,
    ) -> Result<Self> {
        hyper.validate()?;
        let m = objective.num_nodes();
        let d = objective.dim();
        if mixing.num_nodes() != m {
            return Err(Error::Dimension(format!(
                "mixing matrix over {} nodes, objective has {m}",
                mixing.num_nodes()
            )));
        }
        if compression.dim() != d {
            return Err(Error::Dimension(format!(
                "compression for dimension {}, model has {d}",
                compression.dim()
            )));
        }
        if options.cadence == 0 {
            return Err(Error::Param("metric cadence must be positive".into()));
        }
        if hyper.algorithm == Algorithm::DrDsgd
            && objective.regularizer().kind != RegularizerKind::Kl
        {
            return Err(Error::Param("dr_dsgd needs the KL regularizer".into()));
        }
        if hyper.algorithm == Algorithm::DrDsgd && !(objective.alpha() > 0.0) {
            return Err(Error::Param("dr_dsgd needs alpha > 0".into()));
        }
        if let Some(ev) = &options.eval {
            if ev.model.dim() != d {
                return Err(Error::Dimension(format!(
                    "evaluation model has dimension {}, objective {d}",
                    ev.model.dim()
                )));
            }
        }
        let theta0 = objective.local().initial_params(seed);
        if theta0.len() != d {
            return Err(Error::Dimension(
                "initial parameters have the wrong length".into(),
            ));
        }
        let lambda0 = match (hyper.algorithm, hyper.dual_init) {
            (Algorithm::ChocoSgd, _) | (_, DualInit::NodeWeights) => {
                objective.node_weights().to_vec()
            }
            (_, DualInit::Uniform) => vec![1.0 / m as f64; m],
        };
        let nodes = (0..m)
            .map(|_| NodeState {
                theta: theta0.clone(),
                lambda: lambda0.clone(),
                theta_hat: vec![0.0; d],
                s: vec![0.0; d],
                loss_table: if hyper.algorithm == Algorithm::DrDsgd {
                    vec![0.0; m]
                } else {
                    Vec::new()
                },
                bits: 0,
            })
            .collect();
        let mut engine = Engine {
            objective,
            mixing,
            compression,
            hyper,
            options,
            seed,
            nodes,
            t: 0,
            theta_sum: vec![0.0; d],
            lambda_sum: vec![0.0; m],
            g_theta_max: 0.0,
            g_lambda_max: 0.0,
        };
        engine.reset_trackers();
        Ok(engine)
    }

    /// Replaces every node's primal iterate; trackers are re-initialized accordingly.
    pub fn with_initial_thetas(mut self, thetas: Vec<Vec<f64>>) -> Result<Self> {
        if self.t != 0 {
            return Err(Error::Param(
                "initial thetas can only be set before the first round".into(),
            ));
        }
        if thetas.len() != self.nodes.len()
            || thetas.iter().any(|t| t.len() != self.objective.dim())
        {
            return Err(Error::Dimension(
                "initial thetas must be one d-vector per node".into(),
            ));
        }
        for (n, th) in self.nodes.iter_mut().zip(thetas) {
            n.theta = th;
        }
        self.reset_trackers();
        Ok(self)
    }

    fn reset_trackers(&mut self) {
        let d = self.objective.dim();
        match self.hyper.tracker_init {
            TrackerInit::Zero => {
                for n in &mut self.nodes {
                    n.theta_hat = vec![0.0; d];
                    n.s = vec![0.0; d];
                }
            }
            TrackerInit::Consistent => {
                let hats: Vec<Vec<f64>> = self.nodes.iter().map(|n| n.theta.clone()).collect();
                for (i, n) in self.nodes.iter_mut().enumerate() {
                    n.s = mix_row(&self.mixing, i, &hats);
                    n.theta_hat = hats[i].clone();
                }
            }
        }
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn states(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn objective(&self) -> &RobustObjective {
        &self.objective
    }

    pub fn rates(&self, t: usize) -> (f64, f64) {
        lr_schedule(
            self.hyper.schedule,
            self.hyper.eta_theta,
            self.hyper.eta_lambda,
            t,
            self.hyper.rounds,
        )
    }

    /// Payload bits one node sends per round.
    pub fn bits_per_round(&self) -> u64 {
        let dual = match self.hyper.algorithm {
            Algorithm::ChocoSgd => 0,
            Algorithm::AdGda | Algorithm::DrDsgd => FLOAT_BITS * self.nodes.len() as u64,
        };
        self.compression.message_bits() + dual
    }

    pub fn theta_bar(&self) -> Vec<f64> {
        mean_vector(
            &self
                .nodes
                .iter()
                .map(|n| n.theta.clone())
                .collect::<Vec<_>>(),
        )
    }

    pub fn lambda_bar(&self) -> Vec<f64> {
        mean_vector(
            &self
                .nodes
                .iter()
                .map(|n| n.lambda.clone())
                .collect::<Vec<_>>(),
        )
    }

    fn local_step(&self, i: usize) -> Result<HalfStep> {
        let t = self.t;
        let node = &self.nodes[i];
        let obj = &self.objective;
        let (eta_theta, eta_lambda) = self.rates(t);
        let mut batch_rng = stream(self.seed, i, t, Purpose::Batch);
        let batch = obj
            .local()
            .sample_batch(i, self.hyper.batch, &mut batch_rng);

        let mut loss_table = Vec::new();
        let (theta_half, lambda_half, g_theta, g_lambda) = match self.hyper.algorithm {
            Algorithm::AdGda => {
                let g = obj.stoch_grads(i, &node.theta, &node.lambda, &batch);
                check_finite(&g.primal, g.loss, t, i)?;
                check_finite(&g.dual, 0.0, t, i)?;
                let theta_half = axpy(&node.theta, -eta_theta, &g.primal);
                let lambda_half = project_simplex(&axpy(&node.lambda, eta_lambda, &g.dual));
                (theta_half, lambda_half, norm(&g.primal), norm(&g.dual))
            }
            Algorithm::ChocoSgd => {
                let g = obj.stoch_grads(i, &node.theta, &node.lambda, &batch);
                check_finite(&g.primal, g.loss, t, i)?;
                let theta_half = axpy(&node.theta, -eta_theta, &g.primal);
                (theta_half, node.lambda.clone(), norm(&g.primal), 0.0)
            }
            Algorithm::DrDsgd => {
                let mut grad = vec![0.0; obj.dim()];
                let loss = obj.local().loss_grad(i, &node.theta, &batch, &mut grad);
                check_finite(&grad, loss, t, i)?;
                loss_table = node.loss_table.clone();
                loss_table[i] = loss;
                let lambda = dr_dsgd_weights(&loss_table, obj.node_weights(), obj.alpha());
                grad.iter_mut().for_each(|g| *g *= lambda[i]);
                let theta_half = axpy(&node.theta, -eta_theta, &grad);
                (theta_half, lambda, norm(&grad), 0.0)
            }
        };

        // gossip line, then compress the change to the public copy
        let theta_next: Vec<f64> = theta_half
            .iter()
            .zip(node.s.iter().zip(&node.theta_hat))
            .map(|(h, (s, hat))| h + self.hyper.gamma * (s - hat))
            .collect();
        if theta_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                round: t,
                node: i,
                what: "non-finite parameters",
            });
        }
        let diff: Vec<f64> = theta_next
            .iter()
            .zip(&node.theta_hat)
            .map(|(a, b)| a - b)
            .collect();
        let mut comp_rng = stream(self.seed, i, t, Purpose::Compress);
        let q = self.compression.compress(&diff, &mut comp_rng);
        Ok(HalfStep {
            theta_half,
            theta_next,
            lambda_half,
            q,
            loss_table,
            g_theta,
            g_lambda,
        })
    }

    /// Executes one round and returns its audit (zeros unless auditing is on).
    pub fn step(&mut self) -> Result<RoundAudit> {
        if self.t >= self.hyper.rounds {
            return Err(Error::Param(format!(
                "all {} rounds already executed",
                self.hyper.rounds
            )));
        }
        let m = self.nodes.len();
        // theta_o and lambda_o average the iterates of rounds 0..T-1
        let (theta_bar, lambda_bar) = (self.theta_bar(), self.lambda_bar());
        for (acc, v) in self.theta_sum.iter_mut().zip(theta_bar) {
            *acc += v;
        }
        for (acc, v) in self.lambda_sum.iter_mut().zip(lambda_bar) {
            *acc += v;
        }

        let halves: Vec<HalfStep> = if self.options.parallel {
            (0..m)
                .into_par_iter()
                .map(|i| self.local_step(i))
                .collect::<Result<_>>()?
        } else {
            (0..m).map(|i| self.local_step(i)).collect::<Result<_>>()?
        };
        for h in &halves {
            self.g_theta_max = self.g_theta_max.max(h.g_theta);
            self.g_lambda_max = self.g_lambda_max.max(h.g_lambda);
        }

        let algorithm = self.hyper.algorithm;
        let dual_bits = self.bits_per_round() - self.compression.message_bits();
        let mixing = &self.mixing;
        let exchange = |(i, node): (usize, &mut NodeState)| {
            let h = &halves[i];
            node.theta.clone_from(&h.theta_next);
            for (hat, q) in node.theta_hat.iter_mut().zip(&h.q.values) {
                *hat += q;
            }
            for &(j, w) in mixing.row(i) {
                for (s, q) in node.s.iter_mut().zip(&halves[j].q.values) {
                    *s += w * q;
                }
            }
            match algorithm {
                Algorithm::AdGda => {
                    node.lambda = mix_row_by(mixing, i, m, |j| &halves[j].lambda_half)
                }
                Algorithm::ChocoSgd => {}
                Algorithm::DrDsgd => {
                    node.lambda.clone_from(&h.lambda_half);
                    node.loss_table = mix_row_by(mixing, i, m, |j| &halves[j].loss_table);
                }
            }
            node.bits += h.q.bits + dual_bits;
        };
        if self.options.parallel {
            self.nodes.par_iter_mut().enumerate().for_each(exchange);
        } else {
            self.nodes.iter_mut().enumerate().for_each(exchange);
        }

        let audit = if self.options.audit {
            self.audit(&halves)
        } else {
            RoundAudit::default()
        };
        self.t += 1;
        Ok(audit)
    }

    fn audit(&self, halves: &[HalfStep]) -> RoundAudit {
        let m = self.nodes.len();
        let half_mean = mean_vector(
            &halves
                .iter()
                .map(|h| h.theta_half.clone())
                .collect::<Vec<_>>(),
        );
        let next_mean = self.theta_bar();
        let scale = 1.0 + inf_norm(&half_mean);
        let gossip_mean_drift = half_mean
            .iter()
            .zip(&next_mean)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        let lambda_mean_drift = match self.hyper.algorithm {
            Algorithm::AdGda => {
                let half = mean_vector(
                    &halves
                        .iter()
                        .map(|h| h.lambda_half.clone())
                        .collect::<Vec<_>>(),
                );
                half.iter()
                    .zip(self.lambda_bar())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            }
            _ => 0.0,
        };
        let hats: Vec<Vec<f64>> = self.nodes.iter().map(|n| n.theta_hat.clone()).collect();
        let tracker_drift = (0..m)
            .map(|i| {
                let want = mix_row(&self.mixing, i, &hats);
                want.iter()
                    .zip(&self.nodes[i].s)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let lambda_feasible = self
            .nodes
            .iter()
            .all(|n| crate::objective::is_in_simplex(&n.lambda, 1e-9));
        RoundAudit {
            gossip_mean_drift,
            lambda_mean_drift,
            tracker_drift,
            lambda_feasible,
        }
    }

    /// Metrics on the network-average iterates at the current round.
    pub fn metrics_row(&self) -> Result<RecordRow> {
        let obj = &self.objective;
        let theta_bar = self.theta_bar();
        let lambda_bar = self.lambda_bar();
        let node_losses = obj.full_losses(&theta_bar);
        let worst_loss = node_losses
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let avg_loss = node_losses
            .iter()
            .zip(obj.node_weights())
            .map(|(f, p)| f * p)
            .sum();
        let (worst_acc, avg_acc) = match &self.options.eval {
            Some(ev) => {
                let gm = worst_group_metrics(&ev.model, &theta_bar, &ev.data)?;
                (gm.worst_acc, gm.avg_acc)
            }
            None => (f64::NAN, f64::NAN),
        };
        let thetas: Vec<Vec<f64>> = self.nodes.iter().map(|n| n.theta.clone()).collect();
        let lambdas: Vec<Vec<f64>> = self.nodes.iter().map(|n| n.lambda.clone()).collect();
        let t = self.t;
        // rates in effect for the round that starts here; the last row repeats the final round's
        let (eta_theta, eta_lambda) = self.rates(t.min(self.hyper.rounds - 1));
        Ok(RecordRow {
            t,
            node_losses,
            worst_loss,
            avg_loss,
            worst_acc,
            avg_acc,
            xi_theta: consensus_error(&thetas),
            xi_lambda: consensus_error(&lambdas),
            lambda_bar,
            bits: self.nodes.iter().map(|n| n.bits).collect(),
            eta_theta,
            eta_lambda,
            g_theta_max: self.g_theta_max,
            g_lambda_max: self.g_lambda_max,
        })
    }

    pub fn run(self) -> Result<RunOutput> {
        self.run_observed(|_, _| {})
    }

    /// Runs all remaining rounds, calling `observer(t, audit)` after each.
    pub fn run_observed(
        mut self,
        mut observer: impl FnMut(usize, &RoundAudit),
    ) -> Result<RunOutput> {
        let mut record = RunRecord::new(self.nodes.len());
        let rounds = self.hyper.rounds;
        while self.t < rounds {
            if self.t % self.options.cadence == 0 {
                record.rows.push(self.metrics_row()?);
            }
            let t = self.t;
            let audit = self.step()?;
            observer(t, &audit);
        }
        record.rows.push(self.metrics_row()?);
        let inv = 1.0 / rounds as f64;
        Ok(RunOutput {
            theta_out: self.theta_sum.iter().map(|v| v * inv).collect(),
            lambda_out: self.lambda_sum.iter().map(|v| v * inv).collect(),
            final_states: self.nodes,
            record,
        })
    }
}

/// The closed-form dual of the KL variant: `lambda_j ∝ p_j exp(f_j / alpha)`.
pub fn dr_dsgd_weights(losses: &[f64], weights: &[f64], alpha: f64) -> Vec<f64> {
    tilted_weights(losses, weights, alpha)
}

fn mix_row(mixing: &MixingMatrix, i: usize, values: &[Vec<f64>]) -> Vec<f64> {
    mix_row_by(mixing, i, values[0].len(), |j| &values[j])
}

fn mix_row_by<'a>(
    mixing: &MixingMatrix,
    i: usize,
    len: usize,
    value: impl Fn(usize) -> &'a Vec<f64>,
) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for &(j, w) in mixing.row(i) {
        for (a, b) in out.iter_mut().zip(value(j)) {
            *a += w * b;
        }
    }
    out
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(x, y)| x + a * y).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn check_finite(grad: &[f64], loss: f64, round: usize, node: usize) -> Result<()> {
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Diverged {
            round,
            node,
            what: "non-finite loss or gradient",
        });
    }
    Ok(())
}
