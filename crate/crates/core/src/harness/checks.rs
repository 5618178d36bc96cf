//! Property suites run by the `check` command. Each suite returns `Ok` with a
//! short note or `Err` with the first failure it found.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::compression::{CompressionKind, CompressionSpec};
use crate::diagnostics::{best_response_lambda, consensus_error};
use crate::engine::{
    Algorithm, DualInit, Engine, EngineOptions, HyperParams, RoundAudit, Schedule, TrackerInit,
};
use crate::harness::config::ExperimentConfig;
use crate::objective::{
    is_in_simplex, project_simplex, synth_heterogeneous, Batch, ClassificationObjective,
    LocalObjective, Model, QuadraticObjective, Regularizer, RegularizerKind, RobustObjective,
};
use crate::oracle;
use crate::rng::{stream, Purpose};
use crate::topology::{
    consensus_rate, consensus_step_size, MixingMatrix, MixingRule, Topology, TopologyKind,
};

/// Implementations under test that a caller may swap for a faulty one.
#[derive(Clone, Copy)]
pub struct CheckDeps {
    pub project: fn(&[f64]) -> Vec<f64>,
}

impl Default for CheckDeps {
    fn default() -> Self {
        CheckDeps {
            project: project_simplex,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub outcome: std::result::Result<String, String>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub suites: Vec<SuiteResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.outcome.is_ok())
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.suites
            .iter()
            .filter(|s| s.outcome.is_err())
            .map(|s| s.name)
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            let (tag, msg) = match &s.outcome {
                Ok(m) => ("PASS", m),
                Err(m) => ("FAIL", m),
            };
            out.push_str(&format!(
                "{tag} {:<12} {:>8.1} ms  {msg}\n",
                s.name,
                s.elapsed.as_secs_f64() * 1e3
            ));
        }
        out
    }
}

type Outcome = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn run_checks() -> CheckReport {
    run_checks_with(CheckDeps::default())
}

pub fn run_checks_with(deps: CheckDeps) -> CheckReport {
    let suites: [(&'static str, Box<dyn Fn() -> Outcome>); 8] = [
        ("topology", Box::new(topology_suite)),
        ("compression", Box::new(compression_suite)),
        (
            "projection",
            Box::new(move || projection_suite(deps.project)),
        ),
        ("gradients", Box::new(gradient_suite)),
        ("regularizer", Box::new(regularizer_suite)),
        ("engine", Box::new(engine_suite)),
        ("diagnostics", Box::new(diagnostics_suite)),
        ("config", Box::new(config_suite)),
    ];
    let suites = suites
        .into_iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let outcome = f();
            SuiteResult {
                name,
                outcome,
                elapsed: start.elapsed(),
            }
        })
        .collect();
    CheckReport { suites }
}

pub fn topology_suite() -> Outcome {
    for (kind, m) in [
        (TopologyKind::Ring, 4),
        (TopologyKind::Ring, 9),
        (TopologyKind::Complete, 6),
        (TopologyKind::Star, 5),
        (TopologyKind::Torus2d { rows: 3, cols: 4 }, 12),
    ] {
        for rule in [MixingRule::Metropolis, MixingRule::Uniform] {
            let w = MixingMatrix::from_topology(
                &Topology::build(kind.clone(), m).map_err(|e| e.to_string())?,
                rule,
            )
            .map_err(|e| e.to_string())?;
            for i in 0..m {
                let row: f64 = (0..m).map(|j| w.get(i, j)).sum();
                ensure!((row - 1.0).abs() < 1e-12, "{kind} row {i} sums to {row}");
                for j in 0..m {
                    ensure!(
                        w.get(i, j) == w.get(j, i) && w.get(i, j) >= 0.0,
                        "{kind} not symmetric nonnegative"
                    );
                }
            }
            let rho = oracle::spectral_gap(m, w.dense());
            ensure!(
                (rho - w.rho()).abs() < 1e-9,
                "{kind} {rule}: rho {} vs oracle {rho}",
                w.rho()
            );
        }
    }
    let g = consensus_step_size(1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    ensure!((g - 1.0 / 15.0).abs() < 1e-15, "gamma(1,1,1) = {g}");
    ensure!(
        (consensus_rate(1.0, 1.0) - 1.0 / 82.0).abs() < 1e-15,
        "c(1,1) wrong"
    );
    Ok("stochasticity, symmetry, spectral gap vs Jacobi".into())
}

pub fn compression_suite() -> Outcome {
    let d = 100;
    let mut rng = stream(99, 0, 0, Purpose::Data);
    for kind in [
        CompressionKind::RandQuant { bits: 4 },
        CompressionKind::RandQuant { bits: 8 },
        CompressionKind::TopK { k: 10 },
        CompressionKind::TopK { k: 50 },
    ] {
        let q = CompressionSpec::new(kind, d).map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for v in 0..50 {
            let scale = 10f64.powi(v % 5 - 2);
            let x: Vec<f64> = (0..d)
                .map(|_| scale * (rng.random::<f64>() - 0.5))
                .collect();
            let nx: f64 = x.iter().map(|a| a * a).sum();
            let mut err = 0.0;
            let draws = 40;
            for _ in 0..draws {
                let out = q.compress(&x, &mut rng);
                err += out
                    .values
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>();
            }
            worst = worst.max(err / draws as f64 / ((1.0 - q.delta()) * nx));
        }
        ensure!(
            worst <= 1.1,
            "{q}: mean error reaches {worst:.3} of the bound"
        );
    }
    let q = CompressionSpec::new(CompressionKind::RandQuant { bits: 4 }, 7850)
        .map_err(|e| e.to_string())?;
    ensure!(
        q.message_bits() == 32 + 7850 * 5,
        "quant:4 bits {}",
        q.message_bits()
    );
    Ok("contraction on mixed scales, bit formula".into())
}

pub fn projection_suite(project: fn(&[f64]) -> Vec<f64>) -> Outcome {
    let mut rng = stream(5, 0, 0, Purpose::Data);
    for _ in 0..200 {
        let m = rng.random_range(1..=5);
        let v: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p = project(&v);
        ensure!(
            is_in_simplex(&p, 1e-10),
            "projection of {v:?} left the simplex: {p:?}"
        );
        let want = oracle::simplex_projection_bruteforce(&v);
        let dev = p
            .iter()
            .zip(&want)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        ensure!(dev <= 1e-9, "projection of {v:?} is {p:?}, oracle {want:?}");
        let again = project(&p);
        let dev = p
            .iter()
            .zip(&again)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        ensure!(dev <= 1e-12, "projection not idempotent at {p:?}");
    }
    Ok("200 inputs vs support enumeration".into())
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-8);
    diff / scale
}

pub fn gradient_suite() -> Outcome {
    let data = Arc::new(synth_heterogeneous(3, 4, 1.0, 8).map_err(|e| e.to_string())?);
    let mut rng = stream(8, 0, 0, Purpose::Data);
    for model in [
        Model::Logistic {
            features: 4,
            classes: 2,
            bias: true,
        },
        Model::Mlp {
            features: 4,
            hidden: 3,
            classes: 2,
        },
    ] {
        let local = ClassificationObjective::new(data.clone(), model).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let theta: Vec<f64> = (0..model.dim())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let batch = Batch::Samples(vec![0, 3, 5]);
            let mut g = vec![0.0; model.dim()];
            local.loss_grad(1, &theta, &batch, &mut g);
            let fd = oracle::finite_difference(|t| local.loss(1, t, &batch), &theta, 1e-6);
            let e = rel_err(&g, &fd);
            ensure!(e <= 1e-5, "{model}: gradient relative error {e:e}");
        }
    }
    let local = ClassificationObjective::new(
        data,
        Model::Logistic {
            features: 4,
            classes: 2,
            bias: true,
        },
    )
    .map_err(|e| e.to_string())?;
    let p = local.node_weights();
    for kind in [RegularizerKind::Chi2, RegularizerKind::Kl] {
        let reg = Regularizer::new(kind, 0.7, p.clone()).map_err(|e| e.to_string())?;
        let obj = RobustObjective::new(Arc::new(local.clone()), reg).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let theta: Vec<f64> = (0..obj.dim())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.2..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let lambda: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let node = rng.random_range(0..3);
            let batch = Batch::Samples(vec![1, 2, 4, 7]);
            let g = obj.stoch_grads(node, &theta, &lambda, &batch);
            // g_i = lambda_i f_i + alpha r(lambda) on the same batch
            let gi = |t: &[f64], l: &[f64]| {
                l[node] * obj.local().loss(node, t, &batch)
                    + obj.alpha() * obj.regularizer().value(l)
            };
            let fd_t = oracle::finite_difference(|t| gi(t, &lambda), &theta, 1e-6);
            let fd_l = oracle::finite_difference(|l| gi(&theta, l), &lambda, 1e-7);
            ensure!(
                rel_err(&g.primal, &fd_t) <= 1e-5,
                "{kind} primal oracle off by {:e}",
                rel_err(&g.primal, &fd_t)
            );
            ensure!(
                rel_err(&g.dual, &fd_l) <= 1e-5,
                "{kind} dual oracle off by {:e}",
                rel_err(&g.dual, &fd_l)
            );
        }
    }
    Ok("logistic, mlp, both g_i oracles vs central differences".into())
}

pub fn regularizer_suite() -> Outcome {
    let p = vec![0.1, 0.2, 0.3, 0.4];
    for kind in [RegularizerKind::Chi2, RegularizerKind::Kl] {
        let reg = Regularizer::new(kind, 1.0, p.clone()).map_err(|e| e.to_string())?;
        let (v, g) = reg.value_grad(&p);
        ensure!(v.abs() < 1e-15, "{kind}: r(p) = {v}");
        // at p the gradient is constant across coordinates, i.e. zero along the simplex
        let spread = g.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - g.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        ensure!(spread.abs() < 1e-12, "{kind}: r not stationary at p");
        let mut rng = stream(3, 0, 0, Purpose::Data);
        for _ in 0..50 {
            let x = project_simplex(&(0..4).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
            ensure!(reg.value(&x) <= 1e-15, "{kind}: r({x:?}) > 0");
        }
    }
    Ok("r(p) = 0, maximum at p".into())
}

fn small_engine(algorithm: Algorithm, parallel: bool) -> Result<Engine, String> {
    let m = 5;
    let data = Arc::new(synth_heterogeneous(m, 4, 2.0, 21).map_err(|e| e.to_string())?);
    let model = Model::Logistic {
        features: 4,
        classes: 2,
        bias: true,
    };
    let local = ClassificationObjective::new(data, model).map_err(|e| e.to_string())?;
    let kind = if algorithm == Algorithm::DrDsgd {
        RegularizerKind::Kl
    } else {
        RegularizerKind::Chi2
    };
    let reg = Regularizer::new(kind, 0.5, local.node_weights()).map_err(|e| e.to_string())?;
    let obj = Arc::new(RobustObjective::new(Arc::new(local), reg).map_err(|e| e.to_string())?);
    let w = MixingMatrix::from_topology(
        &Topology::build(TopologyKind::Ring, m).map_err(|e| e.to_string())?,
        MixingRule::Metropolis,
    )
    .map_err(|e| e.to_string())?;
    let q = CompressionSpec::new(CompressionKind::RandQuant { bits: 4 }, model.dim())
        .map_err(|e| e.to_string())?;
    let gamma = consensus_step_size(w.rho(), q.delta(), w.beta()).map_err(|e| e.to_string())?;
    let hyper = HyperParams {
        algorithm,
        eta_theta: 0.3,
        eta_lambda: 0.3,
        schedule: Schedule::Geometric(0.99),
        gamma,
        rounds: 60,
        batch: 8,
        tracker_init: TrackerInit::Zero,
        dual_init: DualInit::NodeWeights,
    };
    let opts = EngineOptions {
        cadence: 10,
        parallel,
        audit: true,
        eval: None,
    };
    Engine::new(obj, w, q, hyper, opts, 77).map_err(|e| e.to_string())
}

pub fn engine_suite() -> Outcome {
    let mut worst = RoundAudit::default();
    let mut feasible = true;
    let par = small_engine(Algorithm::AdGda, true)?
        .run_observed(|_, a| {
            worst.gossip_mean_drift = worst.gossip_mean_drift.max(a.gossip_mean_drift);
            worst.lambda_mean_drift = worst.lambda_mean_drift.max(a.lambda_mean_drift);
            worst.tracker_drift = worst.tracker_drift.max(a.tracker_drift);
            feasible &= a.lambda_feasible;
        })
        .map_err(|e| e.to_string())?;
    ensure!(
        worst.gossip_mean_drift <= 1e-8,
        "network mean moved by {:e} at the gossip line",
        worst.gossip_mean_drift
    );
    ensure!(
        worst.lambda_mean_drift <= 1e-12,
        "dual mean moved by {:e}",
        worst.lambda_mean_drift
    );
    ensure!(
        worst.tracker_drift <= 1e-8,
        "tracker identity drifted by {:e}",
        worst.tracker_drift
    );
    ensure!(feasible, "a dual iterate left the simplex");
    let seq = small_engine(Algorithm::AdGda, false)?
        .run()
        .map_err(|e| e.to_string())?;
    ensure!(
        par.record.to_csv_string() == seq.record.to_csv_string(),
        "parallel and sequential records differ"
    );
    for algo in [Algorithm::ChocoSgd, Algorithm::DrDsgd] {
        let a = small_engine(algo, true)?.run().map_err(|e| e.to_string())?;
        let b = small_engine(algo, false)?
            .run()
            .map_err(|e| e.to_string())?;
        ensure!(
            a.record.to_csv_string() == b.record.to_csv_string(),
            "{algo}: parallel and sequential records differ"
        );
    }
    Ok("conservation, simplex closure, parallel determinism".into())
}

pub fn diagnostics_suite() -> Outcome {
    let vs: Vec<Vec<f64>> = (0..4)
        .map(|i| vec![i as f64, (i * i) as f64 * 0.5])
        .collect();
    let (a, b) = (consensus_error(&vs), oracle::consensus_error_pairwise(&vs));
    ensure!((a - b).abs() < 1e-12, "consensus error {a} vs pairwise {b}");
    let local = QuadraticObjective::new(vec![vec![1.0], vec![-0.5]]).map_err(|e| e.to_string())?;
    for kind in [RegularizerKind::Chi2, RegularizerKind::Kl] {
        let reg = Regularizer::new(kind, 0.4, vec![0.5, 0.5]).map_err(|e| e.to_string())?;
        let obj = RobustObjective::new(Arc::new(local.clone()), reg).map_err(|e| e.to_string())?;
        let theta = [0.3];
        let l = best_response_lambda(&theta, &obj, 1e-10).map_err(|e| e.to_string())?;
        let grid = (0..=20_000)
            .map(|k| k as f64 / 20_000.0)
            .max_by(|&x, &y| {
                obj.value(&theta, &[x, 1.0 - x])
                    .total_cmp(&obj.value(&theta, &[y, 1.0 - y]))
            })
            .unwrap_or(0.0);
        ensure!(
            (l[0] - grid).abs() < 1e-3,
            "{kind}: best response {} vs grid {grid}",
            l[0]
        );
    }
    Ok("pairwise consensus form, best response vs grid".into())
}

pub fn config_suite() -> Outcome {
    let text = "name = check\nalgo = adgda\ntopology.kind = torus2d\ntopology.nodes = 9\ncompression = topk:0.1\n\
                hyper.schedule = geometric:0.995\nseeds = 1..5\n";
    let c = ExperimentConfig::parse(text).map_err(|e| e.to_string())?;
    let again = ExperimentConfig::parse(&c.to_string()).map_err(|e| e.to_string())?;
    ensure!(c == again, "config does not round-trip");
    ensure!(
        ExperimentConfig::parse(
            "algo = adgda\ntopology.kind = torus2d\ntopology.nodes = 10\ncompression = identity\n"
        )
        .is_err(),
        "torus on 10 nodes accepted"
    );
    Ok("round-trip and validation".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn negated(v: &[f64]) -> Vec<f64> {
        project_simplex(v).iter().map(|x| -x).collect()
    }

    #[test]
    fn all_suites_pass() {
        let r = run_checks();
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn injected_fault_fails_only_projection() {
        let r = run_checks_with(CheckDeps { project: negated });
        assert_eq!(r.failed(), vec!["projection"], "{}", r.render());
    }
}
