//! Turning a config into engine runs and writing their artifacts.
//!
//! A run directory holds `seed_<s>.csv` per seed, `summary.csv`,
//! `metadata.txt` and the resolved `config.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::compression::CompressionSpec;
use crate::diagnostics::{RunRecord, TheoryParams};
use crate::engine::{
    coupled_primal_rate, Engine, EngineOptions, Evaluation, HyperParams, RunOutput,
};
use crate::error::{Error, Result};
use crate::harness::config::{
    DataConfig, ExperimentConfig, GammaMode, ModelChoice, RateMode, TopologyChoice,
};
use crate::objective::{
    load_idx, partition_classwise, ClassificationObjective, LocalObjective, Model,
    QuadraticObjective, Regularizer, RobustObjective, SynthSpec,
};
use crate::rng::{global_stream, Purpose};
use crate::topology::{consensus_rate, consensus_step_size, MixingMatrix, Topology, TopologyKind};

pub const OUTPUT_ROOT_ENV: &str = "DRGOSSIP_OUTPUT_ROOT";

/// Everything an engine needs for one seed.
pub struct Resolved {
    pub objective: Arc<RobustObjective>,
    pub mixing: MixingMatrix,
    pub compression: CompressionSpec,
    pub hyper: HyperParams,
    pub eval: Option<Evaluation>,
    pub theory: TheoryParams,
}

pub fn build_mixing(cfg: &ExperimentConfig) -> Result<MixingMatrix> {
    let m = cfg.topology.nodes;
    let kind = match &cfg.topology.kind {
        TopologyChoice::Ring => TopologyKind::Ring,
        TopologyChoice::Complete => TopologyKind::Complete,
        TopologyChoice::Star => TopologyKind::Star,
        TopologyChoice::Torus2d { .. } => {
            let (rows, cols) = cfg.torus_dims()?;
            TopologyKind::Torus2d { rows, cols }
        }
        TopologyChoice::File(path) => {
            let w = MixingMatrix::from_file(path)?;
            if w.num_nodes() != m {
                return Err(Error::Config(format!(
                    "mixing file has {} nodes, topology.nodes = {m}",
                    w.num_nodes()
                )));
            }
            return Ok(w);
        }
    };
    MixingMatrix::from_topology(&Topology::build(kind, m)?, cfg.topology.mixing)
}

fn build_model(choice: ModelChoice, features: usize, classes: usize) -> Model {
    match choice {
        ModelChoice::Logistic { bias } => Model::Logistic {
            features,
            classes,
            bias,
        },
        ModelChoice::Mlp { hidden } => Model::Mlp {
            features,
            hidden,
            classes,
        },
    }
}

/// Local objective and optional evaluation set for one seed; the seed drives
/// data generation as well as the run.
pub fn build_problem(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(Arc<dyn LocalObjective>, Option<Evaluation>)> {
    let m = cfg.topology.nodes;
    match &cfg.data {
        DataConfig::Synthetic {
            features,
            samples_per_node,
            test_per_node,
            minority_nodes,
            separation,
            shift,
            noise,
        } => {
            let spec = SynthSpec {
                nodes: m,
                features: *features,
                samples_per_node: *samples_per_node,
                minority_nodes: *minority_nodes,
                separation: *separation,
                shift: *shift,
                noise: *noise,
            };
            let (train, test) = spec.generate_split(seed, *test_per_node)?;
            let model = build_model(cfg.model, *features, 2);
            let local = ClassificationObjective::new(Arc::new(train), model)?;
            Ok((
                Arc::new(local),
                Some(Evaluation {
                    data: Arc::new(test),
                    model,
                }),
            ))
        }
        DataConfig::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            classes,
            placement_seed,
        } => {
            let train = partition_classwise(
                load_idx(train_images, train_labels, *classes)?,
                m,
                *placement_seed,
            )?;
            let test = load_idx(test_images, test_labels, *classes)?;
            // worst-class accuracy: evaluation groups are the labels
            let groups = test.labels().iter().map(|&y| y as usize).collect();
            let test = test.with_groups(groups)?;
            let model = build_model(cfg.model, train.num_features(), *classes);
            let local = ClassificationObjective::new(Arc::new(train), model)?;
            Ok((
                Arc::new(local),
                Some(Evaluation {
                    data: Arc::new(test),
                    model,
                }),
            ))
        }
        DataConfig::Quadratic {
            dim,
            spread,
            noise,
            samples_per_node,
        } => {
            let centers = quadratic_centers(m, *dim, *spread, seed);
            Ok((
                Arc::new(QuadraticObjective::noisy(
                    centers,
                    *noise,
                    *samples_per_node,
                    seed,
                )?),
                None,
            ))
        }
    }
}

/// Centers `a_i ~ N(0, spread^2 I)`.
pub fn quadratic_centers(nodes: usize, dim: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = global_stream(seed, Purpose::Init);
    (0..nodes)
        .map(|_| {
            (0..dim)
                .map(|_| spread * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

pub fn resolve(cfg: &ExperimentConfig, seed: u64) -> Result<Resolved> {
    cfg.validate()?;
    let mixing = build_mixing(cfg)?;
    let (local, eval) = build_problem(cfg, seed)?;
    let m = local.num_nodes();
    if m != cfg.topology.nodes {
        return Err(Error::Config(format!(
            "data provides {m} nodes, topology.nodes = {}",
            cfg.topology.nodes
        )));
    }
    let reg = Regularizer::new(cfg.hyper.regularizer, cfg.hyper.alpha, local.node_weights())?;
    let compression = cfg.compression.resolve(local.dim())?;
    let (rho, beta, delta) = (mixing.rho(), mixing.beta(), compression.delta());
    let gamma = match cfg.gamma {
        GammaMode::Theorem1 => consensus_step_size(rho, delta, beta)?,
        GammaMode::Value(g) => g,
    };
    let (eta_theta, kappa) = match cfg.hyper.rate_mode {
        RateMode::Independent => (cfg.hyper.eta_theta, None),
        RateMode::Coupled { smoothness } => (
            coupled_primal_rate(cfg.hyper.eta_lambda, smoothness, reg.concavity())?,
            Some(smoothness / reg.concavity()),
        ),
    };
    let hyper = HyperParams {
        algorithm: cfg.algo,
        eta_theta,
        eta_lambda: cfg.hyper.eta_lambda,
        schedule: cfg.hyper.schedule,
        gamma,
        rounds: cfg.hyper.rounds,
        batch: cfg.hyper.batch,
        tracker_init: cfg.hyper.tracker_init,
        dual_init: cfg.hyper.lambda_init,
    };
    let objective = Arc::new(RobustObjective::new(local, reg)?);
    let theory = TheoryParams {
        nodes: m,
        rho,
        beta,
        delta,
        gamma,
        c: consensus_rate(rho, delta),
        kappa,
    };
    Ok(Resolved {
        objective,
        mixing,
        compression,
        hyper,
        eval,
        theory,
    })
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    let r = resolve(cfg, seed)?;
    let opts = EngineOptions {
        cadence: cfg.cadence,
        parallel: true,
        audit: false,
        eval: r.eval,
    };
    Engine::new(r.objective, r.mixing, r.compression, r.hyper, opts, seed)?.run()
}

/// The config's output directory, unless the environment overrides it.
pub fn output_root(cfg: &ExperimentConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cfg.output.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: &'static str,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub std: f64,
    pub seeds: usize,
}

pub const SUMMARY_METRICS: [&str; 4] = ["worst_acc", "avg_acc", "worst_loss", "avg_loss"];

/// Mean and sample std of the final-row metrics across seeds.
pub fn summarize(records: &[RunRecord]) -> Result<Vec<MetricSummary>> {
    let finals: Vec<_> = records
        .iter()
        .map(|r| {
            r.last()
                .ok_or_else(|| Error::Data("empty run record".into()))
        })
        .collect::<Result<_>>()?;
    if finals.is_empty() {
        return Err(Error::Data("no runs to summarize".into()));
    }
    let n = finals.len();
    Ok(SUMMARY_METRICS
        .iter()
        .map(|&metric| {
            let vals: Vec<f64> = finals
                .iter()
                .map(|row| match metric {
                    "worst_acc" => row.worst_acc,
                    "avg_acc" => row.avg_acc,
                    "worst_loss" => row.worst_loss,
                    _ => row.avg_loss,
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            MetricSummary {
                metric,
                mean,
                std,
                seeds: n,
            }
        })
        .collect())
}

pub fn summary_csv(summary: &[MetricSummary]) -> String {
    let mut s = String::from("metric,mean,std,seeds,single_seed\n");
    for m in summary {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            m.metric,
            m.mean,
            m.std,
            m.seeds,
            m.seeds == 1
        );
    }
    s
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub summary: Vec<MetricSummary>,
}

fn metadata(cfg: &ExperimentConfig, r: &Resolved) -> String {
    let t = &r.theory;
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let dual_bits = match cfg.algo {
        crate::engine::Algorithm::ChocoSgd => 0,
        _ => 32 * t.nodes as u64,
    };
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("version", crate::VERSION.to_string());
    kv("timestamp_unix", stamp.to_string());
    kv("algo", cfg.algo.to_string());
    kv("nodes", t.nodes.to_string());
    kv("dim", r.objective.dim().to_string());
    kv("compression", r.compression.to_string());
    kv("gamma", t.gamma.to_string());
    kv(
        "gamma_mode",
        if cfg.gamma == GammaMode::Theorem1 {
            "theorem1".into()
        } else {
            "explicit".into()
        },
    );
    kv("rho", t.rho.to_string());
    kv("beta", t.beta.to_string());
    kv("delta", t.delta.to_string());
    kv("c", t.c.to_string());
    kv("kappa", t.kappa.map_or("none".into(), |k| k.to_string()));
    kv("eta_theta", r.hyper.eta_theta.to_string());
    kv("eta_lambda", r.hyper.eta_lambda.to_string());
    kv(
        "schedule",
        format!("{} (geometric decays as eta0 * r^t)", r.hyper.schedule),
    );
    kv("lambda_init", format!("{:?}", r.hyper.dual_init));
    kv("tracker_init", format!("{:?}", r.hyper.tracker_init));
    kv("message_bits", r.compression.message_bits().to_string());
    kv("dual_bits_per_round", dual_bits.to_string());
    kv(
        "bit_convention",
        "32-bit floats; one broadcast charged per node per round; quantized zero vector costs 32 bits; top-k charges sent nonzeros only".into(),
    );
    kv("torus_labels", "snake order by row".into());
    kv(
        "dr_dsgd_dual",
        "p exp(f/alpha) from a gossiped loss table".into(),
    );
    kv(
        "output_average",
        "theta_o = mean of network averages over rounds 0..T-1".into(),
    );
    kv(
        "seed_scope",
        "each seed drives data generation, placement-free sampling and compression".into(),
    );
    s
}

/// Runs every seed of `cfg` into `dir`.
pub fn run_into(cfg: &ExperimentConfig, dir: &Path) -> Result<RunArtifacts> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.txt"), cfg.to_string())?;
    let mut records = Vec::with_capacity(cfg.seeds.len());
    let mut meta = None;
    for &seed in &cfg.seeds {
        let r = resolve(cfg, seed)?;
        if meta.is_none() {
            meta = Some(metadata(cfg, &r));
        }
        let opts = EngineOptions {
            cadence: cfg.cadence,
            parallel: true,
            audit: false,
            eval: r.eval,
        };
        let out = Engine::new(r.objective, r.mixing, r.compression, r.hyper, opts, seed)?.run();
        let out = match out {
            Ok(o) => o,
            Err(e) => {
                fs::write(dir.join(format!("seed_{seed}.diverged")), format!("{e}\n"))?;
                return Err(e);
            }
        };
        let mut file = fs::File::create(dir.join(format!("seed_{seed}.csv")))?;
        out.record.write_csv(&mut file)?;
        records.push(out.record);
    }
    if let Some(meta) = meta {
        fs::write(dir.join("metadata.txt"), meta)?;
    }
    let summary = summarize(&records)?;
    fs::write(dir.join("summary.csv"), summary_csv(&summary))?;
    Ok(RunArtifacts {
        dir: dir.to_path_buf(),
        summary,
    })
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    run_into(cfg, &output_root(cfg).join(&cfg.name))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    Compression,
    Topology,
    Rounds,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepAxis::Alpha),
            "compression" => Ok(SweepAxis::Compression),
            "topology" => Ok(SweepAxis::Topology),
            "T" | "rounds" => Ok(SweepAxis::Rounds),
            _ => Err(Error::Config(format!(
                "unknown sweep axis {s:?} (alpha | compression | topology | T)"
            ))),
        }
    }
}

impl SweepAxis {
    pub fn key(&self) -> &'static str {
        match self {
            SweepAxis::Alpha => "hyper.alpha",
            SweepAxis::Compression => "compression",
            SweepAxis::Topology => "topology.kind",
            SweepAxis::Rounds => "hyper.rounds",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::Compression => "compression",
            SweepAxis::Topology => "topology",
            SweepAxis::Rounds => "T",
        }
    }
}

/// Resolves every sweep point up front so a bad value fails before any run starts.
pub fn sweep_configs(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[String],
) -> Result<Vec<(String, ExperimentConfig)>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|v| {
            let sub = cfg.with_override(axis.key(), v)?;
            let dir = format!("{}_{}", axis.label(), v.replace(['/', '\\', ':'], "-"));
            let sub = ExperimentConfig { name: dir, ..sub };
            Ok((v.clone(), sub))
        })
        .collect()
}

pub fn cmd_sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[String]) -> Result<PathBuf> {
    let points = sweep_configs(cfg, axis, values)?;
    let base = output_root(cfg).join(&cfg.name);
    let mut table = format!(
        "{},worst_acc_mean,worst_acc_std,avg_acc_mean,avg_acc_std,worst_loss_mean,avg_loss_mean\n",
        axis.label()
    );
    for (value, sub) in &points {
        let art = run_into(sub, &base.join(&sub.name))?;
        let get = |name: &str| {
            art.summary
                .iter()
                .find(|m| m.metric == name)
                .expect("metric present")
                .clone()
        };
        let (wa, aa, wl, al) = (
            get("worst_acc"),
            get("avg_acc"),
            get("worst_loss"),
            get("avg_loss"),
        );
        let _ = writeln!(
            table,
            "{value},{},{},{},{},{},{}",
            wa.mean, wa.std, aa.mean, aa.std, wl.mean, al.mean
        );
    }
    fs::write(base.join("comparison.csv"), table)?;
    Ok(base)
}

/// Recomputes a summary from the per-seed CSVs in a run directory.
pub fn summary_from_dir(dir: &Path) -> Result<Vec<MetricSummary>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("seed_") && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    let records = paths
        .iter()
        .map(|p| RunRecord::from_csv(&fs::read_to_string(p)?))
        .collect::<Result<Vec<_>>>()?;
    summarize(&records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(extra: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!(
            "name = t\nalgo = adgda\ntopology.kind = ring\ntopology.nodes = 4\ncompression = quant:8\n\
             data.features = 3\ndata.samples_per_node = 20\ndata.test_per_node = 20\nhyper.rounds = 12\n\
             hyper.batch = 4\ncadence = 5\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn resolves_theory_constants() {
        let cfg = small("");
        let r = resolve(&cfg, 1).unwrap();
        // ring of 4 with Metropolis weights 1/3: rho = 2/3
        assert!((r.theory.rho - 2.0 / 3.0).abs() < 1e-12);
        let want = consensus_step_size(r.theory.rho, r.theory.delta, r.theory.beta).unwrap();
        assert_eq!(r.hyper.gamma, want);
        assert_eq!(r.compression.dim(), 8);
        let r = resolve(&small("gamma = 0.25\n"), 1).unwrap();
        assert_eq!(r.hyper.gamma, 0.25);
    }

    #[test]
    fn coupled_rates() {
        let r = resolve(
            &small("hyper.rate_mode = coupled\nhyper.smoothness = 1\nhyper.alpha = 2\n"),
            1,
        )
        .unwrap();
        // p uniform over 4: mu = 2 alpha / max p = 16, kappa = 1/16
        let kappa = 1.0 / 16.0;
        assert!((r.hyper.eta_theta - 0.1 / (16.0 * (kappa + 1.0f64).powi(2))).abs() < 1e-15);
        assert_eq!(r.theory.kappa, Some(kappa));
    }

    #[test]
    fn summary_statistics() {
        let mut recs = Vec::new();
        for acc in [0.5, 0.7] {
            let mut r = RunRecord::new(1);
            r.rows.push(crate::diagnostics::RecordRow {
                t: 1,
                node_losses: vec![1.0],
                worst_loss: 1.0,
                avg_loss: 1.0,
                worst_acc: acc,
                avg_acc: acc,
                xi_theta: 0.0,
                xi_lambda: 0.0,
                lambda_bar: vec![1.0],
                bits: vec![0],
                eta_theta: 0.1,
                eta_lambda: 0.1,
                g_theta_max: 0.0,
                g_lambda_max: 0.0,
            });
            recs.push(r);
        }
        let s = summarize(&recs).unwrap();
        assert!((s[0].mean - 0.6).abs() < 1e-15);
        assert!((s[0].std - 0.02f64.sqrt()).abs() < 1e-15);
        let one = summarize(&recs[..1]).unwrap();
        assert_eq!(one[0].std, 0.0);
        assert!(summary_csv(&one).contains(",1,true"));
    }

    #[test]
    fn quadratic_problem_has_no_evaluation() {
        let cfg = ExperimentConfig::parse(
            "algo = adgda\ntopology.kind = complete\ntopology.nodes = 3\ncompression = identity\ndata.kind = quadratic\ndata.dim = 2\n",
        )
        .unwrap();
        let (local, eval) = build_problem(&cfg, 3).unwrap();
        assert!(eval.is_none());
        assert_eq!(local.dim(), 2);
        assert_eq!(
            quadratic_centers(3, 2, 1.0, 3),
            quadratic_centers(3, 2, 1.0, 3)
        );
    }

    #[test]
    fn sweep_points() {
        let cfg = small("");
        let pts = sweep_configs(
            &cfg,
            SweepAxis::Compression,
            &["quant:4".into(), "topk:0.5".into()],
        )
        .unwrap();
        assert_eq!(pts[0].1.name, "compression_quant-4");
        assert!(sweep_configs(&cfg, SweepAxis::Alpha, &[]).is_err());
        assert!(sweep_configs(&cfg, SweepAxis::Alpha, &["-1".into()]).is_err());
        assert_eq!(
            sweep_configs(&cfg, SweepAxis::Rounds, &["3".into()]).unwrap()[0]
                .1
                .hyper
                .rounds,
            3
        );
    }
}
