//! Experiment configuration: flat `key = value` lines with dotted keys.
//!
//! ```text
//! # comment
//! name = table2
//! algo = adgda                   # adgda | choco_sgd | dr_dsgd
//! topology.kind = ring           # ring | complete | star | torus2d | file
//! topology.nodes = 10
//! compression = quant:16         # identity | quant:<bits> | topk:<k> | topk:<fraction>
//! hyper.alpha = 0.01
//! ```
//!
//! `algo`, `topology.kind` and `compression` are required; every other key has
//! a default (see [`ExperimentConfig::defaults_for`]). Unknown keys, keys that
//! do not apply to the selected data kind, and repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::compression::CompressionChoice;
use crate::engine::{Algorithm, DualInit, Schedule, TrackerInit};
use crate::error::{Error, Result};
use crate::objective::RegularizerKind;
use crate::topology::MixingRule;

pub const DEFAULT_CADENCE: usize = 10;
pub const DEFAULT_OUTPUT: &str = "runs";

#[derive(Debug, Clone, PartialEq)]
pub enum TopologyChoice {
    Ring,
    Complete,
    Star,
    /// Without explicit dimensions the torus is square.
    Torus2d {
        rows: Option<usize>,
        cols: Option<usize>,
    },
    /// Dense mixing matrix from a whitespace-separated text file.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyConfig {
    pub kind: TopologyChoice,
    pub nodes: usize,
    pub mixing: MixingRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Logistic { bias: bool },
    Mlp { hidden: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataConfig {
    Synthetic {
        features: usize,
        samples_per_node: usize,
        test_per_node: usize,
        minority_nodes: usize,
        separation: f64,
        shift: f64,
        noise: f64,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        classes: usize,
        /// Shuffles which node owns which class; `None` keeps class order.
        placement_seed: Option<u64>,
    },
    /// `f_i = 0.5 ||theta - a_i||^2` with centers drawn from the run seed.
    Quadratic {
        dim: usize,
        spread: f64,
        noise: f64,
        samples_per_node: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateMode {
    Independent,
    /// `eta_theta = eta_lambda / (16 (kappa + 1)^2)` with `kappa = smoothness / concavity`.
    Coupled {
        smoothness: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperConfig {
    pub alpha: f64,
    pub regularizer: RegularizerKind,
    pub eta_theta: f64,
    pub eta_lambda: f64,
    pub schedule: Schedule,
    pub rounds: usize,
    pub batch: usize,
    pub rate_mode: RateMode,
    pub lambda_init: DualInit,
    pub tracker_init: TrackerInit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMode {
    /// The consensus step size from the spectral gap, `beta` and `delta`.
    Theorem1,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub algo: Algorithm,
    pub topology: TopologyConfig,
    pub compression: CompressionChoice,
    pub model: ModelChoice,
    pub data: DataConfig,
    pub hyper: HyperConfig,
    pub gamma: GammaMode,
    pub seeds: Vec<u64>,
    pub cadence: usize,
    pub output: PathBuf,
}

/// Short override names accepted on the command line.
const ALIASES: &[(&str, &str)] = &[
    ("alpha", "hyper.alpha"),
    ("regularizer", "hyper.regularizer"),
    ("eta_theta", "hyper.eta_theta"),
    ("eta_lambda", "hyper.eta_lambda"),
    ("schedule", "hyper.schedule"),
    ("rounds", "hyper.rounds"),
    ("T", "hyper.rounds"),
    ("batch", "hyper.batch"),
    ("topology", "topology.kind"),
    ("nodes", "topology.nodes"),
    ("mixing", "topology.mixing"),
    ("model", "model.kind"),
    ("data", "data.kind"),
];

pub fn canonical_key(key: &str) -> &str {
    ALIASES
        .iter()
        .find(|(a, _)| *a == key)
        .map(|(_, k)| *k)
        .unwrap_or(key)
}

/// Splits `--key=value` or `key=value` into a canonical key and value.
pub fn parse_override(arg: &str) -> Result<(String, String)> {
    let body = arg.strip_prefix("--").unwrap_or(arg);
    let (k, v) = body
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {arg:?} is not of the form key=value")))?;
    Ok((canonical_key(k.trim()).to_string(), v.trim().to_string()))
}

fn parse_lines(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", n + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: key {k:?} repeated", n + 1)));
        }
    }
    Ok(map)
}

/// Consumes keys from the raw map; whatever is left over is unknown.
struct Fields(BTreeMap<String, String>);

impl Fields {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| Error::Config(format!("missing required key {key:?}")))
    }

    fn parse<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}"))),
            None => Ok(default),
        }
    }

    fn parse_opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.take(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    fn path(&mut self, key: &str) -> Result<PathBuf> {
        self.required(key).map(PathBuf::from)
    }

    fn finish(self) -> Result<()> {
        match self.0.keys().next() {
            Some(k) => Err(Error::Config(format!(
                "unknown key {k:?} (or not applicable to this configuration)"
            ))),
            None => Ok(()),
        }
    }
}

fn config_err(key: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Config(format!("{key}: {e}"))
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text =
            std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io_at(path.as_ref(), e))?;
        Self::parse_with_overrides(&text, &[])
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    /// Overrides are `(key, value)` pairs; aliases are resolved and they win over the file.
    pub fn parse_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut map = parse_lines(text)?;
        for (k, v) in overrides {
            map.insert(canonical_key(k).to_string(), v.clone());
        }
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<String, String>) -> Result<Self> {
        let mut f = Fields(map);
        let name = f.take("name").unwrap_or_else(|| "run".to_string());
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(Error::Config(format!(
                "name {name:?} must be a plain directory name"
            )));
        }
        let algo: Algorithm = f.required("algo")?.parse().map_err(config_err("algo"))?;

        let kind = f.required("topology.kind")?;
        let kind = match kind.as_str() {
            "ring" => TopologyChoice::Ring,
            "complete" => TopologyChoice::Complete,
            "star" => TopologyChoice::Star,
            "torus2d" => TopologyChoice::Torus2d {
                rows: f.parse_opt("topology.rows")?,
                cols: f.parse_opt("topology.cols")?,
            },
            "file" => TopologyChoice::File(f.path("topology.file")?),
            other => {
                return Err(Error::Config(format!(
                    "topology.kind: unknown topology {other:?}"
                )))
            }
        };
        let nodes: usize = f.parse("topology.nodes", 10)?;
        let mixing = match f.take("topology.mixing").as_deref() {
            None | Some("metropolis") => MixingRule::Metropolis,
            Some("uniform") => MixingRule::Uniform,
            Some(other) => {
                return Err(Error::Config(format!(
                    "topology.mixing: unknown rule {other:?}"
                )))
            }
        };
        let topology = TopologyConfig {
            kind,
            nodes,
            mixing,
        };

        let compression: CompressionChoice = f
            .required("compression")?
            .parse()
            .map_err(config_err("compression"))?;

        let model = match f.take("model.kind").as_deref() {
            None | Some("logistic") => ModelChoice::Logistic {
                bias: f.parse("model.bias", true)?,
            },
            Some("mlp") => ModelChoice::Mlp {
                hidden: f.parse("model.hidden", 32)?,
            },
            Some(other) => {
                return Err(Error::Config(format!(
                    "model.kind: unknown model {other:?}"
                )))
            }
        };

        let data = match f.take("data.kind").as_deref() {
            None | Some("synthetic") => DataConfig::Synthetic {
                features: f.parse("data.features", 20)?,
                samples_per_node: f.parse("data.samples_per_node", 200)?,
                test_per_node: f.parse("data.test_per_node", 200)?,
                minority_nodes: f.parse("data.minority_nodes", (nodes / 5).max(1))?,
                separation: f.parse("data.separation", 2.0)?,
                shift: f.parse("data.shift", 2.0)?,
                noise: f.parse("data.noise", 1.0)?,
            },
            Some("idx") => DataConfig::Idx {
                train_images: f.path("data.train_images")?,
                train_labels: f.path("data.train_labels")?,
                test_images: f.path("data.test_images")?,
                test_labels: f.path("data.test_labels")?,
                classes: f.parse("data.classes", 10)?,
                placement_seed: f.parse_opt("data.placement_seed")?,
            },
            Some("quadratic") => DataConfig::Quadratic {
                dim: f.parse("data.dim", 2)?,
                spread: f.parse("data.spread", 1.0)?,
                noise: f.parse("data.noise", 0.0)?,
                samples_per_node: f.parse("data.samples_per_node", 1)?,
            },
            Some(other) => {
                return Err(Error::Config(format!(
                    "data.kind: unknown data kind {other:?}"
                )))
            }
        };

        let schedule: Schedule = match f.take("hyper.schedule") {
            Some(s) => s.parse().map_err(config_err("hyper.schedule"))?,
            None => Schedule::Constant,
        };
        let regularizer: RegularizerKind = match f.take("hyper.regularizer") {
            Some(s) => s.parse().map_err(config_err("hyper.regularizer"))?,
            None if algo == Algorithm::DrDsgd => RegularizerKind::Kl,
            None => RegularizerKind::Chi2,
        };
        let rate_mode = match f.take("hyper.rate_mode").as_deref() {
            None | Some("independent") => RateMode::Independent,
            Some("coupled") => RateMode::Coupled {
                smoothness: f.parse_opt("hyper.smoothness")?.ok_or_else(|| {
                    Error::Config("hyper.rate_mode = coupled needs hyper.smoothness".into())
                })?,
            },
            Some(other) => {
                return Err(Error::Config(format!(
                    "hyper.rate_mode: unknown mode {other:?}"
                )))
            }
        };
        let lambda_init = match f.take("hyper.lambda_init").as_deref() {
            None | Some("weights") => DualInit::NodeWeights,
            Some("uniform") => DualInit::Uniform,
            Some(other) => {
                return Err(Error::Config(format!(
                    "hyper.lambda_init: unknown start {other:?}"
                )))
            }
        };
        let tracker_init = match f.take("hyper.tracker_init").as_deref() {
            None | Some("zero") => TrackerInit::Zero,
            Some("consistent") => TrackerInit::Consistent,
            Some(other) => {
                return Err(Error::Config(format!(
                    "hyper.tracker_init: unknown start {other:?}"
                )))
            }
        };
        let hyper = HyperConfig {
            alpha: f.parse("hyper.alpha", 1.0)?,
            regularizer,
            eta_theta: f.parse("hyper.eta_theta", 0.1)?,
            eta_lambda: f.parse("hyper.eta_lambda", 0.1)?,
            schedule,
            rounds: f.parse("hyper.rounds", 1000)?,
            batch: f.parse("hyper.batch", 32)?,
            rate_mode,
            lambda_init,
            tracker_init,
        };

        let gamma = match f.take("gamma").as_deref() {
            None | Some("theorem1") => GammaMode::Theorem1,
            Some(v) => GammaMode::Value(
                v.parse()
                    .map_err(|_| Error::Config(format!("gamma: cannot parse {v:?}")))?,
            ),
        };
        let seeds = match f.take("seeds") {
            None => vec![1],
            Some(s) => parse_seeds(&s)?,
        };
        let cadence = f.parse("cadence", DEFAULT_CADENCE)?;
        let output = PathBuf::from(
            f.take("output")
                .unwrap_or_else(|| DEFAULT_OUTPUT.to_string()),
        );
        f.finish()?;

        let cfg = ExperimentConfig {
            name,
            algo,
            topology,
            compression,
            model,
            data,
            hyper,
            gamma,
            seeds,
            cadence,
            output,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that need more than one key.
    pub fn validate(&self) -> Result<()> {
        let m = self.topology.nodes;
        if m < 2 {
            return Err(Error::Config("topology.nodes must be at least 2".into()));
        }
        if let TopologyChoice::Torus2d { .. } = self.topology.kind {
            self.torus_dims()?;
        }
        if self.algo == Algorithm::DrDsgd && self.hyper.regularizer != RegularizerKind::Kl {
            return Err(Error::Config(
                "dr_dsgd requires hyper.regularizer = kl".into(),
            ));
        }
        if self.algo == Algorithm::DrDsgd && !(self.hyper.alpha > 0.0) {
            return Err(Error::Config("dr_dsgd requires hyper.alpha > 0".into()));
        }
        let h = &self.hyper;
        if !(h.alpha >= 0.0 && h.alpha.is_finite()) {
            return Err(Error::Config("hyper.alpha must be finite and >= 0".into()));
        }
        if !(h.eta_theta > 0.0 && h.eta_theta.is_finite())
            || !(h.eta_lambda > 0.0 && h.eta_lambda.is_finite())
        {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if h.rounds == 0 {
            return Err(Error::Config("hyper.rounds must be at least 1".into()));
        }
        if let RateMode::Coupled { smoothness } = h.rate_mode {
            if !(smoothness > 0.0) {
                return Err(Error::Config("hyper.smoothness must be positive".into()));
            }
            if !(h.alpha > 0.0) {
                return Err(Error::Config("coupled rates need alpha > 0".into()));
            }
        }
        if let GammaMode::Value(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::Config(format!("gamma {g} not in (0, 1]")));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        if self.cadence == 0 {
            return Err(Error::Config("cadence must be positive".into()));
        }
        if let ModelChoice::Mlp { hidden: 0 } = self.model {
            return Err(Error::Config("model.hidden must be positive".into()));
        }
        match &self.data {
            DataConfig::Synthetic {
                features,
                samples_per_node,
                minority_nodes,
                ..
            } => {
                if *features == 0 || *samples_per_node < 2 || *minority_nodes >= m {
                    return Err(Error::Config("synthetic data needs features >= 1, samples_per_node >= 2, minority_nodes < nodes".into()));
                }
            }
            DataConfig::Idx { classes, .. } => {
                if *classes < 2 {
                    return Err(Error::Config("data.classes must be at least 2".into()));
                }
            }
            DataConfig::Quadratic {
                dim,
                samples_per_node,
                ..
            } => {
                if *dim == 0 || *samples_per_node == 0 {
                    return Err(Error::Config(
                        "quadratic data needs dim >= 1 and samples_per_node >= 1".into(),
                    ));
                }
                if !matches!(self.model, ModelChoice::Logistic { bias: true }) {
                    return Err(Error::Config(
                        "model keys do not apply to quadratic data".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Torus dimensions: explicit, or the square root of the node count.
    pub fn torus_dims(&self) -> Result<(usize, usize)> {
        let m = self.topology.nodes;
        let TopologyChoice::Torus2d { rows, cols } = self.topology.kind else {
            return Err(Error::Config("not a torus".into()));
        };
        let (r, c) = match (rows, cols) {
            (Some(r), Some(c)) => (r, c),
            (Some(r), None) if r > 0 && m % r == 0 => (r, m / r),
            (None, Some(c)) if c > 0 && m % c == 0 => (m / c, c),
            (None, None) => {
                let r = (m as f64).sqrt().round() as usize;
                (r, r)
            }
            _ => (0, 0),
        };
        if r * c != m || r == 0 {
            return Err(Error::Config(format!(
                "torus2d does not factor {m} nodes (give topology.rows and topology.cols, or use a square count)"
            )));
        }
        Ok((r, c))
    }

    /// Sets one key on a copy of this config, for sweeps.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        Self::parse_with_overrides(&self.to_string(), &[(key.to_string(), value.to_string())])
    }
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        // a..b is inclusive
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (
                a.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("seeds: bad range {part:?}")))?,
                b.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("seeds: bad range {part:?}")))?,
            );
            if b < a {
                return Err(Error::Config(format!("seeds: empty range {part:?}")));
            }
            out.extend(a..=b);
        } else {
            out.push(
                part.parse()
                    .map_err(|_| Error::Config(format!("seeds: bad seed {part:?}")))?,
            );
        }
    }
    if out.is_empty() {
        return Err(Error::Config("seeds must be nonempty".into()));
    }
    Ok(out)
}

impl fmt::Display for ExperimentConfig {
    /// Every key, explicitly; parsing the output gives back an equal config.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("name", &self.name);
        kv("algo", &self.algo);
        match &self.topology.kind {
            TopologyChoice::Ring => kv("topology.kind", &"ring"),
            TopologyChoice::Complete => kv("topology.kind", &"complete"),
            TopologyChoice::Star => kv("topology.kind", &"star"),
            TopologyChoice::Torus2d { rows, cols } => {
                kv("topology.kind", &"torus2d");
                if let Some(r) = rows {
                    kv("topology.rows", r);
                }
                if let Some(c) = cols {
                    kv("topology.cols", c);
                }
            }
            TopologyChoice::File(p) => {
                kv("topology.kind", &"file");
                kv("topology.file", &p.display());
            }
        }
        kv("topology.nodes", &self.topology.nodes);
        kv("topology.mixing", &self.topology.mixing);
        kv("compression", &self.compression);
        match self.model {
            ModelChoice::Logistic { bias } => {
                kv("model.kind", &"logistic");
                kv("model.bias", &bias);
            }
            ModelChoice::Mlp { hidden } => {
                kv("model.kind", &"mlp");
                kv("model.hidden", &hidden);
            }
        }
        match &self.data {
            DataConfig::Synthetic {
                features,
                samples_per_node,
                test_per_node,
                minority_nodes,
                separation,
                shift,
                noise,
            } => {
                kv("data.kind", &"synthetic");
                kv("data.features", features);
                kv("data.samples_per_node", samples_per_node);
                kv("data.test_per_node", test_per_node);
                kv("data.minority_nodes", minority_nodes);
                kv("data.separation", separation);
                kv("data.shift", shift);
                kv("data.noise", noise);
            }
            DataConfig::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                classes,
                placement_seed,
            } => {
                kv("data.kind", &"idx");
                kv("data.train_images", &train_images.display());
                kv("data.train_labels", &train_labels.display());
                kv("data.test_images", &test_images.display());
                kv("data.test_labels", &test_labels.display());
                kv("data.classes", classes);
                if let Some(p) = placement_seed {
                    kv("data.placement_seed", p);
                }
            }
            DataConfig::Quadratic {
                dim,
                spread,
                noise,
                samples_per_node,
            } => {
                kv("data.kind", &"quadratic");
                kv("data.dim", dim);
                kv("data.spread", spread);
                kv("data.noise", noise);
                kv("data.samples_per_node", samples_per_node);
            }
        }
        let h = &self.hyper;
        kv("hyper.alpha", &h.alpha);
        kv("hyper.regularizer", &h.regularizer);
        kv("hyper.eta_theta", &h.eta_theta);
        kv("hyper.eta_lambda", &h.eta_lambda);
        kv("hyper.schedule", &h.schedule);
        kv("hyper.rounds", &h.rounds);
        kv("hyper.batch", &h.batch);
        match h.rate_mode {
            RateMode::Independent => kv("hyper.rate_mode", &"independent"),
            RateMode::Coupled { smoothness } => {
                kv("hyper.rate_mode", &"coupled");
                kv("hyper.smoothness", &smoothness);
            }
        }
        kv(
            "hyper.lambda_init",
            &if h.lambda_init == DualInit::Uniform {
                "uniform"
            } else {
                "weights"
            },
        );
        kv(
            "hyper.tracker_init",
            &if h.tracker_init == TrackerInit::Consistent {
                "consistent"
            } else {
                "zero"
            },
        );
        match self.gamma {
            GammaMode::Theorem1 => kv("gamma", &"theorem1"),
            GammaMode::Value(g) => kv("gamma", &g),
        }
        kv(
            "seeds",
            &self
                .seeds
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("cadence", &self.cadence);
        kv("output", &self.output.display());
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "algo = adgda\ntopology.kind = ring\ncompression = quant:8\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.cadence, DEFAULT_CADENCE);
        assert_eq!(c.output, PathBuf::from(DEFAULT_OUTPUT));
        assert_eq!(c.seeds, vec![1]);
        assert_eq!(c.gamma, GammaMode::Theorem1);
        assert_eq!(c.compression, CompressionChoice::Quant(8));
    }

    #[test]
    fn required_keys() {
        for drop in ["algo", "topology.kind", "compression"] {
            let text: String = MINIMAL
                .lines()
                .filter(|l| !l.starts_with(drop))
                .map(|l| format!("{l}\n"))
                .collect();
            let err = ExperimentConfig::parse(&text).unwrap_err();
            assert!(err.to_string().contains(drop), "{err}");
        }
    }

    #[test]
    fn overrides_win() {
        let text = format!("{MINIMAL}hyper.alpha = 1\n");
        let o = vec![parse_override("--alpha=0.01").unwrap()];
        let c = ExperimentConfig::parse_with_overrides(&text, &o).unwrap();
        assert_eq!(c.hyper.alpha, 0.01);
        let o = vec![
            parse_override("hyper.rounds=7").unwrap(),
            parse_override("--T=9").unwrap(),
        ];
        assert_eq!(
            ExperimentConfig::parse_with_overrides(MINIMAL, &o)
                .unwrap()
                .hyper
                .rounds,
            9
        );
        assert!(parse_override("--alpha").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            format!("{MINIMAL}bogus = 1\n"),
            format!("{MINIMAL}hyper.alpha = lots\n"),
            format!("{MINIMAL}hyper.alpha = 1\nhyper.alpha = 2\n"),
            "algo = adgda\ntopology.kind = torus2d\ntopology.nodes = 10\ncompression = identity\n".to_string(),
            "algo = dr_dsgd\ntopology.kind = ring\ncompression = identity\nhyper.regularizer = chi2\n".to_string(),
            format!("{MINIMAL}data.train_images = x\n"),
            format!("{MINIMAL}gamma = 1.5\n"),
            format!("{MINIMAL}seeds = \n"),
            format!("{MINIMAL}hyper.schedule = geometric:1.2\n"),
            format!("{MINIMAL}hyper.rate_mode = coupled\n"),
            format!("{MINIMAL}name = a/b\n"),
            "algo = adgda\ntopology.kind = ring\ncompression = topk:0\n".to_string(),
            "no equals sign\n".to_string(),
        ];
        for text in cases {
            assert!(
                matches!(ExperimentConfig::parse(&text), Err(Error::Config(_))),
                "accepted:\n{text}"
            );
        }
    }

    #[test]
    fn torus_dims() {
        let c = ExperimentConfig::parse(
            "algo = adgda\ntopology.kind = torus2d\ntopology.nodes = 9\ncompression = identity\n",
        )
        .unwrap();
        assert_eq!(c.torus_dims().unwrap(), (3, 3));
        let c = ExperimentConfig::parse(
            "algo = adgda\ntopology.kind = torus2d\ntopology.nodes = 10\ntopology.rows = 2\ncompression = identity\n",
        )
        .unwrap();
        assert_eq!(c.torus_dims().unwrap(), (2, 5));
    }

    #[test]
    fn dr_dsgd_defaults_to_kl() {
        let c = ExperimentConfig::parse(
            "algo = dr_dsgd\ntopology.kind = ring\ncompression = identity\n",
        )
        .unwrap();
        assert_eq!(c.hyper.regularizer, RegularizerKind::Kl);
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("1, 2,5").unwrap(), vec![1, 2, 5]);
        assert_eq!(parse_seeds("3..6").unwrap(), vec![3, 4, 5, 6]);
        assert!(parse_seeds("6..3").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn round_trip_examples() {
        let texts = [
            MINIMAL.to_string(),
            "name = q\nalgo = choco_sgd\ntopology.kind = file\ntopology.file = w.txt\ntopology.nodes = 3\ncompression = topk:0.25\n\
             data.kind = quadratic\ndata.dim = 4\ngamma = 0.125\nseeds = 1..3\nhyper.schedule = geometric:0.995\n"
                .to_string(),
            "algo = adgda\ntopology.kind = torus2d\ntopology.rows = 2\ntopology.cols = 3\ntopology.nodes = 6\ncompression = quant:4\n\
             model.kind = mlp\nmodel.hidden = 7\nhyper.rate_mode = coupled\nhyper.smoothness = 0.3\nhyper.lambda_init = uniform\n\
             hyper.tracker_init = consistent\ndata.kind = idx\ndata.train_images = a\ndata.train_labels = b\ndata.test_images = c\n\
             data.test_labels = d\ndata.placement_seed = 4\n"
                .to_string(),
        ];
        for t in texts {
            let c = ExperimentConfig::parse(&t).unwrap();
            let again = ExperimentConfig::parse(&c.to_string()).unwrap();
            assert_eq!(c, again);
            assert_eq!(c.to_string(), again.to_string());
        }
    }
}
