//! Message compression operators `Q` satisfying
//! `E ||Q(x) - x||^2 <= (1 - delta) ||x||^2`, with payload bit accounting.
//!
//! Floats on the wire are counted as 32 bits. Framing overhead is ignored.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

pub const FLOAT_BITS: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompressionKind {
    Identity,
    /// Random quantization onto `2^bits` levels.
    RandQuant {
        bits: u32,
    },
    /// Keep the `k` largest-magnitude components.
    TopK {
        k: usize,
    },
}

/// An operator bound to a vector dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionSpec {
    kind: CompressionKind,
    dim: usize,
}

/// Config-level choice, resolved against `d` with [`CompressionChoice::resolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompressionChoice {
    Identity,
    Quant(u32),
    TopKCount(usize),
    TopKFraction(f64),
}

impl CompressionChoice {
    pub fn resolve(&self, dim: usize) -> Result<CompressionSpec> {
        let kind = match *self {
            CompressionChoice::Identity => CompressionKind::Identity,
            CompressionChoice::Quant(bits) => CompressionKind::RandQuant { bits },
            CompressionChoice::TopKCount(k) => CompressionKind::TopK { k },
            CompressionChoice::TopKFraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::Compression(format!(
                        "top-k fraction {f} not in (0,1]"
                    )));
                }
                let k = ((f * dim as f64).round() as usize).clamp(1, dim.max(1));
                CompressionKind::TopK { k }
            }
        };
        CompressionSpec::new(kind, dim)
    }
}

impl fmt::Display for CompressionChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompressionChoice::Identity => write!(f, "identity"),
            CompressionChoice::Quant(b) => write!(f, "quant:{b}"),
            CompressionChoice::TopKCount(k) => write!(f, "topk:{k}"),
            CompressionChoice::TopKFraction(x) => write!(f, "topk:{x:?}"),
        }
    }
}

impl FromStr for CompressionChoice {
    type Err = Error;

    /// `identity`, `quant:<bits>`, `topk:<count>` or `topk:<fraction>` (with a dot).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Compression(format!("cannot parse {s:?}"));
        if s == "identity" || s == "none" {
            return Ok(CompressionChoice::Identity);
        }
        let (name, arg) = s.split_once(':').ok_or_else(bad)?;
        match name {
            "quant" => {
                let bits: u32 = arg.parse().map_err(|_| bad())?;
                if !(1..=30).contains(&bits) {
                    return Err(Error::Compression(format!(
                        "quantization bits {bits} not in 1..=30"
                    )));
                }
                Ok(CompressionChoice::Quant(bits))
            }
            "topk" if arg.contains('.') => {
                let f: f64 = arg.parse().map_err(|_| bad())?;
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::Compression(format!(
                        "top-k fraction {f} not in (0,1]"
                    )));
                }
                Ok(CompressionChoice::TopKFraction(f))
            }
            "topk" => {
                let k: usize = arg.parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(Error::Compression("top-k needs k >= 1".into()));
                }
                Ok(CompressionChoice::TopKCount(k))
            }
            _ => Err(bad()),
        }
    }
}

/// Output of one compression: the decompressed value and its payload size.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedMessage {
    pub values: Vec<f64>,
    pub bits: u64,
}

impl CompressionSpec {
    pub fn new(kind: CompressionKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Compression("dimension must be positive".into()));
        }
        match kind {
            CompressionKind::RandQuant { bits } if !(1..=30).contains(&bits) => {
                return Err(Error::Compression(format!(
                    "quantization bits {bits} not in 1..=30"
                )))
            }
            CompressionKind::TopK { k } if k == 0 || k > dim => {
                return Err(Error::Compression(format!(
                    "top-k needs 1 <= k <= {dim}, got {k}"
                )))
            }
            _ => {}
        }
        Ok(CompressionSpec { kind, dim })
    }

    pub fn identity(dim: usize) -> Self {
        CompressionSpec {
            kind: CompressionKind::Identity,
            dim,
        }
    }

    pub fn kind(&self) -> CompressionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Contract constant: 1 for identity, `1/tau` for quantization, `k/d` for top-k.
    pub fn delta(&self) -> f64 {
        match self.kind {
            CompressionKind::Identity => 1.0,
            CompressionKind::RandQuant { bits } => 1.0 / quant_tau(bits, self.dim),
            CompressionKind::TopK { k } => k as f64 / self.dim as f64,
        }
    }

    /// `1 - delta`, computed without cancellation for near-lossless quantizers.
    pub fn contraction_deficit(&self) -> f64 {
        match self.kind {
            CompressionKind::Identity => 0.0,
            CompressionKind::RandQuant { bits } => {
                let tau = quant_tau(bits, self.dim);
                (tau - 1.0) / tau
            }
            CompressionKind::TopK { k } => (self.dim - k) as f64 / self.dim as f64,
        }
    }

    /// Payload bits of a full message:
    /// identity `32 d`, quantization `32 + d (b + 1)`, top-k `k (32 + ceil(log2 d))`.
    pub fn message_bits(&self) -> u64 {
        let d = self.dim as u64;
        match self.kind {
            CompressionKind::Identity => FLOAT_BITS * d,
            CompressionKind::RandQuant { bits } => FLOAT_BITS + d * (bits as u64 + 1),
            CompressionKind::TopK { k } => k as u64 * (FLOAT_BITS + index_bits(self.dim)),
        }
    }

    /// Applies the operator. Randomized operators draw exactly `d` uniforms
    /// from `rng` per call (zero vectors included), so stream positions do not
    /// depend on the data.
    pub fn compress<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> CompressedMessage {
        assert_eq!(x.len(), self.dim, "compress: dimension mismatch");
        match self.kind {
            CompressionKind::Identity => CompressedMessage {
                values: x.to_vec(),
                bits: self.message_bits(),
            },
            CompressionKind::RandQuant { bits } => quantize(x, bits, rng),
            CompressionKind::TopK { k } => top_k(x, k),
        }
    }
}

impl fmt::Display for CompressionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CompressionKind::Identity => write!(f, "identity"),
            CompressionKind::RandQuant { bits } => write!(f, "quant:{bits}"),
            CompressionKind::TopK { k } => write!(f, "topk:{k}"),
        }
    }
}

/// `tau = 1 + min(d / 2^(2b), sqrt(d) / 2^b)`.
pub fn quant_tau(bits: u32, dim: usize) -> f64 {
    let levels = (bits as f64).exp2();
    let d = dim as f64;
    1.0 + (d / (levels * levels)).min(d.sqrt() / levels)
}

pub fn index_bits(dim: usize) -> u64 {
    if dim <= 1 {
        0
    } else {
        (usize::BITS - (dim - 1).leading_zeros()) as u64
    }
}

fn quantize<R: Rng + ?Sized>(x: &[f64], bits: u32, rng: &mut R) -> CompressedMessage {
    let d = x.len();
    let levels = (bits as f64).exp2();
    let tau = quant_tau(bits, d);
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let xi: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    if norm == 0.0 {
        // only the norm header is sent
        return CompressedMessage {
            values: vec![0.0; d],
            bits: FLOAT_BITS,
        };
    }
    let scale = norm / (levels * tau);
    let values = x
        .iter()
        .zip(&xi)
        .map(|(&v, &u)| {
            let level = (levels * v.abs() / norm + u).floor();
            v.signum() * scale * level
        })
        .collect();
    CompressedMessage {
        values,
        bits: FLOAT_BITS + d as u64 * (bits as u64 + 1),
    }
}

fn top_k(x: &[f64], k: usize) -> CompressedMessage {
    let d = x.len();
    // larger magnitude first, smaller index on ties
    let order =
        |a: &usize, b: &usize| -> Ordering { x[*b].abs().total_cmp(&x[*a].abs()).then(a.cmp(b)) };
    let mut idx: Vec<usize> = (0..d).collect();
    if k < d {
        idx.select_nth_unstable_by(k - 1, order);
        idx.truncate(k);
    }
    let mut values = vec![0.0; d];
    let mut sent = 0u64;
    for &i in &idx {
        if x[i] != 0.0 {
            values[i] = x[i];
            sent += 1;
        }
    }
    CompressedMessage {
        values,
        bits: sent * (FLOAT_BITS + index_bits(d)),
    }
}
