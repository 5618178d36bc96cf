//! Communication graphs, doubly-stochastic mixing matrices and the spectral
//! constants that set the consensus step size.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row/column sum and symmetry tolerance for mixing matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyKind {
    Ring,
    Torus2d {
        rows: usize,
        cols: usize,
    },
    Complete,
    /// Node 0 is the hub.
    Star,
    Custom,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyKind::Ring => write!(f, "ring"),
            TopologyKind::Torus2d { rows, cols } => write!(f, "torus2d:{rows}x{cols}"),
            TopologyKind::Complete => write!(f, "complete"),
            TopologyKind::Star => write!(f, "star"),
            TopologyKind::Custom => write!(f, "custom"),
        }
    }
}

/// Connected undirected graph on `m` nodes. Self-loops are implied and never
/// stored; `edges` holds pairs `(i, j)` with `i < j`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    kind: TopologyKind,
    m: usize,
    edges: Vec<(usize, usize)>,
}

impl Topology {
    pub fn build(kind: TopologyKind, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Topology(format!("need at least 2 nodes, got {m}")));
        }
        let mut set = BTreeSet::new();
        let mut add = |a: usize, b: usize| {
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        };
        match &kind {
            TopologyKind::Ring => {
                for i in 0..m {
                    add(i, (i + 1) % m);
                }
            }
            TopologyKind::Torus2d { rows, cols } => {
                let (rows, cols) = (*rows, *cols);
                if rows == 0 || cols == 0 || rows * cols != m {
                    return Err(Error::Topology(format!(
                        "torus {rows}x{cols} does not factor {m} nodes"
                    )));
                }
                // rows are numbered in snake order, so a 2x2 torus is labelled like the 4-ring
                let id = |r: usize, c: usize| r * cols + if r % 2 == 1 { cols - 1 - c } else { c };
                for r in 0..rows {
                    for c in 0..cols {
                        add(id(r, c), id((r + 1) % rows, c));
                        add(id(r, c), id(r, (c + 1) % cols));
                    }
                }
            }
            TopologyKind::Complete => {
                for i in 0..m {
                    for j in i + 1..m {
                        add(i, j);
                    }
                }
            }
            TopologyKind::Star => {
                for j in 1..m {
                    add(0, j);
                }
            }
            TopologyKind::Custom => {
                return Err(Error::Topology(
                    "custom topologies are built with Topology::custom".into(),
                ))
            }
        }
        let topo = Topology {
            kind,
            m,
            edges: set.into_iter().collect(),
        };
        topo.ensure_connected()?;
        Ok(topo)
    }

    pub fn custom(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m < 2 {
            return Err(Error::Topology(format!("need at least 2 nodes, got {m}")));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= m || b >= m {
                return Err(Error::Topology(format!(
                    "edge ({a},{b}) out of range for {m} nodes"
                )));
            }
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
        let topo = Topology {
            kind: TopologyKind::Custom,
            m,
            edges: set.into_iter().collect(),
        };
        topo.ensure_connected()?;
        Ok(topo)
    }

    pub fn kind(&self) -> &TopologyKind {
        &self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.m];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    fn ensure_connected(&self) -> Result<()> {
        let mut adj = vec![Vec::new(); self.m];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.m];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(lost) => Err(Error::Topology(format!(
                "graph is disconnected (node {lost} unreachable)"
            ))),
            None => Ok(()),
        }
    }
}

/// Rule used to turn a graph into weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MixingRule {
    /// `w_ij = 1 / (1 + max(deg_i, deg_j))`.
    #[default]
    Metropolis,
    /// Every edge gets `1 / (1 + max_degree)`.
    Uniform,
}

impl fmt::Display for MixingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixingRule::Metropolis => write!(f, "metropolis"),
            MixingRule::Uniform => write!(f, "uniform"),
        }
    }
}

/// Symmetric doubly-stochastic `m x m` weights together with their spectral
/// gap `rho = 1 - |lambda_2|` and `beta = ||I - W||_2`.
#[derive(Debug, Clone)]
pub struct MixingMatrix {
    m: usize,
    w: Vec<f64>,
    /// Nonzero entries per row, self included, in column order.
    neighbors: Vec<Vec<(usize, f64)>>,
    rho: f64,
    beta: f64,
}

impl MixingMatrix {
    pub fn from_topology(topology: &Topology, rule: MixingRule) -> Result<Self> {
        let m = topology.num_nodes();
        let deg = topology.degrees();
        let max_deg = deg.iter().copied().max().unwrap_or(0);
        let mut w = vec![0.0; m * m];
        for &(a, b) in topology.edges() {
            let v = match rule {
                MixingRule::Metropolis => 1.0 / (1.0 + deg[a].max(deg[b]) as f64),
                MixingRule::Uniform => 1.0 / (1.0 + max_deg as f64),
            };
            w[a * m + b] = v;
            w[b * m + a] = v;
        }
        for i in 0..m {
            let off: f64 = (0..m).filter(|&j| j != i).map(|j| w[i * m + j]).sum();
            w[i * m + i] = 1.0 - off;
        }
        Self::from_dense(m, w)
    }

    /// Validates a dense row-major matrix and computes its spectral constants.
    pub fn from_dense(m: usize, w: Vec<f64>) -> Result<Self> {
        if m < 2 || w.len() != m * m {
            return Err(Error::Mixing(format!(
                "expected a square matrix with m >= 2, got {} entries for m = {m}",
                w.len()
            )));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Mixing(
                "entries must be finite and nonnegative".into(),
            ));
        }
        for i in 0..m {
            let row: f64 = w[i * m..(i + 1) * m].iter().sum();
            if (row - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::Mixing(format!("row {i} sums to {row}")));
            }
            for j in 0..m {
                if (w[i * m + j] - w[j * m + i]).abs() > STOCHASTIC_TOL {
                    return Err(Error::Mixing(format!("not symmetric at ({i},{j})")));
                }
            }
        }
        // symmetric + row-stochastic already implies column sums of 1
        let (rho, beta) = spectral_constants(m, &w)?;
        let neighbors = (0..m)
            .map(|i| {
                (0..m)
                    .filter(|&j| w[i * m + j] != 0.0)
                    .map(|j| (j, w[i * m + j]))
                    .collect()
            })
            .collect();
        Ok(MixingMatrix {
            m,
            w,
            neighbors,
            rho,
            beta,
        })
    }

    /// Reads whitespace-separated rows; blank lines and `#` comments are skipped.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text =
            std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io_at(path.as_ref(), e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| {
                        Error::Mixing(format!("line {}: bad number {tok:?}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Mixing(format!(
                "matrix file is not square ({m} rows)"
            )));
        }
        Self::from_dense(m, rows.concat())
    }

    /// Graph implied by the nonzero off-diagonal entries. Fails if disconnected.
    pub fn support(&self) -> Result<Topology> {
        let mut edges = Vec::new();
        for i in 0..self.m {
            for j in i + 1..self.m {
                if self.w[i * self.m + j] > 0.0 {
                    edges.push((i, j));
                }
            }
        }
        Topology::custom(self.m, &edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.m + j]
    }

    pub fn dense(&self) -> &[f64] {
        &self.w
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `rho = 1 - |lambda_2|` (second-largest modulus) and `beta = ||I - W||_2`
/// for a symmetric row-major matrix.
pub fn spectral_constants(m: usize, w: &[f64]) -> Result<(f64, f64)> {
    let mat = DMatrix::from_row_slice(m, m, w);
    let eig = mat.symmetric_eigen();
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let top = vals
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).abs().total_cmp(&(b.1 - 1.0).abs()))
        .map(|(k, _)| k)
        .expect("m >= 2");
    let second = vals
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != top)
        .map(|(_, v)| v.abs())
        .fold(0.0_f64, f64::max);
    let rho = 1.0 - second;
    let beta = vals.iter().map(|v| (1.0 - v).abs()).fold(0.0_f64, f64::max);
    if rho <= 1e-12 {
        return Err(Error::Mixing(format!(
            "spectral gap {rho:e} is not positive; graph is disconnected or periodic"
        )));
    }
    Ok((rho.min(1.0), beta))
}

/// Consensus step size for compressed gossip:
/// `rho^2 delta / (16 rho + rho^2 + 4 beta^2 + 2 rho beta^2 - 8 rho delta)`.
pub fn consensus_step_size(rho: f64, delta: f64, beta: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) || !(delta > 0.0 && delta <= 1.0) || !(0.0..=2.0).contains(&beta)
    {
        return Err(Error::Param(format!(
            "need rho, delta in (0,1] and beta in [0,2]; got rho={rho}, delta={delta}, beta={beta}"
        )));
    }
    let denom =
        16.0 * rho + rho * rho + 4.0 * beta * beta + 2.0 * rho * beta * beta - 8.0 * rho * delta;
    assert!(denom > 0.0, "denominator is positive for all valid inputs");
    Ok(rho * rho * delta / denom)
}

/// Contraction constant `c = rho^2 delta / 82` of compressed gossip.
pub fn consensus_rate(rho: f64, delta: f64) -> f64 {
    rho * rho * delta / 82.0
}
