//! Run records and the quantities used to judge a run: consensus errors and
//! their theoretical bounds, the dual best response, the worst-case objective
//! `Phi`, the primal-dual gap, worst-group accuracy and empirical rates.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::objective::{project_simplex, Dataset, Model, RegularizerKind, RobustObjective};

/// One metrics row, taken at a round boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub t: usize,
    /// `f_i` on the network-average parameters.
    pub node_losses: Vec<f64>,
    pub worst_loss: f64,
    /// `sum_i p_i f_i`, the pooled training loss.
    pub avg_loss: f64,
    /// NaN when no evaluation set is attached.
    pub worst_acc: f64,
    pub avg_acc: f64,
    pub xi_theta: f64,
    pub xi_lambda: f64,
    pub lambda_bar: Vec<f64>,
    /// Cumulative payload bits sent by each node.
    pub bits: Vec<u64>,
    pub eta_theta: f64,
    pub eta_lambda: f64,
    /// Running max of stochastic primal / dual gradient norms.
    pub g_theta_max: f64,
    pub g_lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    pub nodes: usize,
    pub rows: Vec<RecordRow>,
}

impl RunRecord {
    pub fn new(nodes: usize) -> Self {
        RunRecord {
            nodes,
            rows: Vec::new(),
        }
    }

    pub fn last(&self) -> Option<&RecordRow> {
        self.rows.last()
    }

    pub fn csv_header(nodes: usize) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((0..nodes).map(|i| format!("loss_node_{i}")));
        cols.extend(
            [
                "worst_loss",
                "avg_loss",
                "worst_acc",
                "avg_acc",
                "xi_theta",
                "xi_lambda",
            ]
            .map(String::from),
        );
        cols.extend((0..nodes).map(|i| format!("lambda_bar_{i}")));
        cols.extend((0..nodes).map(|i| format!("bits_node_{i}")));
        cols.extend(["eta_theta", "eta_lambda", "g_theta_max", "g_lambda_max"].map(String::from));
        cols.join(",")
    }

    /// Writes the header and one line per row; floats use shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::csv_header(self.nodes))?;
        for r in &self.rows {
            let mut f: Vec<String> = vec![r.t.to_string()];
            f.extend(r.node_losses.iter().map(|v| v.to_string()));
            f.extend(
                [
                    r.worst_loss,
                    r.avg_loss,
                    r.worst_acc,
                    r.avg_acc,
                    r.xi_theta,
                    r.xi_lambda,
                ]
                .map(|v| v.to_string()),
            );
            f.extend(r.lambda_bar.iter().map(|v| v.to_string()));
            f.extend(r.bits.iter().map(|v| v.to_string()));
            f.extend(
                [r.eta_theta, r.eta_lambda, r.g_theta_max, r.g_lambda_max].map(|v| v.to_string()),
            );
            writeln!(out, "{}", f.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("empty record".into()))?;
        let ncols = header.split(',').count();
        // 1 + m + 6 + m + m + 4
        if ncols < 11 || (ncols - 11) % 3 != 0 {
            return Err(Error::Data(format!(
                "unexpected record header with {ncols} columns"
            )));
        }
        let m = (ncols - 11) / 3;
        if header != Self::csv_header(m) {
            return Err(Error::Data(
                "record header does not match the expected layout".into(),
            ));
        }
        let mut rec = RunRecord::new(m);
        for (k, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != ncols {
                return Err(Error::Data(format!(
                    "record line {} has {} cells",
                    k + 2,
                    cells.len()
                )));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Data(format!("bad number {s:?}")))
            };
            let int = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| Error::Data(format!("bad integer {s:?}")))
            };
            let floats = |r: std::ops::Range<usize>| {
                cells[r].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()
            };
            let mut at = 1 + m;
            let scalars = floats(at..at + 6)?;
            at += 6;
            let lambda_bar = floats(at..at + m)?;
            at += m;
            let bits = cells[at..at + m]
                .iter()
                .map(|s| int(s))
                .collect::<Result<Vec<_>>>()?;
            at += m;
            let tail = floats(at..at + 4)?;
            rec.rows.push(RecordRow {
                t: int(cells[0])? as usize,
                node_losses: floats(1..1 + m)?,
                worst_loss: scalars[0],
                avg_loss: scalars[1],
                worst_acc: scalars[2],
                avg_acc: scalars[3],
                xi_theta: scalars[4],
                xi_lambda: scalars[5],
                lambda_bar,
                bits,
                eta_theta: tail[0],
                eta_lambda: tail[1],
                g_theta_max: tail[2],
                g_lambda_max: tail[3],
            });
        }
        Ok(rec)
    }
}

pub fn mean_vector(vectors: &[Vec<f64>]) -> Vec<f64> {
    assert!(!vectors.is_empty());
    let n = vectors.len() as f64;
    let mut mean = vec![0.0; vectors[0].len()];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// `sum_i ||v_i - mean||^2`.
pub fn consensus_error(vectors: &[Vec<f64>]) -> f64 {
    let mean = mean_vector(vectors);
    vectors
        .iter()
        .map(|v| {
            v.iter()
                .zip(&mean)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

/// Constants entering the consensus bounds and step sizes of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    pub nodes: usize,
    pub rho: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
    /// `rho^2 delta / 82`.
    pub c: f64,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub rows: usize,
    pub theta_violations: usize,
    pub lambda_violations: usize,
    /// Largest `measured / bound` ratios seen.
    pub worst_theta_ratio: f64,
    pub worst_lambda_ratio: f64,
}

impl BoundReport {
    pub fn violation_fraction(&self) -> f64 {
        if self.rows == 0 {
            return 0.0;
        }
        (self.theta_violations.max(self.lambda_violations)) as f64 / self.rows as f64
    }

    pub fn holds(&self) -> bool {
        self.theta_violations == 0 && self.lambda_violations == 0
    }
}

/// Compares every recorded `Xi_theta` with `12 eta_theta^2 m G_theta^2 / c^2`
/// and `Xi_lambda` with `4 eta_lambda^2 m G_lambda^2 / rho^2`, `G` being the
/// running max gradient norm in the row.
pub fn check_consensus_bounds(record: &RunRecord, theory: &TheoryParams) -> BoundReport {
    check_consensus_bounds_scaled(record, theory, 1.0)
}

/// Same as [`check_consensus_bounds`] with the measured gradient bounds multiplied by `g_scale`.
pub fn check_consensus_bounds_scaled(
    record: &RunRecord,
    theory: &TheoryParams,
    g_scale: f64,
) -> BoundReport {
    let m = theory.nodes as f64;
    let mut rep = BoundReport {
        rows: record.rows.len(),
        theta_violations: 0,
        lambda_violations: 0,
        worst_theta_ratio: 0.0,
        worst_lambda_ratio: 0.0,
    };
    for r in &record.rows {
        let gt = r.g_theta_max * g_scale;
        let gl = r.g_lambda_max * g_scale;
        let bt = 12.0 * r.eta_theta.powi(2) * m * gt * gt / (theory.c * theory.c);
        let bl = 4.0 * r.eta_lambda.powi(2) * m * gl * gl / (theory.rho * theory.rho);
        if r.xi_theta > bt {
            rep.theta_violations += 1;
        }
        if r.xi_lambda > bl {
            rep.lambda_violations += 1;
        }
        if bt > 0.0 {
            rep.worst_theta_ratio = rep.worst_theta_ratio.max(r.xi_theta / bt);
        }
        if bl > 0.0 {
            rep.worst_lambda_ratio = rep.worst_lambda_ratio.max(r.xi_lambda / bl);
        }
    }
    rep
}

pub const BEST_RESPONSE_MAX_ITERS: usize = 1_000_000;

/// `argmax_{lambda in simplex} g(theta, lambda)` on full-data losses.
pub fn best_response_lambda(
    theta: &[f64],
    objective: &RobustObjective,
    tol: f64,
) -> Result<Vec<f64>> {
    best_response_from_losses(&objective.full_losses(theta), objective, tol)
}

/// Maximizes `(1/m) lambda . f + alpha r(lambda)` over the simplex. The KL
/// case has the closed form `lambda ∝ p exp(f / (m alpha))`; chi-square uses
/// projected gradient ascent with step `1/L` until the gradient mapping has
/// norm at most `tol`. With `alpha = 0` the maximizer is a vertex.
pub fn best_response_from_losses(
    losses: &[f64],
    objective: &RobustObjective,
    tol: f64,
) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::Param("tolerance must be positive".into()));
    }
    let m = losses.len();
    let reg = objective.regularizer();
    let p = reg.weights();
    if reg.alpha == 0.0 {
        let mut best = 0;
        for (i, &f) in losses.iter().enumerate() {
            if f > losses[best] {
                best = i;
            }
        }
        let mut out = vec![0.0; m];
        out[best] = 1.0;
        return Ok(out);
    }
    match reg.kind {
        RegularizerKind::Kl => Ok(tilted_weights(losses, p, m as f64 * reg.alpha)),
        RegularizerKind::Chi2 => {
            let step = 1.0 / reg.smoothness();
            let mut lambda = p.to_vec();
            for _ in 0..BEST_RESPONSE_MAX_ITERS {
                let (_, rg) = reg.value_grad(&lambda);
                let ascent: Vec<f64> = (0..m)
                    .map(|i| lambda[i] + step * (losses[i] / m as f64 + reg.alpha * rg[i]))
                    .collect();
                let next = project_simplex(&ascent);
                let mapping = next
                    .iter()
                    .zip(&lambda)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    / step;
                lambda = next;
                if mapping <= tol {
                    return Ok(lambda);
                }
            }
            Err(Error::NonConvergence {
                what: "dual best response",
                iterations: BEST_RESPONSE_MAX_ITERS,
            })
        }
    }
}

/// `lambda_j ∝ p_j exp(f_j / temperature)`, computed with max-subtraction.
pub fn tilted_weights(losses: &[f64], weights: &[f64], temperature: f64) -> Vec<f64> {
    let max = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = losses
        .iter()
        .zip(weights)
        .map(|(f, p)| p * ((f - max) / temperature).exp())
        .collect();
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

/// `||lambda*(theta) - lambda||^2`, how far a dual iterate is from the best response.
pub fn dual_tracking_error(
    theta: &[f64],
    lambda: &[f64],
    objective: &RobustObjective,
) -> Result<f64> {
    let star = best_response_lambda(theta, objective, 1e-10)?;
    Ok(star
        .iter()
        .zip(lambda)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiGap {
    /// `Phi(theta_o) = max_lambda g(theta_o, lambda)`.
    pub phi: f64,
    /// `max_lambda g(theta_o, lambda) - min_theta g(theta, lambda_o)`.
    pub gap: f64,
    pub lambda_star: Vec<f64>,
    pub theta_best: Vec<f64>,
}

pub const GAP_TOL: f64 = 1e-8;
pub const DESCENT_MAX_ITERS: usize = 200_000;

/// Worst-case value at `theta_o` and the primal-dual gap of `(theta_o, lambda_o)`.
/// The inner minimization is deterministic gradient descent with
/// backtracking, run until the gradient norm is below `tol`.
pub fn phi_and_gap(
    theta_o: &[f64],
    lambda_o: &[f64],
    objective: &RobustObjective,
    tol: f64,
) -> Result<PhiGap> {
    let lambda_star = best_response_lambda(theta_o, objective, tol)?;
    let phi = objective.value(theta_o, &lambda_star);
    let theta_best = minimize_primal(theta_o, lambda_o, objective, tol)?;
    let low = objective.value(&theta_best, lambda_o);
    Ok(PhiGap {
        phi,
        gap: phi - low,
        lambda_star,
        theta_best,
    })
}

/// `argmin_theta g(theta, lambda)` from `start`.
pub fn minimize_primal(
    start: &[f64],
    lambda: &[f64],
    objective: &RobustObjective,
    tol: f64,
) -> Result<Vec<f64>> {
    let d = start.len();
    let mut theta = start.to_vec();
    let mut grad = vec![0.0; d];
    let mut value = objective.primal_full_grad(&theta, lambda, &mut grad);
    let mut step = 1.0;
    let mut trial_grad = vec![0.0; d];
    for _ in 0..DESCENT_MAX_ITERS {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2.sqrt() <= tol {
            return Ok(theta);
        }
        step *= 2.0;
        loop {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let tv = objective.primal_full_grad(&trial, lambda, &mut trial_grad);
            if tv <= value - 0.5 * step * gnorm2 {
                theta = trial;
                value = tv;
                std::mem::swap(&mut grad, &mut trial_grad);
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                // no further decrease representable
                return Ok(theta);
            }
        }
    }
    Err(Error::NonConvergence {
        what: "primal minimization",
        iterations: DESCENT_MAX_ITERS,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupMetrics {
    pub worst_acc: f64,
    /// Accuracy over the pooled evaluation data.
    pub avg_acc: f64,
    pub per_group_acc: Vec<f64>,
    pub per_group_loss: Vec<f64>,
}

/// Per-group accuracy and loss of `theta` on `eval`, grouped by generating
/// group when the data carries it and by shard otherwise.
pub fn worst_group_metrics(model: &Model, theta: &[f64], eval: &Dataset) -> Result<GroupMetrics> {
    let groups = eval.eval_groups();
    if groups.is_empty() || groups.iter().any(Vec::is_empty) {
        return Err(Error::Data("evaluation groups must be nonempty".into()));
    }
    let mut per_group_acc = Vec::with_capacity(groups.len());
    let mut per_group_loss = Vec::with_capacity(groups.len());
    let (mut hits, mut total) = (0usize, 0usize);
    for g in &groups {
        let mut h = 0usize;
        let mut loss = 0.0;
        for &i in g {
            let x = eval.x(i);
            h += (model.predict(theta, x) == eval.y(i)) as usize;
            loss += model.sample_loss(theta, x, eval.y(i), None, 1.0);
        }
        per_group_acc.push(h as f64 / g.len() as f64);
        per_group_loss.push(loss / g.len() as f64);
        hits += h;
        total += g.len();
    }
    let worst_acc = per_group_acc.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GroupMetrics {
        worst_acc,
        avg_acc: hits as f64 / total as f64,
        per_group_acc,
        per_group_loss,
    })
}

/// Least-squares slope of `log gap` against `log T`.
pub fn rate_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::Param("rate slope needs at least 3 points".into()));
    }
    if let Some(&(t, g)) = points.iter().find(|&&(t, g)| !(g > 0.0) || !(t > 0.0)) {
        return Err(Error::Param(format!(
            "nonpositive value at T = {t}: gap {g}"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{QuadraticObjective, Regularizer};
    use std::sync::Arc;

    fn quad(centers: Vec<Vec<f64>>, kind: RegularizerKind, alpha: f64) -> RobustObjective {
        let m = centers.len();
        let local = QuadraticObjective::new(centers).unwrap();
        RobustObjective::new(
            Arc::new(local),
            Regularizer::new(kind, alpha, vec![1.0 / m as f64; m]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn consensus_error_examples() {
        assert_eq!(consensus_error(&[vec![1.0, 2.0], vec![1.0, 2.0]]), 0.0);
        assert_eq!(consensus_error(&[vec![1.0], vec![-1.0]]), 2.0);
    }

    #[test]
    fn consensus_error_matches_pairwise_form() {
        // sum_i ||v_i - mean||^2 = (1/2m) sum_{i,j} ||v_i - v_j||^2
        let vs: Vec<Vec<f64>> = (0..5)
            .map(|i| {
                (0..3)
                    .map(|k| ((i * 7 + k * 3) % 5) as f64 - 1.3 * k as f64)
                    .collect()
            })
            .collect();
        let mut pair = 0.0;
        for a in &vs {
            for b in &vs {
                pair += a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
            }
        }
        assert!((consensus_error(&vs) - pair / 10.0).abs() < 1e-12);
    }

    #[test]
    fn best_response_limits() {
        let obj = quad(
            vec![vec![0.0], vec![3.0], vec![1.0]],
            RegularizerKind::Chi2,
            1e6,
        );
        let l = best_response_lambda(&[0.0], &obj, 1e-10).unwrap();
        assert!(l.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-5));
        let obj = quad(
            vec![vec![0.0], vec![3.0], vec![1.0]],
            RegularizerKind::Chi2,
            0.0,
        );
        assert_eq!(
            best_response_lambda(&[0.0], &obj, 1e-10).unwrap(),
            vec![0.0, 1.0, 0.0]
        );
        let obj = quad(
            vec![vec![0.0], vec![3.0], vec![1.0]],
            RegularizerKind::Chi2,
            1e-4,
        );
        let l = best_response_lambda(&[0.0], &obj, 1e-10).unwrap();
        assert!(l[1] > 0.999);
    }

    #[test]
    fn best_response_grid_oracle_two_nodes() {
        for kind in [RegularizerKind::Chi2, RegularizerKind::Kl] {
            let obj = quad(vec![vec![1.0], vec![-0.5]], kind, 0.3);
            let theta = [0.2];
            let l = best_response_lambda(&theta, &obj, 1e-10).unwrap();
            let mut best = (f64::NEG_INFINITY, 0.0);
            for k in 0..=10_000 {
                let s = k as f64 * 1e-4;
                let v = obj.value(&theta, &[s, 1.0 - s]);
                if v > best.0 {
                    best = (v, s);
                }
            }
            assert!(
                (l[0] - best.1).abs() < 1e-3,
                "{kind}: {} vs {}",
                l[0],
                best.1
            );
        }
    }

    #[test]
    fn tilted_weights_examples() {
        let l = tilted_weights(&[1.0, 0.0], &[0.5, 0.5], 1.0);
        let e = std::f64::consts::E;
        assert!((l[0] - e / (1.0 + e)).abs() < 1e-15);
        assert!((l[1] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert_eq!(
            tilted_weights(&[2.0, 2.0, 2.0], &[0.2, 0.3, 0.5], 0.1),
            vec![0.2, 0.3, 0.5]
        );
        let flat = tilted_weights(&[5.0, 0.0], &[0.4, 0.6], 1e9);
        assert!((flat[0] - 0.4).abs() < 1e-8);
        let sharp = tilted_weights(&[1e6, 0.0], &[0.5, 0.5], 1e-3);
        assert_eq!(sharp, vec![1.0, 0.0]);
    }

    #[test]
    fn gap_at_saddle_and_away() {
        // symmetric centers: saddle at theta = 0, lambda uniform
        let obj = quad(vec![vec![1.0], vec![-1.0]], RegularizerKind::Chi2, 1.0);
        let pg = phi_and_gap(&[0.0], &[0.5, 0.5], &obj, GAP_TOL).unwrap();
        assert!(pg.gap.abs() <= 2.0 * GAP_TOL, "{}", pg.gap);
        let mut prev = pg.gap;
        for eps in [0.1, 0.2, 0.4] {
            let g = phi_and_gap(&[eps], &[0.5, 0.5], &obj, GAP_TOL).unwrap().gap;
            assert!(g > prev);
            prev = g;
        }
    }

    #[test]
    fn phi_closed_form_two_quadratics() {
        // f = (0.5 (t-1)^2, 0.5 (t+1)^2), chi2 with p = (1/2, 1/2), alpha = 1:
        // maximize over s: (s f1 + (1-s) f2)/2 - 4 (s - 1/2)^2
        let obj = quad(vec![vec![1.0], vec![-1.0]], RegularizerKind::Chi2, 1.0);
        let t: f64 = 0.5;
        let (f1, f2) = (0.5 * (t - 1.0).powi(2), 0.5 * (t + 1.0).powi(2));
        let s = (0.5 + (f1 - f2) / 16.0).clamp(0.0, 1.0);
        let want = (s * f1 + (1.0 - s) * f2) / 2.0 - 4.0 * (s - 0.5).powi(2);
        let pg = phi_and_gap(&[t], &[0.5, 0.5], &obj, GAP_TOL).unwrap();
        assert!((pg.phi - want).abs() < 1e-10, "{} vs {want}", pg.phi);
    }

    #[test]
    fn group_metrics() {
        // majority-class predictor on a 90/10 split
        let n = 100;
        let labels: Vec<u32> = (0..n).map(|i| (i >= 90) as u32).collect();
        let groups: Vec<usize> = labels.iter().map(|&y| y as usize).collect();
        let d = Dataset::new(vec![1.0; n], labels, 1, 2)
            .unwrap()
            .with_groups(groups)
            .unwrap();
        let model = Model::Logistic {
            features: 1,
            classes: 2,
            bias: true,
        };
        let theta = [0.0, 0.0, 1.0, 0.0];
        let gm = worst_group_metrics(&model, &theta, &d).unwrap();
        assert_eq!(gm.per_group_acc, vec![1.0, 0.0]);
        assert_eq!(gm.worst_acc, 0.0);
        assert!((gm.avg_acc - 0.9).abs() < 1e-15);

        let single = Dataset::new(vec![1.0; 4], vec![0, 0, 0, 1], 1, 2).unwrap();
        let gm = worst_group_metrics(&model, &theta, &single).unwrap();
        assert_eq!(gm.worst_acc, gm.avg_acc);
    }

    #[test]
    fn slopes() {
        let half: Vec<(f64, f64)> = [100.0, 400.0, 1600.0]
            .iter()
            .map(|&t: &f64| (t, 3.0 / t.sqrt()))
            .collect();
        assert!((rate_slope(&half).unwrap() + 0.5).abs() < 1e-9);
        let one: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&t| (t, 2.0 / t))
            .collect();
        assert!((rate_slope(&one).unwrap() + 1.0).abs() < 1e-9);
        assert!(rate_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(rate_slope(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut rec = RunRecord::new(2);
        rec.rows.push(RecordRow {
            t: 10,
            node_losses: vec![0.1, 1.0 / 3.0],
            worst_loss: 1.0 / 3.0,
            avg_loss: 0.2,
            worst_acc: f64::NAN,
            avg_acc: f64::NAN,
            xi_theta: 1e-300,
            xi_lambda: 0.0,
            lambda_bar: vec![0.25, 0.75],
            bits: vec![123, 456],
            eta_theta: 0.995f64.powi(10),
            eta_lambda: 1.0,
            g_theta_max: 2.5,
            g_lambda_max: 3.5,
        });
        let text = rec.to_csv_string();
        assert!(text.starts_with("t,loss_node_0,loss_node_1,worst_loss"));
        let back = RunRecord::from_csv(&text).unwrap();
        assert_eq!(back.to_csv_string(), text);
        assert_eq!(back.rows[0].eta_theta, rec.rows[0].eta_theta);
        assert!(RunRecord::from_csv("t,x\n1,2").is_err());
    }

    #[test]
    fn bound_checker_counts_violations() {
        let theory = TheoryParams {
            nodes: 2,
            rho: 0.5,
            beta: 1.0,
            delta: 1.0,
            gamma: 0.1,
            c: 0.5,
            kappa: None,
        };
        let mut rec = RunRecord::new(2);
        // bound_theta = 12 * 0.01 * 2 * 1 / 0.25 = 0.96 ; bound_lambda = 4 * 0.01 * 2 / 0.25 = 0.32
        for xi in [0.5, 0.9] {
            rec.rows.push(RecordRow {
                t: 0,
                node_losses: vec![0.0; 2],
                worst_loss: 0.0,
                avg_loss: 0.0,
                worst_acc: 0.0,
                avg_acc: 0.0,
                xi_theta: xi,
                xi_lambda: xi / 3.0,
                lambda_bar: vec![0.5; 2],
                bits: vec![0; 2],
                eta_theta: 0.1,
                eta_lambda: 0.1,
                g_theta_max: 1.0,
                g_lambda_max: 1.0,
            });
        }
        assert!(check_consensus_bounds(&rec, &theory).holds());
        let halved = check_consensus_bounds_scaled(&rec, &theory, 0.5);
        assert_eq!(halved.theta_violations, 2);
        assert_eq!(halved.lambda_violations, 2);
        assert_eq!(halved.violation_fraction(), 1.0);
    }
}
