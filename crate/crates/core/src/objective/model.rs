//! Softmax classifiers: multinomial logistic regression and a one-hidden-layer
//! tanh network, with cross-entropy losses and analytic gradients.

use std::fmt;

use rand::Rng;

use crate::rng::{global_stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Parameters: `W` (classes x features, row-major) then `b` (classes) if `bias`.
    Logistic {
        features: usize,
        classes: usize,
        bias: bool,
    },
    /// Parameters: `W1` (hidden x features), `b1`, `W2` (classes x hidden), `b2`.
    Mlp {
        features: usize,
        hidden: usize,
        classes: usize,
    },
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Logistic { bias, .. } => write!(f, "logistic(bias={bias})"),
            Model::Mlp { hidden, .. } => write!(f, "mlp:{hidden}"),
        }
    }
}

impl Model {
    pub fn dim(&self) -> usize {
        match *self {
            Model::Logistic {
                features,
                classes,
                bias,
            } => classes * features + if bias { classes } else { 0 },
            Model::Mlp {
                features,
                hidden,
                classes,
            } => hidden * features + hidden + classes * hidden + classes,
        }
    }

    pub fn features(&self) -> usize {
        match *self {
            Model::Logistic { features, .. } | Model::Mlp { features, .. } => features,
        }
    }

    pub fn classes(&self) -> usize {
        match *self {
            Model::Logistic { classes, .. } | Model::Mlp { classes, .. } => classes,
        }
    }

    /// Zeros for logistic regression; small uniform weights for the network
    /// (a zero start would leave every hidden unit identical).
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        match *self {
            Model::Logistic { .. } => vec![0.0; self.dim()],
            Model::Mlp {
                features,
                hidden,
                classes,
            } => {
                let mut rng = global_stream(seed, Purpose::Init);
                let mut theta = vec![0.0; self.dim()];
                let s1 = 1.0 / (features as f64).sqrt();
                let s2 = 1.0 / (hidden as f64).sqrt();
                let (w1, rest) = theta.split_at_mut(hidden * features);
                let (_, rest) = rest.split_at_mut(hidden);
                let (w2, _) = rest.split_at_mut(classes * hidden);
                w1.iter_mut().for_each(|w| *w = rng.random_range(-s1..s1));
                w2.iter_mut().for_each(|w| *w = rng.random_range(-s2..s2));
                theta
            }
        }
    }

    /// Cross-entropy of one sample; when `grad` is given, adds `scale * dloss/dtheta`.
    pub fn sample_loss(
        &self,
        theta: &[f64],
        x: &[f32],
        label: usize,
        grad: Option<&mut [f64]>,
        scale: f64,
    ) -> f64 {
        debug_assert_eq!(theta.len(), self.dim());
        debug_assert_eq!(x.len(), self.features());
        match *self {
            Model::Logistic {
                features,
                classes,
                bias,
            } => {
                let mut logits = vec![0.0; classes];
                for (c, z) in logits.iter_mut().enumerate() {
                    let row = &theta[c * features..(c + 1) * features];
                    *z = dot(row, x)
                        + if bias {
                            theta[classes * features + c]
                        } else {
                            0.0
                        };
                }
                let (loss, dz) = softmax_xent(&mut logits, label);
                if let Some(g) = grad {
                    for (c, &d) in dz.iter().enumerate() {
                        let d = d * scale;
                        if d == 0.0 {
                            continue;
                        }
                        let row = &mut g[c * features..(c + 1) * features];
                        for (gw, &xv) in row.iter_mut().zip(x) {
                            *gw += d * xv as f64;
                        }
                        if bias {
                            g[classes * features + c] += d;
                        }
                    }
                }
                loss
            }
            Model::Mlp {
                features,
                hidden,
                classes,
            } => {
                let (w1, rest) = theta.split_at(hidden * features);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(classes * hidden);
                let h: Vec<f64> = (0..hidden)
                    .map(|k| (dot(&w1[k * features..(k + 1) * features], x) + b1[k]).tanh())
                    .collect();
                let mut logits: Vec<f64> = (0..classes)
                    .map(|c| {
                        w2[c * hidden..(c + 1) * hidden]
                            .iter()
                            .zip(&h)
                            .map(|(a, b)| a * b)
                            .sum::<f64>()
                            + b2[c]
                    })
                    .collect();
                let (loss, dz) = softmax_xent(&mut logits, label);
                if let Some(g) = grad {
                    let (gw1, rest) = g.split_at_mut(hidden * features);
                    let (gb1, rest) = rest.split_at_mut(hidden);
                    let (gw2, gb2) = rest.split_at_mut(classes * hidden);
                    let mut dh = vec![0.0; hidden];
                    for c in 0..classes {
                        let d = dz[c] * scale;
                        gb2[c] += d;
                        for k in 0..hidden {
                            gw2[c * hidden + k] += d * h[k];
                            dh[k] += d * w2[c * hidden + k];
                        }
                    }
                    for k in 0..hidden {
                        let da = dh[k] * (1.0 - h[k] * h[k]);
                        gb1[k] += da;
                        for (gw, &xv) in gw1[k * features..(k + 1) * features].iter_mut().zip(x) {
                            *gw += da * xv as f64;
                        }
                    }
                }
                loss
            }
        }
    }

    pub fn predict(&self, theta: &[f64], x: &[f32]) -> usize {
        let logits: Vec<f64> = match *self {
            Model::Logistic {
                features,
                classes,
                bias,
            } => (0..classes)
                .map(|c| {
                    dot(&theta[c * features..(c + 1) * features], x)
                        + if bias {
                            theta[classes * features + c]
                        } else {
                            0.0
                        }
                })
                .collect(),
            Model::Mlp {
                features,
                hidden,
                classes,
            } => {
                let (w1, rest) = theta.split_at(hidden * features);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(classes * hidden);
                let h: Vec<f64> = (0..hidden)
                    .map(|k| (dot(&w1[k * features..(k + 1) * features], x) + b1[k]).tanh())
                    .collect();
                (0..classes)
                    .map(|c| {
                        w2[c * hidden..(c + 1) * hidden]
                            .iter()
                            .zip(&h)
                            .map(|(a, b)| a * b)
                            .sum::<f64>()
                            + b2[c]
                    })
                    .collect()
            }
        };
        // first maximum wins
        let mut best = 0;
        for (c, &z) in logits.iter().enumerate() {
            if z > logits[best] {
                best = c;
            }
        }
        best
    }
}

fn dot(w: &[f64], x: &[f32]) -> f64 {
    w.iter().zip(x).map(|(a, &b)| a * b as f64).sum()
}

/// Returns the loss and `softmax - onehot`, reusing `logits` as scratch.
fn softmax_xent(logits: &mut [f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted_label = logits[label] - max;
    let mut sum = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    let loss = (sum.ln() - shifted_label).max(0.0);
    let mut dz: Vec<f64> = logits.iter().map(|e| e / sum).collect();
    dz[label] -= 1.0;
    (loss, dz)
}
