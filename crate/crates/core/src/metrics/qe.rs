//! Reference-free quality estimation head: a one-hidden-layer ReLU
//! regressor over pooled source and hypothesis embeddings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order of the feature blocks, hypothesis first.
pub const FEATURE_LAYOUT: [&str; 4] = ["hyp", "src", "abs_diff", "product"];
const PARAM_LAYOUT: &str = "w1[hidden][4*input_dim] row-major, b1[hidden], w2[hidden], b2";

/// `[h; s; |h - s|; h * s]`.
pub fn qe_features(src: &[f64], hyp: &[f64]) -> Result<Vec<f64>> {
    if src.len() != hyp.len() {
        return Err(Error::DimensionMismatch {
            expected: hyp.len(),
            actual: src.len(),
        });
    }
    let mut x = Vec::with_capacity(4 * src.len());
    x.extend_from_slice(hyp);
    x.extend_from_slice(src);
    x.extend(hyp.iter().zip(src).map(|(h, s)| (h - s).abs()));
    x.extend(hyp.iter().zip(src).map(|(h, s)| h * s));
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QeHeadFile", into = "QeHeadFile")]
pub struct QeHead {
    pub input_dim: usize,
    pub hidden: usize,
    pub margin: f64,
    /// `hidden x 4*input_dim`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QeGradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl QeGradients {
    fn zeros(head: &QeHead) -> Self {
        QeGradients {
            w1: vec![0.0; head.w1.len()],
            b1: vec![0.0; head.hidden],
            w2: vec![0.0; head.hidden],
            b2: 0.0,
        }
    }

    /// Flattened in the same order as [`QeHead::params`].
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + 2 * self.b1.len() + 1);
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        v
    }
}

pub struct RegressionSample<'a> {
    pub src: &'a [f64],
    pub hyp: &'a [f64],
    pub target: f64,
}

pub struct RankTriple<'a> {
    pub src: &'a [f64],
    pub better: &'a [f64],
    pub worse: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct QeLosses {
    /// Mean squared error over the regression batch.
    pub mse: f64,
    /// Mean hinge loss over the ranking batch.
    pub rank: f64,
    /// Gradient of `mse + rank`.
    pub gradients: QeGradients,
}

struct Forward {
    z: Vec<f64>,
    a: Vec<f64>,
    y: f64,
}

impl QeHead {
    /// He-initialized weights, zero biases.
    pub fn new(input_dim: usize, hidden: usize, margin: f64, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::Parameter("QE head dimensions must be positive".into()));
        }
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::Parameter(format!("ranking margin must be finite and nonnegative, got {margin}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fan_in = 4 * input_dim;
        let n1 = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
        let n2 = Normal::new(0.0, (2.0 / hidden as f64).sqrt()).expect("positive std");
        Ok(QeHead {
            input_dim,
            hidden,
            margin,
            w1: (0..hidden * fan_in).map(|_| n1.sample(&mut rng)).collect(),
            b1: vec![0.0; hidden],
            w2: (0..hidden).map(|_| n2.sample(&mut rng)).collect(),
            b2: 0.0,
        })
    }

    pub fn feature_dim(&self) -> usize {
        4 * self.input_dim
    }

    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + 2 * self.hidden + 1);
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        let expected = self.w1.len() + 2 * self.hidden + 1;
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: params.len(),
            });
        }
        let (w1, rest) = params.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, rest) = rest.split_at(self.hidden);
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2 = rest[0];
        Ok(())
    }

    fn check(&self) -> Result<()> {
        let fan_in = self.feature_dim();
        if self.w1.len() != self.hidden * fan_in || self.b1.len() != self.hidden || self.w2.len() != self.hidden {
            return Err(Error::Parameter("QE head parameter shapes disagree with its dimensions".into()));
        }
        if self.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Parameter("QE head has a non-finite parameter".into()));
        }
        Ok(())
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let fan_in = self.feature_dim();
        let z: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * fan_in..(j + 1) * fan_in];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[j]
            })
            .collect();
        let a: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
        let y = a.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>() + self.b2;
        Forward { z, a, y }
    }

    fn backward(&self, x: &[f64], f: &Forward, dy: f64, g: &mut QeGradients) {
        let fan_in = self.feature_dim();
        g.b2 += dy;
        for j in 0..self.hidden {
            g.w2[j] += dy * f.a[j];
            if f.z[j] > 0.0 {
                let dz = dy * self.w2[j];
                g.b1[j] += dz;
                for (gw, v) in g.w1[j * fan_in..(j + 1) * fan_in].iter_mut().zip(x) {
                    *gw += dz * v;
                }
            }
        }
    }

    /// Plain gradient-descent update.
    pub fn sgd_step(&mut self, gradients: &QeGradients, learning_rate: f64) {
        let step = |p: &mut f64, g: f64| *p -= learning_rate * g;
        self.w1.iter_mut().zip(&gradients.w1).for_each(|(p, g)| step(p, *g));
        self.b1.iter_mut().zip(&gradients.b1).for_each(|(p, g)| step(p, *g));
        self.w2.iter_mut().zip(&gradients.w2).for_each(|(p, g)| step(p, *g));
        step(&mut self.b2, gradients.b2);
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        Ok(serde_json::from_str(raw)?)
    }
}

pub fn qe_score(head: &QeHead, features: &[f64]) -> Result<f64> {
    head.check()?;
    if features.len() != head.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: head.feature_dim(),
            actual: features.len(),
        });
    }
    Ok(head.forward(features).y)
}

/// Batch-mean regression and ranking losses with their joint gradient.
pub fn qe_losses(head: &QeHead, regression: &[RegressionSample], ranking: &[RankTriple]) -> Result<QeLosses> {
    head.check()?;
    let mut g = QeGradients::zeros(head);
    let mut mse = 0.0;
    let nr = regression.len().max(1) as f64;
    for s in regression {
        let x = qe_features(s.src, s.hyp)?;
        let f = head.forward(&x);
        let err = f.y - s.target;
        mse += err * err / nr;
        head.backward(&x, &f, 2.0 * err / nr, &mut g);
    }
    let mut rank = 0.0;
    let nk = ranking.len().max(1) as f64;
    for t in ranking {
        let xp = qe_features(t.src, t.better)?;
        let xn = qe_features(t.src, t.worse)?;
        let (fp, fn_) = (head.forward(&xp), head.forward(&xn));
        let hinge = head.margin - fp.y + fn_.y;
        if hinge > 0.0 {
            rank += hinge / nk;
            head.backward(&xp, &fp, -1.0 / nk, &mut g);
            head.backward(&xn, &fn_, 1.0 / nk, &mut g);
        }
    }
    Ok(QeLosses { mse, rank, gradients: g })
}

#[derive(Serialize, Deserialize)]
struct QeHeadFile {
    input_dim: usize,
    hidden: usize,
    margin: f64,
    activation: String,
    feature_layout: Vec<String>,
    param_layout: String,
    params: Vec<f64>,
}

impl From<QeHead> for QeHeadFile {
    fn from(h: QeHead) -> Self {
        QeHeadFile {
            input_dim: h.input_dim,
            hidden: h.hidden,
            margin: h.margin,
            activation: "relu".into(),
            feature_layout: FEATURE_LAYOUT.iter().map(|s| s.to_string()).collect(),
            param_layout: PARAM_LAYOUT.into(),
            params: h.params(),
        }
    }
}

impl TryFrom<QeHeadFile> for QeHead {
    type Error = String;

    fn try_from(f: QeHeadFile) -> std::result::Result<Self, String> {
        if f.activation != "relu" || f.feature_layout != FEATURE_LAYOUT || f.param_layout != PARAM_LAYOUT {
            return Err("unsupported QE head layout".into());
        }
        let mut head = QeHead {
            input_dim: f.input_dim,
            hidden: f.hidden,
            margin: f.margin,
            w1: vec![0.0; f.hidden * 4 * f.input_dim],
            b1: vec![0.0; f.hidden],
            w2: vec![0.0; f.hidden],
            b2: 0.0,
        };
        head.set_params(&f.params).map_err(|e| e.to_string())?;
        Ok(head)
    }
}
