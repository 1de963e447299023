use std::collections::BTreeMap;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Row-major weight tensor. Gather tables (`sparse`) keep a lazy multiplicative
/// scale so weight decay does not touch every row on every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Subject to L2 weight decay.
    pub decay: bool,
    /// Only ever read one row at a time; gradients are row-sparse.
    pub sparse: bool,
    data: Vec<f64>,
    #[serde(default = "one")]
    scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Param {
    pub fn zeros(name: &str, rows: usize, cols: usize) -> Self {
        Param {
            name: name.to_string(),
            rows,
            cols,
            decay: false,
            sparse: false,
            data: vec![0.0; rows * cols],
            scale: 1.0,
        }
    }

    pub fn uniform<R: Rng>(name: &str, rows: usize, cols: usize, bound: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(name, rows, cols);
        if bound > 0.0 {
            for v in &mut p.data {
                *v = rng.random_range(-bound..bound);
            }
        }
        p
    }

    pub fn with_decay(mut self) -> Self {
        self.decay = true;
        self
    }

    pub fn as_table(mut self) -> Self {
        self.sparse = true;
        self
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c] * self.scale
    }

    /// `acc += row r`.
    #[inline]
    pub fn add_row_to(&self, r: usize, acc: &mut [f64]) {
        let row = &self.data[r * self.cols..(r + 1) * self.cols];
        for (a, w) in acc.iter_mut().zip(row) {
            *a += w * self.scale;
        }
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.add_row_to(r, &mut out);
        out
    }

    /// `out += W·x` for `x` of length `cols`.
    pub fn matvec_add(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.rows) {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o += self.scale * row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// `out += Wᵀ·g` for `g` of length `rows`.
    pub fn matvec_t_add(&self, g: &[f64], out: &mut [f64]) {
        for (r, &gr) in g.iter().enumerate() {
            if gr == 0.0 {
                continue;
            }
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, w) in out.iter_mut().zip(row) {
                *o += self.scale * w * gr;
            }
        }
    }

    /// Folds the lazy scale into the stored values.
    pub fn normalize(&mut self) {
        if self.scale != 1.0 {
            for v in &mut self.data {
                *v *= self.scale;
            }
            self.scale = 1.0;
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.data.iter().map(|v| v * self.scale).collect()
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.normalize();
        &mut self.data
    }

    pub fn set_row(&mut self, r: usize, values: &[f64]) {
        self.normalize();
        self.data[r * self.cols..(r + 1) * self.cols].copy_from_slice(values);
    }

    pub fn squared_norm(&self) -> f64 {
        self.scale * self.scale * self.data.iter().map(|v| v * v).sum::<f64>()
    }

    /// `W ← (1 − lr·l2)·W − lr·g`, with decay only when `self.decay`.
    pub fn sgd_step(&mut self, grad: &Grad, lr: f64, l2: f64) {
        let factor = if self.decay { 1.0 - lr * l2 } else { 1.0 };
        match grad {
            Grad::Dense(g) => {
                self.normalize();
                for (w, gv) in self.data.iter_mut().zip(g) {
                    *w = *w * factor - lr * gv;
                }
            }
            Grad::Rows(rows) => {
                self.scale *= factor;
                let step = lr / self.scale;
                for (&r, g) in rows {
                    let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
                    for (w, gv) in row.iter_mut().zip(g) {
                        *w -= step * gv;
                    }
                }
                if self.scale < 1e-3 {
                    self.normalize();
                }
            }
        }
    }
}

/// Gradient with the shape of one [`Param`].
#[derive(Debug, Clone, PartialEq)]
pub enum Grad {
    Dense(Vec<f64>),
    Rows(BTreeMap<usize, Vec<f64>>),
}

impl Grad {
    pub fn for_param(p: &Param) -> Self {
        if p.sparse {
            Grad::Rows(BTreeMap::new())
        } else {
            Grad::Dense(vec![0.0; p.len()])
        }
    }

    pub fn dense_mut(&mut self) -> &mut [f64] {
        match self {
            Grad::Dense(g) => g,
            Grad::Rows(_) => panic!("dense access to a row-sparse gradient"),
        }
    }

    /// Mutable row `r` of a gradient with `cols` columns.
    pub fn row_mut(&mut self, r: usize, cols: usize) -> &mut [f64] {
        match self {
            Grad::Dense(g) => &mut g[r * cols..(r + 1) * cols],
            Grad::Rows(rows) => rows.entry(r).or_insert_with(|| vec![0.0; cols]),
        }
    }

    /// `G += a ⊗ b` for a dense `len(a) × len(b)` gradient.
    pub fn add_outer(&mut self, a: &[f64], b: &[f64]) {
        let cols = b.len();
        let g = self.dense_mut();
        for (r, &av) in a.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            for (x, &bv) in g[r * cols..(r + 1) * cols].iter_mut().zip(b) {
                *x += av * bv;
            }
        }
    }

    pub fn add_slice(&mut self, v: &[f64]) {
        for (x, y) in self.dense_mut().iter_mut().zip(v) {
            *x += y;
        }
    }

    pub fn to_dense(&self, p: &Param) -> Vec<f64> {
        match self {
            Grad::Dense(g) => g.clone(),
            Grad::Rows(rows) => {
                let mut out = vec![0.0; p.len()];
                for (&r, g) in rows {
                    out[r * p.cols..(r + 1) * p.cols].copy_from_slice(g);
                }
                out
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Contiguous blocks of size ⌈n/k⌉ covering `0..n`; trailing blocks may be short or empty.
pub fn pool_blocks(n: usize, k: usize) -> Vec<Range<usize>> {
    let size = n.div_ceil(k.max(1)).max(1);
    (0..k)
        .map(|j| (j * size).min(n)..((j + 1) * size).min(n))
        .collect()
}

/// Max of each column within each block; returns pooled values (block-major) and
/// the row that produced each (None for an empty block, whose value is 0).
pub fn max_pool(rows: &[Vec<f64>], width: usize, k: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let mut pooled = vec![0.0; k * width];
    let mut arg = vec![None; k * width];
    for (j, block) in pool_blocks(rows.len(), k).into_iter().enumerate() {
        for t in block {
            for i in 0..width {
                let slot = j * width + i;
                if arg[slot].is_none() || rows[t][i] > pooled[slot] {
                    pooled[slot] = rows[t][i];
                    arg[slot] = Some(t);
                }
            }
        }
    }
    (pooled, arg)
}

/// Inverted dropout mask: each unit kept with probability 1 − rate and scaled by 1/(1 − rate).
pub fn dropout_mask<R: Rng>(n: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    if rate <= 0.0 {
        return vec![1.0; n];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..n)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

/// Output layer: logits = W·z + b, probabilities, and cross-entropy gradient.
pub(crate) struct Readout {
    pub probs: Vec<f64>,
}

pub(crate) fn readout(w: &Param, b: &Param, z: &[f64]) -> Readout {
    let mut logits = b.values();
    w.matvec_add(z, &mut logits);
    Readout { probs: softmax(&logits) }
}

/// Backpropagates `weight · CE(label)` through the readout; returns dL/dz.
pub(crate) fn readout_backward(
    w: &Param,
    z: &[f64],
    out: &Readout,
    label: usize,
    weight: f64,
    gw: &mut Grad,
    gb: &mut Grad,
) -> Vec<f64> {
    let dlogits: Vec<f64> = out
        .probs
        .iter()
        .enumerate()
        .map(|(c, p)| weight * (p - if c == label { 1.0 } else { 0.0 }))
        .collect();
    gw.add_outer(&dlogits, z);
    gb.add_slice(&dlogits);
    let mut dz = vec![0.0; z.len()];
    w.matvec_t_add(&dlogits, &mut dz);
    dz
}

pub(crate) fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(1e-300).ln()
}
