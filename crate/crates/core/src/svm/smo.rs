use std::num::NonZeroUsize;
use std::rc::Rc;

use lru::LruCache;
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use crate::error::{Error, Result};
use crate::sparse::SparseVec;

/// Curvature used when the pair's second derivative is not positive.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyper {
    pub c: f64,
    pub kernel: KernelSpec,
    /// Stopping tolerance on the maximal KKT violation.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Kernel row cache budget in megabytes.
    #[serde(default = "default_cache_mb")]
    pub cache_mb: usize,
    /// Record the dual objective after every SMO step.
    #[serde(default)]
    pub trace: bool,
}

fn default_tolerance() -> f64 {
    1e-3
}

fn default_max_iter() -> usize {
    10_000_000
}

fn default_cache_mb() -> usize {
    200
}

impl SvmHyper {
    pub fn new(c: f64, kernel: KernelSpec) -> Self {
        SvmHyper {
            c,
            kernel,
            tolerance: default_tolerance(),
            max_iter: default_max_iter(),
            cache_mb: default_cache_mb(),
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Invalid(format!("cost must be positive, got {}", self.c)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Invalid(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        self.kernel.validate()
    }
}

/// One trained two-class machine. Positive decision values mean label +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryModel {
    pub kernel: KernelSpec,
    /// Row indices of the support vectors in the training input.
    pub support_rows: Vec<usize>,
    pub support: Vec<SparseVec>,
    /// α·y per support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
}

impl BinaryModel {
    pub fn decision(&self, x: &SparseVec) -> f64 {
        let nx = x.squared_norm();
        let mut acc = self.bias;
        for (sv, a) in self.support.iter().zip(&self.coef) {
            acc += a * self.kernel.eval_with_norms(sv, sv.squared_norm(), x, nx);
        }
        acc
    }

    pub fn predict(&self, x: &SparseVec) -> f64 {
        if self.decision(x) > 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Dual variable of training row `row` (0 for non-support rows).
    pub fn alpha(&self, row: usize, y: f64) -> f64 {
        match self.support_rows.binary_search(&row) {
            Ok(k) => self.coef[k] * y,
            Err(_) => 0.0,
        }
    }
}

/// Rows of Q = yᵢyⱼK(xᵢ, xⱼ), computed on demand and kept in an LRU cache.
struct QMatrix<'a> {
    rows: &'a [SparseVec],
    norms: Vec<f64>,
    y: &'a [f64],
    kernel: KernelSpec,
    cache: LruCache<usize, Rc<[f64]>>,
}

impl<'a> QMatrix<'a> {
    fn new(rows: &'a [SparseVec], y: &'a [f64], kernel: KernelSpec, cache_mb: usize) -> Self {
        let n = rows.len().max(1);
        let capacity = (cache_mb * 1_000_000 / (8 * n)).max(2);
        QMatrix {
            norms: rows.iter().map(SparseVec::squared_norm).collect(),
            rows,
            y,
            kernel,
            cache: LruCache::new(NonZeroUsize::new(capacity).unwrap()),
        }
    }

    fn diag(&self, i: usize) -> f64 {
        self.kernel
            .eval_with_norms(&self.rows[i], self.norms[i], &self.rows[i], self.norms[i])
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        if let Some(r) = self.cache.get(&i) {
            return Rc::clone(r);
        }
        let (xi, ni, yi) = (&self.rows[i], self.norms[i], self.y[i]);
        let row: Rc<[f64]> = self
            .rows
            .iter()
            .zip(&self.norms)
            .zip(self.y)
            .map(|((xj, &nj), &yj)| yi * yj * self.kernel.eval_with_norms(xi, ni, xj, nj))
            .collect();
        self.cache.put(i, Rc::clone(&row));
        row
    }
}

fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
}

/// Solves the C-SVM dual by SMO with maximal-violating-pair selection.
///
/// `y` holds ±1. Hitting `max_iter` returns the current iterate with
/// `converged = false`.
pub fn train_binary(rows: &[SparseVec], y: &[f64], hyper: &SvmHyper) -> Result<BinaryModel> {
    hyper.validate()?;
    if rows.len() != y.len() {
        return Err(Error::Shape {
            tensor: "labels".into(),
            expected: format!("{} labels", rows.len()),
            actual: y.len().to_string(),
        });
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::Invalid(format!("binary labels must be ±1, got {bad}")));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::Invalid("binary problem needs both labels".into()));
    }
    let n = rows.len();
    let c = hyper.c;
    let mut q = QMatrix::new(rows, y, hyper.kernel, hyper.cache_mb);
    let qd: Vec<f64> = (0..n).map(|i| q.diag(i)).collect();
    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − eᵀα.
    let mut grad = vec![-1.0; n];
    let mut trace = Vec::new();
    if hyper.trace {
        trace.push(0.0);
    }
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < hyper.max_iter {
        let (mut gmax, mut gmax2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let up = if y[t] > 0.0 { !is_upper(alpha[t]) } else { !is_lower(alpha[t]) };
            let low = if y[t] > 0.0 { !is_lower(alpha[t]) } else { !is_upper(alpha[t]) };
            let v = -y[t] * grad[t];
            if up && v > gmax {
                gmax = v;
                i = t;
            }
            if low && -v > gmax2 {
                gmax2 = -v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax + gmax2 < hyper.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let qi = q.row(i);
        let qj = q.row(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * qi[j]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * qi[j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for k in 0..n {
            grad[k] += qi[k] * di + qj[k] * dj;
        }
        if hyper.trace {
            trace.push(dual_objective(&alpha, &grad));
        }
    }
    if !converged {
        log::warn!("SMO stopped at the iteration cap ({}) before converging", hyper.max_iter);
    }

    let rho = {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum_free) = (0usize, 0.0);
        for t in 0..n {
            let yg = y[t] * grad[t];
            if is_upper(alpha[t]) {
                if y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if is_lower(alpha[t]) {
                if y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum_free += yg;
            }
        }
        if free > 0 {
            sum_free / free as f64
        } else {
            (ub + lb) / 2.0
        }
    };

    let support_rows: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(BinaryModel {
        kernel: hyper.kernel,
        support: support_rows.iter().map(|&t| rows[t].clone()).collect(),
        coef: support_rows.iter().map(|&t| alpha[t] * y[t]).collect(),
        support_rows,
        bias: -rho,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// Largest KKT violation of `model` on its own training data, together with
/// |Σ αᵢyᵢ|. Zero means every condition holds exactly.
pub fn kkt_violation(model: &BinaryModel, rows: &[SparseVec], y: &[f64], c: f64) -> (f64, f64) {
    let mut worst: f64 = 0.0;
    let mut balance = 0.0;
    for (t, (x, &yt)) in rows.iter().zip(y).enumerate() {
        let a = model.alpha(t, yt);
        balance += a * yt;
        let margin = yt * model.decision(x);
        let v = if a <= 0.0 {
            1.0 - margin
        } else if a >= c {
            margin - 1.0
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    (worst, balance.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(xs: &[&[f64]]) -> Vec<SparseVec> {
        xs.iter().map(|x| SparseVec::from_dense(x)).collect()
    }

    #[test]
    fn two_points_boundary_at_midpoint() {
        // Primal optimum: w = 2, b = −1, both α = 2.
        let rows = pts(&[&[0.0], &[1.0]]);
        let y = [-1.0, 1.0];
        let m = train_binary(&rows, &y, &SvmHyper::new(1e6, KernelSpec::Linear)).unwrap();
        assert_eq!(m.support_rows, [0, 1]);
        assert!((m.decision(&SparseVec::from_dense(&[0.5]))).abs() < 1e-3);
        assert!((m.bias + 1.0).abs() < 1e-3);
        assert!((m.alpha(1, 1.0) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn xor_with_rbf() {
        let rows = pts(&[&[0.0, 0.0], &[1.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]]);
        let y = [-1.0, -1.0, 1.0, 1.0];
        let m = train_binary(&rows, &y, &SvmHyper::new(10.0, KernelSpec::Rbf { gamma: 1.0 })).unwrap();
        for (x, &t) in rows.iter().zip(&y) {
            assert_eq!(m.predict(x), t);
        }
    }

    fn random_fixture(seed: u64, n: usize) -> (Vec<SparseVec>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = if i % 2 == 0 { 1.0 } else { -1.0 };
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0) + 0.4 * label).collect();
            rows.push(SparseVec::from_dense(&x));
            y.push(label);
        }
        (rows, y)
    }

    #[test]
    fn kkt_holds_on_random_fixtures() {
        for (seed, kernel) in [
            (1, KernelSpec::Linear),
            (2, KernelSpec::Rbf { gamma: 0.5 }),
            (3, KernelSpec::Rbf { gamma: 4.0 }),
        ] {
            let (rows, y) = random_fixture(seed, 60);
            let hyper = SvmHyper::new(1.0, kernel);
            let m = train_binary(&rows, &y, &hyper).unwrap();
            assert!(m.converged);
            let (viol, balance) = kkt_violation(&m, &rows, &y, hyper.c);
            assert!(viol <= hyper.tolerance + 1e-9, "seed {seed}: violation {viol}");
            assert!(balance < 1e-9);
            assert!(m.coef.iter().all(|a| a.abs() <= hyper.c));
        }
    }

    #[test]
    fn dual_objective_never_decreases() {
        let (rows, y) = random_fixture(9, 80);
        let mut hyper = SvmHyper::new(2.0, KernelSpec::Rbf { gamma: 1.0 });
        hyper.trace = true;
        let m = train_binary(&rows, &y, &hyper).unwrap();
        assert_eq!(m.objective_trace.len(), m.iterations + 1);
        for w in m.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn duplicated_rows_keep_decision_signs() {
        // Duplication doubles the effective cost, so compare in the hard-margin regime.
        let (mut rows, y) = random_fixture(4, 30);
        for (r, &t) in rows.iter_mut().zip(&y) {
            r.values[0] += 1.5 * t;
        }
        let hyper = SvmHyper::new(1e4, KernelSpec::Linear);
        let once = train_binary(&rows, &y, &hyper).unwrap();
        let rows2: Vec<SparseVec> = rows.iter().chain(&rows).cloned().collect();
        let y2: Vec<f64> = y.iter().chain(&y).copied().collect();
        let twice = train_binary(&rows2, &y2, &hyper).unwrap();
        let (probe, _) = random_fixture(5, 200);
        for x in probe.iter().chain(&rows) {
            if once.decision(x).abs() > 0.05 {
                assert_eq!(once.predict(x), twice.predict(x));
            }
        }
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let (rows, y) = random_fixture(6, 40);
        let mut hyper = SvmHyper::new(1.0, KernelSpec::Linear);
        hyper.max_iter = 2;
        let m = train_binary(&rows, &y, &hyper).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 2);
    }

    #[test]
    fn one_sided_labels_rejected() {
        let rows = pts(&[&[0.0], &[1.0]]);
        assert!(train_binary(&rows, &[1.0, 1.0], &SvmHyper::new(1.0, KernelSpec::Linear)).is_err());
        assert!(train_binary(&rows, &[1.0, -1.0], &SvmHyper::new(0.0, KernelSpec::Linear)).is_err());
    }
}
