//! One-hot bidirectional LSTM with pooling. The cell has only forget and input
//! gates: f = σ(Wᶠx + Uᶠh + bᶠ), u = σ(Wᵘx + Uᵘh + bᵘ), c = u + f⊙c_prev, h = tanh(c).

use rand::Rng;

use super::config::NetConfig;
use super::tensor::{dropout_mask, max_pool, readout, readout_backward, sigmoid, Grad, Param, Readout};

// Per direction: W (V × 2q gather table, forget rows then input rows), U (2q × q), b (2q).
const DIR: [usize; 2] = [0, 3];
const W: usize = 0;
const U: usize = 1;
const B: usize = 2;
pub(crate) const OUT: usize = 6;
pub(crate) const OUT_BIAS: usize = 7;

/// Explicit per-gate weights of a single cell, input dimension `d`, state dimension `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellWeights {
    pub w_f: Vec<Vec<f64>>,
    pub w_u: Vec<Vec<f64>>,
    pub u_f: Vec<Vec<f64>>,
    pub u_u: Vec<Vec<f64>>,
    pub b_f: Vec<f64>,
    pub b_u: Vec<f64>,
}

fn affine(w: &[Vec<f64>], x: &[f64], u: &[Vec<f64>], h: &[f64], b: &[f64]) -> Vec<f64> {
    (0..b.len())
        .map(|i| {
            b[i] + w[i].iter().zip(x).map(|(a, v)| a * v).sum::<f64>()
                + u[i].iter().zip(h).map(|(a, v)| a * v).sum::<f64>()
        })
        .collect()
}

impl CellWeights {
    pub fn zeros(q: usize, d: usize) -> Self {
        CellWeights {
            w_f: vec![vec![0.0; d]; q],
            w_u: vec![vec![0.0; d]; q],
            u_f: vec![vec![0.0; q]; q],
            u_u: vec![vec![0.0; q]; q],
            b_f: vec![0.0; q],
            b_u: vec![0.0; q],
        }
    }

    /// One time step; returns `(h_t, c_t)`.
    pub fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let f: Vec<f64> = affine(&self.w_f, x, &self.u_f, h_prev, &self.b_f)
            .into_iter()
            .map(sigmoid)
            .collect();
        let u: Vec<f64> = affine(&self.w_u, x, &self.u_u, h_prev, &self.b_u)
            .into_iter()
            .map(sigmoid)
            .collect();
        let c: Vec<f64> = (0..f.len()).map(|i| u[i] + f[i] * c_prev[i]).collect();
        let h = c.iter().map(|v| v.tanh()).collect();
        (h, c)
    }
}

pub(crate) fn init<R: Rng>(cfg: &NetConfig, vocab_len: usize, rng: &mut R) -> Vec<Param> {
    let q = cfg.hidden;
    let pooled = 2 * q * cfg.pool_units;
    let mut out = Vec::new();
    for name in ["fwd", "bwd"] {
        out.push(Param::uniform(&format!("{name}_w"), vocab_len, 2 * q, 1.0, rng).with_decay().as_table());
        out.push(Param::uniform(&format!("{name}_u"), 2 * q, q, 1.0 / (q as f64).sqrt(), rng).with_decay());
        out.push(Param::zeros(&format!("{name}_b"), 1, 2 * q));
    }
    out.push(Param::uniform("out", 3, pooled, 1.0 / (pooled as f64).sqrt(), rng).with_decay());
    out.push(Param::zeros("out_bias", 1, 3));
    out
}

/// Per-gate view of one direction's weights, for an input of one-hot dimension V.
pub(crate) fn cell_weights(p: &[Param], dir: usize, q: usize) -> CellWeights {
    let (w, u, b) = (&p[DIR[dir] + W], &p[DIR[dir] + U], &p[DIR[dir] + B]);
    let v = w.rows;
    let col = |k: usize| (0..v).map(|r| w.get(r, k)).collect::<Vec<f64>>();
    CellWeights {
        w_f: (0..q).map(col).collect(),
        w_u: (q..2 * q).map(col).collect(),
        u_f: (0..q).map(|i| u.row(i)).collect(),
        u_u: (q..2 * q).map(|i| u.row(i)).collect(),
        b_f: b.row(0)[..q].to_vec(),
        b_u: b.row(0)[q..].to_vec(),
    }
}

pub(crate) struct DirPass {
    ids: Vec<Option<usize>>,
    f: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

fn run_direction(p: &[Param], dir: usize, q: usize, ids: Vec<Option<usize>>) -> DirPass {
    let (w, u, b) = (&p[DIR[dir] + W], &p[DIR[dir] + U], &p[DIR[dir] + B]);
    let mut pass = DirPass {
        f: Vec::with_capacity(ids.len()),
        u: Vec::with_capacity(ids.len()),
        c: Vec::with_capacity(ids.len()),
        h: Vec::with_capacity(ids.len()),
        ids,
    };
    let (mut h_prev, mut c_prev) = (vec![0.0; q], vec![0.0; q]);
    for &id in &pass.ids {
        let mut a = b.values();
        u.matvec_add(&h_prev, &mut a);
        if let Some(id) = id {
            w.add_row_to(id, &mut a);
        }
        let f: Vec<f64> = a[..q].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = a[q..].iter().map(|&v| sigmoid(v)).collect();
        let c: Vec<f64> = (0..q).map(|i| g[i] + f[i] * c_prev[i]).collect();
        let h: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        pass.f.push(f);
        pass.u.push(g);
        pass.c.push(c.clone());
        pass.h.push(h.clone());
        h_prev = h;
        c_prev = c;
    }
    pass
}

/// Backpropagation through time given dL/dh_t from pooling.
fn backward_direction(p: &[Param], dir: usize, q: usize, pass: &DirPass, dh_pool: &[Vec<f64>], g: &mut [Grad]) {
    let base = DIR[dir];
    let mut dh_rec = vec![0.0; q];
    let mut dc_carry = vec![0.0; q];
    let zero = vec![0.0; q];
    for t in (0..pass.ids.len()).rev() {
        let c_prev = if t > 0 { &pass.c[t - 1] } else { &zero };
        let h_prev = if t > 0 { &pass.h[t - 1] } else { &zero };
        let mut da = vec![0.0; 2 * q];
        let mut any = false;
        for i in 0..q {
            let dh = dh_pool[t][i] + dh_rec[i];
            let h = pass.h[t][i];
            let dc = dh * (1.0 - h * h) + dc_carry[i];
            let (f, u) = (pass.f[t][i], pass.u[t][i]);
            da[i] = dc * c_prev[i] * f * (1.0 - f);
            da[q + i] = dc * u * (1.0 - u);
            dc_carry[i] = dc * f;
            any |= da[i] != 0.0 || da[q + i] != 0.0;
        }
        dh_rec.fill(0.0);
        if !any {
            continue;
        }
        g[base + B].add_slice(&da);
        g[base + U].add_outer(&da, h_prev);
        p[base + U].matvec_t_add(&da, &mut dh_rec);
        if let Some(id) = pass.ids[t] {
            for (x, v) in g[base + W].row_mut(id, 2 * q).iter_mut().zip(&da) {
                *x += v;
            }
        }
    }
}

pub(crate) struct Pass {
    dirs: [DirPass; 2],
    args: [Vec<Option<usize>>; 2],
    mask: Vec<f64>,
    z: Vec<f64>,
    pub out: Readout,
}

impl Pass {
    pub fn hidden(&self, dir: usize) -> &[Vec<f64>] {
        &self.dirs[dir].h
    }
}

pub(crate) fn forward<R: Rng>(cfg: &NetConfig, p: &[Param], ids: &[Option<usize>], rng: Option<&mut R>) -> Pass {
    let q = cfg.hidden;
    let k = cfg.pool_units;
    let ids: Vec<Option<usize>> = if ids.is_empty() { vec![None] } else { ids.to_vec() };
    let rev: Vec<Option<usize>> = ids.iter().rev().copied().collect();
    let dirs = [run_direction(p, 0, q, ids), run_direction(p, 1, q, rev)];
    let (zf, af) = max_pool(&dirs[0].h, q, k);
    let (zb, ab) = max_pool(&dirs[1].h, q, k);
    let pooled: Vec<f64> = zf.into_iter().chain(zb).collect();
    let mask = match rng {
        Some(r) => dropout_mask(pooled.len(), cfg.dropout_top, r),
        None => vec![1.0; pooled.len()],
    };
    let z: Vec<f64> = pooled.iter().zip(&mask).map(|(v, m)| v * m).collect();
    let out = readout(&p[OUT], &p[OUT_BIAS], &z);
    Pass {
        dirs,
        args: [af, ab],
        mask,
        z,
        out,
    }
}

pub(crate) fn backward(cfg: &NetConfig, p: &[Param], pass: &Pass, label: usize, weight: f64, g: &mut [Grad]) {
    let q = cfg.hidden;
    let (head, tail) = g.split_at_mut(OUT_BIAS);
    let dz = readout_backward(&p[OUT], &pass.z, &pass.out, label, weight, &mut head[OUT], &mut tail[0]);
    let half = q * cfg.pool_units;
    for dir in 0..2 {
        let steps = pass.dirs[dir].h.len();
        let mut dh = vec![vec![0.0; q]; steps];
        for slot in 0..half {
            let s = dir * half + slot;
            if let Some(t) = pass.args[dir][slot] {
                dh[t][slot % q] += dz[s] * pass.mask[s];
            }
        }
        backward_direction(p, dir, q, &pass.dirs[dir], &dh, g);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::config::Arch;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_cell_closed_form() {
        let cell = CellWeights::zeros(3, 4);
        let x = [1.0, 0.0, 0.0, 0.0];
        let (h, c) = cell.step(&x, &[0.0; 3], &[0.0; 3]);
        assert_eq!(c, [0.5; 3]);
        assert_eq!(h, [0.5f64.tanh(); 3]);
        let (h, c) = cell.step(&x, &[0.0; 3], &[1.0; 3]);
        assert_eq!(c, [1.0; 3]);
        assert_eq!(h, [1f64.tanh(); 3]);
    }

    #[test]
    fn cell_matches_straight_line_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut r = || rng.random_range(-1.0..1.0);
        let (q, d) = (2, 3);
        let mut cell = CellWeights::zeros(q, d);
        for m in [&mut cell.w_f, &mut cell.w_u, &mut cell.u_f, &mut cell.u_u] {
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v = r();
                }
            }
        }
        for v in cell.b_f.iter_mut().chain(cell.b_u.iter_mut()) {
            *v = r();
        }
        let x = [r(), r(), r()];
        let (h0, c0) = ([r(), r()], [r(), r()]);
        let (h, c) = cell.step(&x, &h0, &c0);
        let s = |z: f64| 1.0 / (1.0 + (-z).exp());
        for i in 0..q {
            let zf = cell.w_f[i][0] * x[0] + cell.w_f[i][1] * x[1] + cell.w_f[i][2] * x[2]
                + cell.u_f[i][0] * h0[0] + cell.u_f[i][1] * h0[1] + cell.b_f[i];
            let zu = cell.w_u[i][0] * x[0] + cell.w_u[i][1] * x[1] + cell.w_u[i][2] * x[2]
                + cell.u_u[i][0] * h0[0] + cell.u_u[i][1] * h0[1] + cell.b_u[i];
            let ci = s(zu) + s(zf) * c0[i];
            assert!((c[i] - ci).abs() < 1e-15);
            assert!((h[i] - ci.tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_forget_gate_reduces_to_input_path() {
        let mut cell = CellWeights::zeros(2, 2);
        cell.b_f = vec![-800.0; 2];
        cell.w_u = vec![vec![0.3, -0.2], vec![0.1, 0.4]];
        cell.b_u = vec![0.05, -0.1];
        let x = [1.0, 0.5];
        let (h, _) = cell.step(&x, &[0.0; 2], &[9.0; 2]);
        for i in 0..2 {
            let u = sigmoid(cell.w_u[i][0] + 0.5 * cell.w_u[i][1] + cell.b_u[i]);
            assert_eq!(h[i], u.tanh());
        }
    }

    fn small() -> NetConfig {
        NetConfig {
            hidden: 3,
            pool_units: 1,
            ..NetConfig::preset(Arch::OhBilstmP)
        }
    }

    #[test]
    fn network_states_follow_the_cell() {
        let cfg = small();
        let p = init(&cfg, 4, &mut ChaCha8Rng::seed_from_u64(5));
        let ids = [Some(2), None, Some(0), Some(3)];
        let pass = forward::<ChaCha8Rng>(&cfg, &p, &ids, None);
        for dir in 0..2 {
            let cell = cell_weights(&p, dir, 3);
            let order: Vec<Option<usize>> = if dir == 0 { ids.to_vec() } else { ids.iter().rev().copied().collect() };
            let (mut h, mut c) = (vec![0.0; 3], vec![0.0; 3]);
            for (t, id) in order.iter().enumerate() {
                let mut x = vec![0.0; 4];
                if let Some(i) = id {
                    x[*i] = 1.0;
                }
                (h, c) = cell.step(&x, &h, &c);
                for i in 0..3 {
                    assert!((pass.hidden(dir)[t][i] - h[i]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn one_token_document() {
        let cfg = small();
        let p = init(&cfg, 4, &mut ChaCha8Rng::seed_from_u64(6));
        let pass = forward::<ChaCha8Rng>(&cfg, &p, &[Some(1)], None);
        let x = [0.0, 1.0, 0.0, 0.0];
        for dir in 0..2 {
            let (h, _) = cell_weights(&p, dir, 3).step(&x, &[0.0; 3], &[0.0; 3]);
            assert_eq!(pass.hidden(dir).len(), 1);
            for i in 0..3 {
                assert!((pass.hidden(dir)[0][i] - h[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn reversal_swaps_directions_under_symmetric_weights() {
        let mut cfg = small();
        cfg.pool_units = 2;
        let mut p = init(&cfg, 5, &mut ChaCha8Rng::seed_from_u64(7));
        for k in 0..3 {
            p[3 + k] = p[k].clone();
        }
        let ids = [Some(0), Some(4), Some(2), None, Some(1)];
        let rev: Vec<Option<usize>> = ids.iter().rev().copied().collect();
        let a = forward::<ChaCha8Rng>(&cfg, &p, &ids, None);
        let b = forward::<ChaCha8Rng>(&cfg, &p, &rev, None);
        let half = a.z.len() / 2;
        assert_eq!(a.z[..half], b.z[half..]);
        assert_eq!(a.z[half..], b.z[..half]);
    }

    #[test]
    fn zero_weights_give_uniform() {
        let cfg = small();
        let mut p = init(&cfg, 4, &mut ChaCha8Rng::seed_from_u64(0));
        for t in &mut p {
            t.values_mut().fill(0.0);
        }
        let pass = forward::<ChaCha8Rng>(&cfg, &p, &[Some(1), Some(2)], None);
        assert_eq!(pass.out.probs, [1.0 / 3.0; 3]);
    }
}
