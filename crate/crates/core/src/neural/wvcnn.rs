//! Word-vector CNN: embedding lookup → zero padding to `seq_len` → convolutions of
//! several window sizes with ReLU → max-over-time pooling → dropout → softmax.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;

use super::config::NetConfig;
use super::onehot::TokenVocab;
use super::tensor::{dropout_mask, max_pool, readout, readout_backward, Grad, Param, Readout};
use crate::error::{Error, Result};

pub(crate) const EMB: usize = 0;

/// Embedding vectors are drawn from U[−EMBED_INIT, EMBED_INIT].
pub const EMBED_INIT: f64 = 0.25;

fn conv(i: usize) -> usize {
    1 + 2 * i
}

fn out(cfg: &NetConfig) -> usize {
    1 + 2 * cfg.windows.len()
}

pub(crate) fn init<R: Rng>(cfg: &NetConfig, vocab: &TokenVocab, rng: &mut R) -> Result<Vec<Param>> {
    let (d, m) = (cfg.em_dim, cfg.hidden);
    let mut emb = Param::uniform("embedding", vocab.len(), d, EMBED_INIT, rng).as_table();
    if let Some(path) = &cfg.embeddings {
        let vectors = load_embeddings(path, d)?;
        let mut found = 0;
        for (i, tok) in vocab.tokens().iter().enumerate() {
            if let Some(v) = vectors.get(tok) {
                emb.set_row(i, v);
                found += 1;
            }
        }
        log::info!("{found} of {} vocabulary tokens have pre-trained vectors", vocab.len());
    }
    let mut params = vec![emb];
    for &w in &cfg.windows {
        params.push(
            Param::uniform(&format!("conv{w}"), m, w * d, 1.0 / ((w * d) as f64).sqrt(), rng).with_decay(),
        );
        params.push(Param::zeros(&format!("conv{w}_bias"), 1, m));
    }
    let pooled = m * cfg.windows.len();
    params.push(Param::uniform("out", 3, pooled, 1.0 / (pooled as f64).sqrt(), rng).with_decay());
    params.push(Param::zeros("out_bias", 1, 3));
    Ok(params)
}

/// Reads whitespace-separated `token v1 … vd` lines. A leading `count dim` header
/// line is skipped.
pub fn load_embeddings(path: &Path, dim: usize) -> Result<HashMap<String, Vec<f64>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if n == 0 && values.len() == 1 && token.parse::<usize>().is_ok() && values[0].parse::<usize>().is_ok() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        if values.len() != dim {
            return Err(parse_err(format!("expected {dim} values, found {}", values.len())));
        }
        let v = values
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| parse_err(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        out.insert(token.to_string(), v);
    }
    Ok(out)
}

/// Truncates to `len` or appends `None` (zero rows) up to `len`.
pub fn pad_or_truncate(ids: &[Option<usize>], len: usize) -> Vec<Option<usize>> {
    let mut out: Vec<Option<usize>> = ids.iter().take(len).copied().collect();
    out.resize(len, None);
    out
}

pub(crate) struct Pass {
    ids: Vec<Option<usize>>,
    x: Vec<f64>,
    embed_mask: Vec<f64>,
    pre: Vec<Vec<Vec<f64>>>,
    arg: Vec<Vec<Option<usize>>>,
    pool_mask: Vec<f64>,
    z: Vec<f64>,
    pub out: Readout,
}

#[cfg(test)]
impl Pass {
    pub fn pooled_len(&self) -> usize {
        self.z.len()
    }
}

pub(crate) fn forward<R: Rng>(cfg: &NetConfig, p: &[Param], ids: &[Option<usize>], mut rng: Option<&mut R>) -> Pass {
    let (d, m) = (cfg.em_dim, cfg.hidden);
    let len = cfg.seq_len.unwrap_or(ids.len());
    let ids = pad_or_truncate(ids, len);
    let mut x = vec![0.0; len * d];
    for (t, id) in ids.iter().enumerate() {
        if let Some(id) = id {
            p[EMB].add_row_to(*id, &mut x[t * d..(t + 1) * d]);
        }
    }
    let embed_mask = match rng.as_deref_mut() {
        Some(r) => dropout_mask(x.len(), cfg.dropout_embed, r),
        None => vec![1.0; x.len()],
    };
    for (v, k) in x.iter_mut().zip(&embed_mask) {
        *v *= k;
    }
    let mut pre = Vec::new();
    let mut arg = Vec::new();
    let mut pooled = Vec::new();
    for (i, &w) in cfg.windows.iter().enumerate() {
        let (f, b) = (&p[conv(i)], &p[conv(i) + 1]);
        let rows: Vec<Vec<f64>> = (0..=len - w)
            .map(|t| {
                let mut a = b.values();
                f.matvec_add(&x[t * d..(t + w) * d], &mut a);
                a
            })
            .collect();
        let act: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect();
        let (pz, pa) = max_pool(&act, m, 1);
        pooled.extend(pz);
        arg.push(pa);
        pre.push(rows);
    }
    let pool_mask = match rng {
        Some(r) => dropout_mask(pooled.len(), cfg.dropout_pool, r),
        None => vec![1.0; pooled.len()],
    };
    let z: Vec<f64> = pooled.iter().zip(&pool_mask).map(|(v, k)| v * k).collect();
    let out = readout(&p[out(cfg)], &p[out(cfg) + 1], &z);
    Pass {
        ids,
        x,
        embed_mask,
        pre,
        arg,
        pool_mask,
        z,
        out,
    }
}

pub(crate) fn backward(cfg: &NetConfig, p: &[Param], pass: &Pass, label: usize, weight: f64, g: &mut [Grad]) {
    let (d, m) = (cfg.em_dim, cfg.hidden);
    let o = out(cfg);
    let (head, tail) = g.split_at_mut(o + 1);
    let dz = readout_backward(&p[o], &pass.z, &pass.out, label, weight, &mut head[o], &mut tail[0]);
    let mut dx = vec![0.0; pass.x.len()];
    for (i, &w) in cfg.windows.iter().enumerate() {
        for j in 0..m {
            let s = i * m + j;
            let Some(t) = pass.arg[i][j] else { continue };
            if pass.pre[i][t][j] <= 0.0 {
                continue;
            }
            let dpre = dz[s] * pass.pool_mask[s];
            if dpre == 0.0 {
                continue;
            }
            let window = &pass.x[t * d..(t + w) * d];
            for (gv, xv) in g[conv(i)].row_mut(j, w * d).iter_mut().zip(window) {
                *gv += dpre * xv;
            }
            g[conv(i) + 1].dense_mut()[j] += dpre;
            let row = p[conv(i)].row(j);
            for (dxv, fv) in dx[t * d..(t + w) * d].iter_mut().zip(&row) {
                *dxv += dpre * fv;
            }
        }
    }
    for (t, id) in pass.ids.iter().enumerate() {
        let Some(id) = id else { continue };
        let span = t * d..(t + 1) * d;
        if dx[span.clone()].iter().all(|&v| v == 0.0) {
            continue;
        }
        let grad_row = g[EMB].row_mut(*id, d);
        for ((gv, dv), k) in grad_row.iter_mut().zip(&dx[span.clone()]).zip(&pass.embed_mask[span]) {
            *gv += dv * k;
        }
    }
}
