//! One-hot CNN: region vectors → σ(W·r + b) with σ = ReLU → dynamic max pooling
//! → dropout → softmax.

use rand::Rng;

use super::config::NetConfig;
use super::onehot::region_coords;
use super::tensor::{dropout_mask, max_pool, readout, readout_backward, Grad, Param, Readout};

pub(crate) const TABLE: usize = 0;
pub(crate) const BIAS: usize = 1;
pub(crate) const OUT: usize = 2;
pub(crate) const OUT_BIAS: usize = 3;

pub(crate) fn init<R: Rng>(cfg: &NetConfig, vocab_len: usize, rng: &mut R) -> Vec<Param> {
    let m = cfg.hidden;
    let rows = cfg.region().dim(vocab_len);
    let pooled = m * cfg.pool_units;
    vec![
        Param::uniform("region_table", rows, m, 1.0 / (cfg.region_size as f64).sqrt(), rng)
            .with_decay()
            .as_table(),
        Param::zeros("region_bias", 1, m),
        Param::uniform("out", 3, pooled, 1.0 / (pooled as f64).sqrt(), rng).with_decay(),
        Param::zeros("out_bias", 1, 3),
    ]
}

pub(crate) struct Pass {
    coords: Vec<Vec<usize>>,
    pre: Vec<Vec<f64>>,
    arg: Vec<Option<usize>>,
    mask: Vec<f64>,
    z: Vec<f64>,
    pub out: Readout,
}

/// Pre-activations W·r + b of every region, computed by gathering table rows.
pub(crate) fn region_preactivations(p: &[Param], coords: &[Vec<usize>]) -> Vec<Vec<f64>> {
    coords
        .iter()
        .map(|cs| {
            let mut a = p[BIAS].values();
            for &c in cs {
                p[TABLE].add_row_to(c, &mut a);
            }
            a
        })
        .collect()
}

pub(crate) fn forward<R: Rng>(
    cfg: &NetConfig,
    p: &[Param],
    vocab_len: usize,
    ids: &[Option<usize>],
    rng: Option<&mut R>,
) -> Pass {
    let m = cfg.hidden;
    let coords = region_coords(ids, vocab_len, &cfg.region());
    let pre = region_preactivations(p, &coords);
    let act: Vec<Vec<f64>> = pre.iter().map(|a| a.iter().map(|v| v.max(0.0)).collect()).collect();
    let (pooled, arg) = max_pool(&act, m, cfg.pool_units);
    let mask = match rng {
        Some(r) => dropout_mask(pooled.len(), cfg.dropout_top, r),
        None => vec![1.0; pooled.len()],
    };
    let z: Vec<f64> = pooled.iter().zip(&mask).map(|(v, k)| v * k).collect();
    let out = readout(&p[OUT], &p[OUT_BIAS], &z);
    Pass {
        coords,
        pre,
        arg,
        mask,
        z,
        out,
    }
}

pub(crate) fn backward(
    cfg: &NetConfig,
    p: &[Param],
    pass: &Pass,
    label: usize,
    weight: f64,
    g: &mut [Grad],
) {
    let m = cfg.hidden;
    let (head, tail) = g.split_at_mut(OUT_BIAS);
    let dz = readout_backward(&p[OUT], &pass.z, &pass.out, label, weight, &mut head[OUT], &mut tail[0]);
    let mut dpre = vec![vec![0.0; m]; pass.pre.len()];
    for (slot, (&d, &k)) in dz.iter().zip(&pass.mask).enumerate() {
        if let Some(r) = pass.arg[slot] {
            let i = slot % m;
            if pass.pre[r][i] > 0.0 {
                dpre[r][i] += d * k;
            }
        }
    }
    for (cs, d) in pass.coords.iter().zip(&dpre) {
        if d.iter().all(|&v| v == 0.0) {
            continue;
        }
        g[BIAS].add_slice(d);
        for &c in cs {
            for (x, v) in g[TABLE].row_mut(c, m).iter_mut().zip(d) {
                *x += v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::config::Arch;
    use crate::neural::onehot::{encode_one_hot, TokenVocab};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(m: usize, k: usize) -> NetConfig {
        NetConfig {
            hidden: m,
            pool_units: k,
            ..NetConfig::preset(Arch::OhCnn)
        }
    }

    #[test]
    fn zero_weights_give_uniform() {
        let c = cfg(4, 2);
        let mut p = init(&c, 5, &mut ChaCha8Rng::seed_from_u64(0));
        for t in &mut p {
            t.values_mut().fill(0.0);
        }
        let pass = forward::<ChaCha8Rng>(&c, &p, 5, &[Some(1), Some(3), None, Some(0)], None);
        assert_eq!(pass.out.probs, [1.0 / 3.0; 3]);
    }

    #[test]
    fn gather_equals_dense_product() {
        let vocab = TokenVocab::new(["don't", "hate", "I", "it", "love"]);
        let c = cfg(3, 1);
        let p = init(&c, vocab.len(), &mut ChaCha8Rng::seed_from_u64(2));
        let doc: Vec<String> = ["I", "love", "it", "hate"].map(String::from).to_vec();
        let regions = encode_one_hot(&doc, &vocab, &c.region());
        let coords = region_coords(&vocab.ids(&doc), vocab.len(), &c.region());
        let gathered = region_preactivations(&p, &coords);
        for (r, g) in regions.iter().zip(&gathered) {
            let x = r.to_dense(15);
            for i in 0..3 {
                let dense: f64 = p[BIAS].get(0, i) + (0..15).map(|j| p[TABLE].get(j, i) * x[j]).sum::<f64>();
                assert!((dense - g[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_region_single_unit_by_hand() {
        let c = cfg(1, 1);
        let mut p = init(&c, 2, &mut ChaCha8Rng::seed_from_u64(0));
        for t in &mut p {
            t.values_mut().fill(0.0);
        }
        // Table row 1 is token 1 at region position 0.
        p[TABLE].values_mut()[1] = 0.7;
        p[BIAS].values_mut()[0] = 0.2;
        let pass = forward::<ChaCha8Rng>(&c, &p, 2, &[Some(1)], None);
        assert!((pass.z[0] - 0.9).abs() < 1e-12);
    }
}
