//! Region-embedding and word-vector neural classifiers with hand-written
//! forward and backward passes in double precision.
//!
//! All three architectures read the same joint token vocabulary (text tokens plus
//! dependency and POS composites) and train with mini-batch SGD on mean
//! cross-entropy plus an L2 penalty on weight matrices.

mod config;
mod lstm;
mod oh_cnn;
mod onehot;
mod tensor;
mod wvcnn;

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;
use crate::error::{Error, Result};

pub use config::{Arch, NetConfig, NetConfigPatch};
pub use lstm::CellWeights;
pub use onehot::{encode_one_hot, region_count, RegionSpec, RegionVariant, TokenVocab};
pub use tensor::{pool_blocks, softmax, Grad, Param};
pub use wvcnn::{load_embeddings, pad_or_truncate, EMBED_INIT};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Central-difference step used by [`gradient_check`].
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean over batches of cross-entropy plus the L2 term.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedNet {
    pub version: u32,
    pub config: NetConfig,
    pub vocab: TokenVocab,
    pub params: Vec<Param>,
    pub log: Vec<EpochLog>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

enum Pass {
    Cnn(oh_cnn::Pass),
    Lstm(lstm::Pass),
    Wv(wvcnn::Pass),
}

impl Pass {
    fn probs(&self) -> &[f64] {
        match self {
            Pass::Cnn(p) => &p.out.probs,
            Pass::Lstm(p) => &p.out.probs,
            Pass::Wv(p) => &p.out.probs,
        }
    }
}

/// A document as token ids paired with its class code.
type Example = (Vec<Option<usize>>, usize);

impl TrainedNet {
    /// Randomly initialised network over `vocab`, seeded from the config.
    pub fn init(config: &NetConfig, vocab: TokenVocab) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::init_with(config, vocab, &mut rng)
    }

    fn init_with(config: &NetConfig, vocab: TokenVocab, rng: &mut ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        if vocab.is_empty() {
            return Err(Error::Invalid("empty vocabulary".into()));
        }
        let params = match config.arch {
            Arch::OhCnn => oh_cnn::init(config, vocab.len(), rng),
            Arch::OhBilstmP => lstm::init(config, vocab.len(), rng),
            Arch::WvcnnRand | Arch::WvcnnNonstatic => wvcnn::init(config, &vocab, rng)?,
        };
        Ok(TrainedNet {
            version: CHECKPOINT_VERSION,
            config: config.clone(),
            vocab,
            params,
            log: Vec::new(),
            warnings: Vec::new(),
        })
    }

    /// Token ids, truncated to `seq_len` for the one-hot nets when it is set.
    pub fn ids(&self, tokens: &[String]) -> Vec<Option<usize>> {
        let mut ids = self.vocab.ids(tokens);
        if !self.config.arch.is_wvcnn() {
            if let Some(len) = self.config.seq_len {
                if ids.len() > len {
                    log::warn!("document of {} tokens truncated to {len}", ids.len());
                    ids.truncate(len);
                }
            }
        }
        ids
    }

    fn forward(&self, ids: &[Option<usize>], rng: Option<&mut ChaCha8Rng>) -> Pass {
        let cfg = &self.config;
        match cfg.arch {
            Arch::OhCnn => Pass::Cnn(oh_cnn::forward(cfg, &self.params, self.vocab.len(), ids, rng)),
            Arch::OhBilstmP => Pass::Lstm(lstm::forward(cfg, &self.params, ids, rng)),
            Arch::WvcnnRand | Arch::WvcnnNonstatic => Pass::Wv(wvcnn::forward(cfg, &self.params, ids, rng)),
        }
    }

    fn backward(&self, pass: &Pass, label: usize, weight: f64, grads: &mut [Grad]) {
        let (cfg, p) = (&self.config, &self.params);
        match pass {
            Pass::Cnn(x) => oh_cnn::backward(cfg, p, x, label, weight, grads),
            Pass::Lstm(x) => lstm::backward(cfg, p, x, label, weight, grads),
            Pass::Wv(x) => wvcnn::backward(cfg, p, x, label, weight, grads),
        }
    }

    /// Class probabilities at inference (no dropout), indexed by class code.
    pub fn probabilities(&self, tokens: &[String]) -> Vec<f64> {
        self.forward(&self.ids(tokens), None).probs().to_vec()
    }

    pub fn predict(&self, tokens: &[String]) -> Polarity {
        let p = self.probabilities(tokens);
        let best = (0..p.len()).fold(0, |b, c| if p[c] > p[b] { c } else { b });
        Polarity::from_code(best).expect("three output classes")
    }

    /// Forward and backward hidden states of Oh-biLSTMp, in processing order.
    pub fn lstm_states(&self, tokens: &[String]) -> Option<[Vec<Vec<f64>>; 2]> {
        match self.forward(&self.ids(tokens), None) {
            Pass::Lstm(p) => Some([p.hidden(0).to_vec(), p.hidden(1).to_vec()]),
            _ => None,
        }
    }

    /// Per-gate weights of one Oh-biLSTMp direction (0 forward, 1 backward).
    pub fn lstm_cell(&self, direction: usize) -> Option<CellWeights> {
        (self.config.arch == Arch::OhBilstmP).then(|| lstm::cell_weights(&self.params, direction, self.config.hidden))
    }

    /// Adds U[−scale, scale] noise to every weight and bias. Gradient checks use it
    /// to move off the exact ties and ReLU kinks of zero-initialised biases.
    pub fn perturb(&mut self, scale: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in &mut self.params {
            for v in p.values_mut() {
                *v += rng.random_range(-scale..scale);
            }
        }
    }

    fn l2_term(&self) -> f64 {
        0.5 * self.config.l2 * self.params.iter().filter(|p| p.decay).map(Param::squared_norm).sum::<f64>()
    }

    fn zero_grads(&self) -> Vec<Grad> {
        self.params.iter().map(Grad::for_param).collect()
    }

    /// Mean cross-entropy over `examples` plus the L2 term, without dropout.
    fn objective(&self, examples: &[Example]) -> f64 {
        let ce: f64 = examples
            .iter()
            .map(|(ids, y)| tensor::cross_entropy(self.forward(ids, None).probs(), *y))
            .sum();
        ce / examples.len() as f64 + self.l2_term()
    }

    /// Gradient of mean cross-entropy (the L2 part is applied as weight decay).
    fn batch_gradient(&self, batch: &[Example], mut rng: Option<&mut ChaCha8Rng>) -> (f64, Vec<Grad>) {
        let mut grads = self.zero_grads();
        let weight = 1.0 / batch.len() as f64;
        let mut ce = 0.0;
        for (ids, y) in batch {
            let pass = self.forward(ids, rng.as_deref_mut());
            ce += tensor::cross_entropy(pass.probs(), *y);
            self.backward(&pass, *y, weight, &mut grads);
        }
        (ce * weight, grads)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let net: TrainedNet = serde_json::from_str(&body)?;
        if net.version != CHECKPOINT_VERSION {
            return Err(Error::Invalid(format!("unsupported checkpoint version {}", net.version)));
        }
        net.check_shapes()?;
        Ok(net)
    }

    /// Compares every tensor with the shape implied by the config and vocabulary.
    pub fn check_shapes(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fresh = TrainedNet::init_with(
            &NetConfig {
                embeddings: None,
                arch: if self.config.arch == Arch::WvcnnNonstatic { Arch::WvcnnRand } else { self.config.arch },
                ..self.config.clone()
            },
            self.vocab.clone(),
            &mut rng,
        )?;
        if fresh.params.len() != self.params.len() {
            return Err(Error::Shape {
                tensor: "parameter list".into(),
                expected: fresh.params.len().to_string(),
                actual: self.params.len().to_string(),
            });
        }
        for (want, got) in fresh.params.iter().zip(&self.params) {
            if (want.rows, want.cols) != (got.rows, got.cols) || got.values().len() != want.rows * want.cols {
                return Err(Error::Shape {
                    tensor: want.name.clone(),
                    expected: format!("{}×{}", want.rows, want.cols),
                    actual: format!("{}×{}", got.rows, got.cols),
                });
            }
        }
        Ok(())
    }
}

fn chop(ids: &[Option<usize>], len: usize) -> Vec<Vec<Option<usize>>> {
    if ids.is_empty() {
        return vec![Vec::new()];
    }
    ids.chunks(len).map(<[_]>::to_vec).collect()
}

/// Learning rate for a 0-based epoch: the base rate, multiplied by `lr_decay`
/// from epoch ⌊0.8·epochs⌋ on.
pub fn learning_rate(cfg: &NetConfig, epoch: usize) -> f64 {
    if epoch >= cfg.epochs * 4 / 5 {
        cfg.learning_rate * cfg.lr_decay
    } else {
        cfg.learning_rate
    }
}

/// Trains a network on tokenised documents. Deterministic for a fixed seed.
pub fn train(config: &NetConfig, docs: &[Vec<String>], labels: &[Polarity]) -> Result<TrainedNet> {
    if docs.len() != labels.len() {
        return Err(Error::Invalid(format!("{} documents but {} labels", docs.len(), labels.len())));
    }
    if let Some(missing) = Polarity::ALL.into_iter().find(|p| !labels.contains(p)) {
        return Err(Error::Invalid(format!("no training example of class {missing}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = TrainedNet::init_with(config, TokenVocab::build(docs), &mut rng)?;
    let mut examples: Vec<Example> = Vec::new();
    for (doc, label) in docs.iter().zip(labels) {
        let ids = net.ids(doc);
        if config.arch == Arch::OhBilstmP {
            examples.extend(chop(&ids, config.segment_len).into_iter().map(|s| (s, label.code())));
        } else {
            examples.push((ids, label.code()));
        }
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 0..config.epochs {
        let lr = learning_rate(config, epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<Example> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let (ce, grads) = net.batch_gradient(&batch, Some(&mut rng));
            let loss = ce + net.l2_term();
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            for (p, g) in net.params.iter_mut().zip(&grads) {
                p.sgd_step(g, lr, config.l2);
            }
            total += loss;
            batches += 1;
        }
        let loss = total / batches as f64;
        log::debug!("{} epoch {epoch}: loss {loss:.6}", config.arch);
        net.log.push(EpochLog {
            epoch,
            learning_rate: lr,
            loss,
        });
    }
    Ok(net)
}

/// Largest relative difference between the analytic gradient of the training
/// objective and central finite differences, over every weight. Dropout is off.
///
/// Relative error is |a − n| / max(|a|, |n|, 1e-6), so entries whose true
/// gradient is essentially zero are compared in absolute terms.
pub fn gradient_check(net: &TrainedNet, docs: &[Vec<String>], labels: &[Polarity]) -> f64 {
    let mut net = net.clone();
    for p in &mut net.params {
        p.normalize();
    }
    let examples: Vec<Example> = docs.iter().zip(labels).map(|(d, l)| (net.ids(d), l.code())).collect();
    let (_, grads) = net.batch_gradient(&examples, None);
    let l2 = net.config.l2;
    let mut worst: f64 = 0.0;
    for k in 0..net.params.len() {
        let mut analytic = grads[k].to_dense(&net.params[k]);
        if net.params[k].decay {
            for (a, w) in analytic.iter_mut().zip(net.params[k].values()) {
                *a += l2 * w;
            }
        }
        for i in 0..analytic.len() {
            let orig = net.params[k].values_mut()[i];
            net.params[k].values_mut()[i] = orig + FD_STEP;
            let up = net.objective(&examples);
            net.params[k].values_mut()[i] = orig - FD_STEP;
            let down = net.objective(&examples);
            net.params[k].values_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let a = analytic[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            if rel > worst {
                log::debug!("{}[{i}]: analytic {a:e}, numeric {numeric:e}", net.params[k].name);
            }
            worst = worst.max(rel);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    /// One keyword per class among shared filler words.
    fn keyword_corpus(n: usize, seed: u64) -> (Vec<Vec<String>>, Vec<Polarity>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fillers = ["the", "method", "of", "was", "used", "in", "our", "work"];
        let keys = ["excellent", "flawed", "describes"];
        let mut docs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let class = Polarity::ALL[i % 3];
            let len = rng.random_range(3..7);
            let mut d: Vec<String> = (0..len).map(|_| fillers[rng.random_range(0..fillers.len())].to_string()).collect();
            d.insert(rng.random_range(0..=len), keys[class.code()].to_string());
            docs.push(d);
            labels.push(class);
        }
        (docs, labels)
    }

    fn tiny(arch: Arch) -> NetConfig {
        NetConfig {
            arch,
            batch_size: 10,
            hidden: 8,
            dropout_embed: 0.0,
            dropout_pool: 0.3,
            dropout_top: 0.3,
            em_dim: 6,
            seq_len: if arch.is_wvcnn() { Some(8) } else { None },
            epochs: 40,
            learning_rate: if arch == Arch::OhBilstmP { 0.5 } else { 0.2 },
            lr_decay: 0.5,
            l2: 1e-4,
            pool_units: 2,
            segment_len: 5,
            ..NetConfig::preset(arch)
        }
    }

    #[test]
    fn separable_fixture_is_learned() {
        let (docs, labels) = keyword_corpus(60, 1);
        for arch in [Arch::OhCnn, Arch::OhBilstmP, Arch::WvcnnRand] {
            let net = train(&tiny(arch), &docs, &labels).unwrap();
            let pred: Vec<Polarity> = docs.iter().map(|d| net.predict(d)).collect();
            assert_eq!(pred, labels, "{arch}");
            assert!(net.log.last().unwrap().loss < net.log[0].loss);
        }
    }

    #[test]
    fn probabilities_sum_to_one_and_inference_is_repeatable() {
        let (docs, labels) = keyword_corpus(12, 2);
        for arch in [Arch::OhCnn, Arch::OhBilstmP, Arch::WvcnnRand] {
            let mut cfg = tiny(arch);
            cfg.epochs = 2;
            let net = train(&cfg, &docs, &labels).unwrap();
            for d in &docs {
                let p = net.probabilities(d);
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(p.iter().all(|&v| v >= 0.0));
                assert_eq!(p, net.probabilities(d));
            }
        }
    }

    #[test]
    fn zero_epochs_returns_initial_weights() {
        let (docs, labels) = keyword_corpus(9, 3);
        let mut cfg = tiny(Arch::OhCnn);
        cfg.epochs = 0;
        let net = train(&cfg, &docs, &labels).unwrap();
        let fresh = TrainedNet::init(&cfg, TokenVocab::build(&docs)).unwrap();
        assert_eq!(net.params, fresh.params);
        assert!(net.log.is_empty());
    }

    #[test]
    fn same_seed_same_log() {
        let (docs, labels) = keyword_corpus(15, 4);
        for arch in [Arch::OhCnn, Arch::OhBilstmP, Arch::WvcnnRand] {
            let mut cfg = tiny(arch);
            cfg.epochs = 3;
            let a = train(&cfg, &docs, &labels).unwrap();
            let b = train(&cfg, &docs, &labels).unwrap();
            assert_eq!(a.log, b.log);
            assert_eq!(a.params, b.params);
        }
    }

    #[test]
    fn decay_applies_after_four_fifths() {
        let cfg = NetConfig {
            epochs: 10,
            learning_rate: 0.5,
            lr_decay: 0.1,
            ..tiny(Arch::OhCnn)
        };
        assert_eq!(learning_rate(&cfg, 7), 0.5);
        assert_eq!(learning_rate(&cfg, 8), 0.05);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (docs, labels) = keyword_corpus(3, 5);
        for arch in [Arch::OhCnn, Arch::OhBilstmP, Arch::WvcnnRand] {
            let mut cfg = tiny(arch);
            cfg.l2 = 1e-2;
            let mut net = TrainedNet::init(&cfg, TokenVocab::build(&docs)).unwrap();
            net.perturb(0.1, 9);
            let err = gradient_check(&net, &docs, &labels);
            assert!(err < 1e-4, "{arch}: {err}");
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let (docs, labels) = keyword_corpus(9, 6);
        let mut cfg = tiny(Arch::OhBilstmP);
        cfg.epochs = 2;
        let net = train(&cfg, &docs, &labels).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        net.save_json(&path).unwrap();
        let back = TrainedNet::load_json(&path).unwrap();
        assert_eq!(back, net);
        let mut broken = net.clone();
        broken.params[1] = Param::zeros("fwd_u", 2, 2);
        broken.save_json(&path).unwrap();
        assert!(matches!(TrainedNet::load_json(&path), Err(Error::Shape { .. })));
    }

    #[test]
    fn missing_class_rejected() {
        let docs = vec![toks("a b"), toks("c d")];
        assert!(train(&tiny(Arch::OhCnn), &docs, &[Polarity::Positive, Polarity::Neutral]).is_err());
    }

    #[test]
    fn chopping_segments() {
        let ids: Vec<Option<usize>> = (0..7).map(Some).collect();
        let segs = chop(&ids, 3);
        assert_eq!(segs.iter().map(Vec::len).collect::<Vec<_>>(), [3, 3, 1]);
        assert_eq!(chop(&[], 3), vec![Vec::<Option<usize>>::new()]);
    }
}
