use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::smo::{train_binary, BinaryModel, SvmHyper};
use crate::corpus::Polarity;
use crate::error::{Error, Result};
use crate::features::DocTermMatrix;
use crate::sparse::SparseVec;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Binary machine separating `positive` (+1) from `negative` (−1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub positive: Polarity,
    pub negative: Polarity,
    pub model: BinaryModel,
}

/// One-vs-one ensemble over the classes present in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub version: u32,
    pub hyper: SvmHyper,
    pub classes: Vec<Polarity>,
    pub pairs: Vec<PairModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn train_multiclass(matrix: &DocTermMatrix, hyper: &SvmHyper) -> Result<SvmModel> {
    train_rows(&matrix.rows, &matrix.labels, hyper)
}

pub fn train_rows(rows: &[SparseVec], labels: &[Polarity], hyper: &SvmHyper) -> Result<SvmModel> {
    hyper.validate()?;
    let mut warnings = Vec::new();
    let mut classes = Vec::new();
    for p in Polarity::ALL {
        if labels.contains(&p) {
            classes.push(p);
        } else {
            let w = format!("class {p} has no training rows and is excluded");
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    if classes.len() < 2 {
        return Err(Error::Invalid(format!(
            "need at least two classes to train, found {}",
            classes.len()
        )));
    }
    let mut pairs = Vec::new();
    for (a, &positive) in classes.iter().enumerate() {
        for &negative in &classes[a + 1..] {
            let (sub, y): (Vec<SparseVec>, Vec<f64>) = rows
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == positive || l == negative)
                .map(|(r, &l)| (r.clone(), if l == positive { 1.0 } else { -1.0 }))
                .unzip();
            let model = train_binary(&sub, &y, hyper)?;
            if !model.converged {
                warnings.push(format!("{positive} vs {negative}: iteration cap reached"));
            }
            pairs.push(PairModel {
                positive,
                negative,
                model,
            });
        }
    }
    Ok(SvmModel {
        version: MODEL_FORMAT_VERSION,
        hyper: *hyper,
        classes,
        pairs,
        warnings,
    })
}

impl SvmModel {
    pub fn kernel(&self) -> KernelSpec {
        self.hyper.kernel
    }

    /// Majority vote over pairs; ties go to the larger summed signed margin, then the lower class code.
    pub fn predict(&self, x: &SparseVec) -> Polarity {
        let mut votes = [0usize; Polarity::COUNT];
        let mut margin = [0.0f64; Polarity::COUNT];
        for p in &self.pairs {
            let d = p.model.decision(x);
            margin[p.positive.code()] += d;
            margin[p.negative.code()] -= d;
            if d > 0.0 {
                votes[p.positive.code()] += 1;
            } else {
                votes[p.negative.code()] += 1;
            }
        }
        let mut best = self.classes[0];
        for &c in &self.classes[1..] {
            let (k, b) = (c.code(), best.code());
            if votes[k] > votes[b] || (votes[k] == votes[b] && margin[k] > margin[b]) {
                best = c;
            }
        }
        best
    }

    pub fn predict_all(&self, rows: &[SparseVec]) -> Vec<Polarity> {
        rows.iter().map(|x| self.predict(x)).collect()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_string(self)?;
        fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: SvmModel = serde_json::from_str(&body)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported model format version {}",
                model.version
            )));
        }
        Ok(model)
    }
}
