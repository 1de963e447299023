//! Cross-validation plans, confusion-matrix metrics, significance tests and reports.

mod folds;
mod metrics;
mod ttest;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;
use crate::error::{Error, Result};

pub use folds::{make_folds, FoldPlan, DEFAULT_SEED};
pub use metrics::{
    class_scores, f1, macro_f1, precision, precision_ratio, recall, recall_ratio, ClassScores,
    ConfusionMatrix, Ratio,
};
pub use ttest::{critical_value, two_sample_t, TTest, SIGNIFICANCE_LEVEL, T_CRITICAL_995_DF18};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassScores>,
    pub macro_f1: f64,
}

impl FoldReport {
    pub fn new(fold: usize, truth: &[Polarity], predicted: &[Polarity]) -> Self {
        let confusion = ConfusionMatrix::from_predictions(truth, predicted);
        FoldReport {
            fold,
            per_class: class_scores(&confusion),
            macro_f1: macro_f1(&confusion),
            confusion,
        }
    }
}

/// Cross-validated result of one model on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub model: String,
    pub dataset: String,
    /// Human-readable parameter string, e.g. `tri, chi_500, c = 32768, g = 0.625`.
    pub parameters: String,
    pub plan: FoldPlan,
    pub folds: Vec<FoldReport>,
    pub mean_macro_f1: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn new(
        model: impl Into<String>,
        dataset: impl Into<String>,
        parameters: impl Into<String>,
        plan: FoldPlan,
        folds: Vec<FoldReport>,
    ) -> Self {
        let mean_macro_f1 = folds.iter().map(|f| f.macro_f1).sum::<f64>() / folds.len().max(1) as f64;
        ExperimentReport {
            model: model.into(),
            dataset: dataset.into(),
            parameters: parameters.into(),
            plan,
            folds,
            mean_macro_f1,
            warnings: Vec::new(),
        }
    }

    pub fn fold_scores(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.macro_f1).collect()
    }

    /// Confusion matrix summed over folds.
    pub fn pooled_confusion(&self) -> ConfusionMatrix {
        let mut cm = ConfusionMatrix::default();
        for f in &self.folds {
            cm.merge(&f.confusion);
        }
        cm
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,dataset,fold,macro_f1\n");
        for f in &self.folds {
            writeln!(out, "{},{},{},{:.6}", self.model, self.dataset, f.fold, f.macro_f1).unwrap();
        }
        out
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_string_pretty(self)?;
        fs::write(path, body + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&body)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_is_arithmetic_mean_of_folds() {
        use Polarity::*;
        let l = [Positive, Negative, Neutral, Positive, Negative, Neutral];
        let plan = make_folds(&l, 2, 1).unwrap();
        let folds = vec![
            FoldReport::new(0, &[Positive, Negative, Neutral], &[Positive, Negative, Neutral]),
            FoldReport::new(1, &[Positive, Negative, Neutral], &[Positive, Positive, Positive]),
        ];
        let r = ExperimentReport::new("svm_rbf", "toy", "uni", plan, folds);
        assert!((r.mean_macro_f1 - (1.0 + 1.0 / 6.0) / 2.0).abs() < 1e-12);
        assert_eq!(r.pooled_confusion().total(), 6);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().starts_with("svm_rbf,toy,1,0.1666"));
    }
}
