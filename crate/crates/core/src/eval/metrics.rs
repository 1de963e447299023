use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;

const C: usize = Polarity::COUNT;

/// Counts indexed `[true class][predicted class]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; C]; C],
}

impl ConfusionMatrix {
    pub fn new(counts: [[usize; C]; C]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn from_predictions(truth: &[Polarity], predicted: &[Polarity]) -> Self {
        assert_eq!(truth.len(), predicted.len());
        let mut cm = ConfusionMatrix::default();
        for (t, p) in truth.iter().zip(predicted) {
            cm.add(*t, *p);
        }
        cm
    }

    pub fn add(&mut self, truth: Polarity, predicted: Polarity) {
        self.counts[truth.code()][predicted.code()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for t in 0..C {
            for p in 0..C {
                self.counts[t][p] += other.counts[t][p];
            }
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, c: usize) -> usize {
        self.counts[c][c]
    }

    /// Column total minus the diagonal.
    pub fn false_positives(&self, c: usize) -> usize {
        (0..C).map(|t| self.counts[t][c]).sum::<usize>() - self.counts[c][c]
    }

    /// Row total minus the diagonal.
    pub fn false_negatives(&self, c: usize) -> usize {
        self.counts[c].iter().sum::<usize>() - self.counts[c][c]
    }
}

/// A ratio that falls back to 0 when its denominator is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub value: f64,
    pub undefined: bool,
}

fn ratio(num: usize, den: usize) -> Ratio {
    if den == 0 {
        Ratio {
            value: 0.0,
            undefined: true,
        }
    } else {
        Ratio {
            value: num as f64 / den as f64,
            undefined: false,
        }
    }
}

pub fn precision_ratio(cm: &ConfusionMatrix, class: Polarity) -> Ratio {
    let c = class.code();
    let tp = cm.true_positives(c);
    ratio(tp, tp + cm.false_positives(c))
}

pub fn recall_ratio(cm: &ConfusionMatrix, class: Polarity) -> Ratio {
    let c = class.code();
    let tp = cm.true_positives(c);
    ratio(tp, tp + cm.false_negatives(c))
}

/// TP / (TP + FP); 0 when nothing was predicted as `class`.
pub fn precision(cm: &ConfusionMatrix, class: Polarity) -> f64 {
    precision_ratio(cm, class).value
}

/// TP / (TP + FN); 0 when `class` has no true samples.
pub fn recall(cm: &ConfusionMatrix, class: Polarity) -> f64 {
    recall_ratio(cm, class).value
}

pub fn f1(cm: &ConfusionMatrix, class: Polarity) -> f64 {
    let (p, r) = (precision(cm, class), recall(cm, class));
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Unweighted mean of the three per-class F1 scores.
pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    Polarity::ALL.iter().map(|&c| f1(cm, c)).sum::<f64>() / C as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub class: Polarity,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Precision or recall had a zero denominator and was set to 0.
    pub undefined: bool,
}

pub fn class_scores(cm: &ConfusionMatrix) -> Vec<ClassScores> {
    Polarity::ALL
        .iter()
        .map(|&class| {
            let p = precision_ratio(cm, class);
            let r = recall_ratio(cm, class);
            ClassScores {
                class,
                precision: p.value,
                recall: r.value,
                f1: f1(cm, class),
                undefined: p.undefined || r.undefined,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EXAMPLE: [[usize; 3]; 3] = [[5, 2, 0], [1, 3, 1], [0, 0, 8]];

    #[test]
    fn diagonal_is_perfect() {
        let cm = ConfusionMatrix::new([[4, 0, 0], [0, 2, 0], [0, 0, 9]]);
        for c in Polarity::ALL {
            assert_eq!(precision(&cm, c), 1.0);
            assert_eq!(recall(&cm, c), 1.0);
        }
        assert_eq!(macro_f1(&cm), 1.0);
    }

    #[test]
    fn example_matrix_by_hand() {
        let cm = ConfusionMatrix::new(EXAMPLE);
        assert_eq!(precision(&cm, Polarity::Positive), 5.0 / 6.0);
        assert_eq!(recall(&cm, Polarity::Positive), 5.0 / 7.0);
        // F1: 10/13, 3/5, 16/17.
        let expected = (10.0 / 13.0 + 3.0 / 5.0 + 16.0 / 17.0) / 3.0;
        assert!((macro_f1(&cm) - expected).abs() < 1e-12);
    }

    #[test]
    fn single_class_predictor_on_balanced_set() {
        let cm = ConfusionMatrix::new([[10, 0, 0], [10, 0, 0], [10, 0, 0]]);
        assert_eq!(macro_f1(&cm), 1.0 / 6.0);
    }

    #[test]
    fn empty_row_flags_recall() {
        let cm = ConfusionMatrix::new([[3, 0, 1], [0, 0, 0], [0, 0, 2]]);
        let r = recall_ratio(&cm, Polarity::Negative);
        assert_eq!(r.value, 0.0);
        assert!(r.undefined);
        assert!(class_scores(&cm)[1].undefined);
        assert!(!class_scores(&cm)[0].undefined);
    }

    proptest! {
        #[test]
        fn macro_f1_bounded_and_relabel_invariant(
            cells in prop::array::uniform9(0usize..20),
            perm in Just([0usize, 1, 2]).prop_shuffle(),
        ) {
            let counts: [[usize; 3]; 3] = std::array::from_fn(|t| std::array::from_fn(|p| cells[t * 3 + p]));
            let cm = ConfusionMatrix::new(counts);
            let m = macro_f1(&cm);
            prop_assert!((0.0..=1.0).contains(&m));
            let permuted = ConfusionMatrix::new(std::array::from_fn(|t| {
                std::array::from_fn(|p| counts[perm[t]][perm[p]])
            }));
            prop_assert!((macro_f1(&permuted) - m).abs() < 1e-12);
            prop_assert_eq!(cm.total(), cells.iter().sum::<usize>());
        }
    }
}
