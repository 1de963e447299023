use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;

/// Assignment of every sample to exactly one test fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    /// Sorted test row indices per fold.
    pub test: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn n_samples(&self) -> usize {
        self.test.iter().map(Vec::len).sum()
    }

    pub fn test_rows(&self, fold: usize) -> &[usize] {
        &self.test[fold]
    }

    /// All rows outside the fold's test set, ascending.
    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        let mut in_test = vec![false; self.n_samples()];
        for &i in &self.test[fold] {
            in_test[i] = true;
        }
        (0..in_test.len()).filter(|&i| !in_test[i]).collect()
    }
}

/// Stratified k-fold plan: each class is shuffled with the seed, and the classes,
/// concatenated, are dealt round-robin across folds. Falls back to a plain shuffle
/// when some present class has fewer than `k` samples.
pub fn make_folds(labels: &[Polarity], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Invalid(format!("need at least 2 folds, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::Invalid(format!(
            "{k} folds requested for {} samples",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); Polarity::COUNT];
    for (i, l) in labels.iter().enumerate() {
        by_class[l.code()].push(i);
    }
    let stratified = by_class.iter().all(|c| c.is_empty() || c.len() >= k);
    let order: Vec<usize> = if stratified {
        by_class
            .into_iter()
            .flat_map(|mut c| {
                c.shuffle(&mut rng);
                c
            })
            .collect()
    } else {
        log::warn!("a class has fewer than {k} samples; folds are not stratified");
        let mut all: Vec<usize> = (0..labels.len()).collect();
        all.shuffle(&mut rng);
        all
    };
    let mut test = vec![Vec::new(); k];
    for (pos, row) in order.into_iter().enumerate() {
        test[pos % k].push(row);
    }
    for fold in &mut test {
        fold.sort_unstable();
    }
    Ok(FoldPlan {
        k,
        seed,
        stratified,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(counts: [usize; 3]) -> Vec<Polarity> {
        Polarity::ALL
            .iter()
            .zip(counts)
            .flat_map(|(&p, n)| std::iter::repeat_n(p, n))
            .collect()
    }

    #[test]
    fn balanced_thirty_gives_one_of_each() {
        let l = labels([10, 10, 10]);
        let plan = make_folds(&l, 10, 7).unwrap();
        assert!(plan.stratified);
        for f in 0..10 {
            let mut codes: Vec<usize> = plan.test_rows(f).iter().map(|&i| l[i].code()).collect();
            codes.sort();
            assert_eq!(codes, [0, 1, 2]);
        }
    }

    #[test]
    fn seed_is_deterministic() {
        let l = labels([13, 5, 40]);
        assert_eq!(make_folds(&l, 5, 3).unwrap(), make_folds(&l, 5, 3).unwrap());
        assert_ne!(make_folds(&l, 5, 3).unwrap(), make_folds(&l, 5, 4).unwrap());
    }

    #[test]
    fn table_two_sized_dataset_fold_sizes() {
        // 2164 = 10·216 + 4: four folds of 217, six of 216.
        let l = labels([712, 316, 1136]);
        let plan = make_folds(&l, 10, DEFAULT_SEED).unwrap();
        let mut sizes: Vec<usize> = plan.test.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, [216, 216, 216, 216, 216, 216, 217, 217, 217, 217]);
    }

    #[test]
    fn too_many_folds_is_an_error() {
        assert!(make_folds(&labels([2, 1, 0]), 4, 1).is_err());
    }

    #[test]
    fn small_class_falls_back() {
        let plan = make_folds(&labels([20, 2, 20]), 5, 1).unwrap();
        assert!(!plan.stratified);
        assert_eq!(plan.n_samples(), 42);
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(
            counts in (10usize..60, 10usize..60, 0usize..60).prop_map(|(a, b, c)| [a, b, c]),
            k in 2usize..10,
            seed in any::<u64>(),
        ) {
            let l = labels(counts);
            let plan = make_folds(&l, k, seed).unwrap();
            let mut seen = vec![0; l.len()];
            for f in 0..k {
                for &i in plan.test_rows(f) {
                    seen[i] += 1;
                }
                let train = plan.train_rows(f);
                prop_assert_eq!(train.len() + plan.test_rows(f).len(), l.len());
                for p in Polarity::ALL.into_iter().filter(|_| plan.stratified) {
                    let in_fold = plan.test_rows(f).iter().filter(|&&i| l[i] == p).count() as f64;
                    prop_assert!((in_fold - counts[p.code()] as f64 / k as f64).abs() <= 1.0);
                }
            }
            prop_assert!(seen.iter().all(|&s| s == 1));
        }
    }
}
