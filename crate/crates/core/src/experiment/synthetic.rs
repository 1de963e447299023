//! Synthetic corpora where one keyword per class determines the label.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CitationSample, ContextKind, Dataset, Polarity};

/// Class keyword, indexed by polarity code.
pub const KEYWORDS: [&str; 3] = ["excellent", "flawed", "describes"];

const AUTHORS: [&str; 6] = ["Smith", "Chen", "Garcia", "Novak", "Okafor", "Lindqvist"];

const FILLERS: [&str; 24] = [
    "approach", "model", "corpus", "method", "baseline", "results", "parser", "features",
    "training", "dataset", "evaluation", "algorithm", "framework", "sentences", "annotation",
    "system", "network", "classifier", "benchmark", "experiments", "tagging", "retrieval",
    "citation", "analysis",
];

/// `n` samples with labels cycling positive, negative, neutral. Each text is a
/// citation marker, shuffled filler words and exactly one class keyword.
pub fn keyword_corpus(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|i| {
            let label = Polarity::ALL[i % 3];
            let n_fillers = rng.random_range(4..9);
            let mut words: Vec<&str> = FILLERS.choose_multiple(&mut rng, n_fillers).copied().collect();
            words.push(KEYWORDS[label.code()]);
            words.shuffle(&mut rng);
            let author = AUTHORS.choose(&mut rng).expect("non-empty");
            CitationSample {
                id: format!("syn{i:04}"),
                source_doc: format!("synthetic{}", i / 10),
                text: format!("{author} et al. [{}] {}.", i % 40 + 1, words.join(" ")),
                label,
                context_kind: ContextKind::ContextLess,
                citation_sentence_index: None,
            }
        })
        .collect();
    Dataset::new(format!("synthetic_{n}"), samples).expect("generated samples are valid")
}
