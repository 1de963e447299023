//! Bag-of-n-grams features: vocabularies, TF-IDF document-term matrices and
//! χ² / information-gain feature selection.
//!
//! A document is a list of token segments. N-grams are formed inside a segment and
//! joined by a single space; they never straddle two segments.

mod pipeline;
mod select;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;
use crate::error::{Error, Result};
use crate::sparse::SparseVec;

pub use pipeline::{FoldFeatures, Featurizer};
pub use select::{
    chi_square_from_counts, chi_square_score, info_gain_from_counts, info_gain_score,
    presence_counts, select_top_k, Selection, SelectionMethod, SelectionSpec,
};

/// Token segments of one document.
pub type Segments = Vec<Vec<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NGramScheme {
    Uni,
    Bi,
    Tri,
    UniBi,
    UniBiTri,
}

impl NGramScheme {
    pub const ALL: [NGramScheme; 5] = [
        NGramScheme::Uni,
        NGramScheme::Bi,
        NGramScheme::Tri,
        NGramScheme::UniBi,
        NGramScheme::UniBiTri,
    ];

    pub fn sizes(self) -> &'static [usize] {
        match self {
            NGramScheme::Uni => &[1],
            NGramScheme::Bi => &[2],
            NGramScheme::Tri => &[3],
            NGramScheme::UniBi => &[1, 2],
            NGramScheme::UniBiTri => &[1, 2, 3],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NGramScheme::Uni => "uni",
            NGramScheme::Bi => "bi",
            NGramScheme::Tri => "tri",
            NGramScheme::UniBi => "uni_bi",
            NGramScheme::UniBiTri => "uni_bi_tri",
        }
    }
}

impl fmt::Display for NGramScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NGramScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown n-gram scheme {s:?}")))
    }
}

/// All n-grams of a document under a scheme, in order of appearance.
pub fn ngrams(doc: &[Vec<String>], scheme: NGramScheme) -> Vec<String> {
    let mut out = Vec::new();
    for segment in doc {
        for &n in scheme.sizes() {
            out.extend(segment.windows(n).map(|w| w.join(" ")));
        }
    }
    out
}

/// Wraps flat token streams as single-segment documents.
pub fn single_segment(streams: &[Vec<String>]) -> Vec<Segments> {
    streams.iter().map(|s| vec![s.clone()]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub scheme: NGramScheme,
    /// Features in lexicographic order; position is the column index.
    terms: Vec<String>,
    df: Vec<usize>,
    /// Number of documents the vocabulary was built from.
    n_docs: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn from_parts(scheme: NGramScheme, terms: Vec<String>, df: Vec<usize>, n_docs: usize) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            scheme,
            terms,
            df,
            n_docs,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, column: usize) -> usize {
        self.df[column]
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn idf(&self, column: usize) -> f64 {
        (self.n_docs as f64 / self.df[column] as f64).ln()
    }
}

pub fn build_vocabulary(docs: &[Segments], scheme: NGramScheme, min_df: usize) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Invalid("cannot build a vocabulary from zero documents".into()));
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in docs {
        let mut grams = ngrams(doc, scheme);
        grams.sort_unstable();
        grams.dedup();
        for g in grams {
            *df.entry(g).or_default() += 1;
        }
    }
    let mut entries: Vec<(String, usize)> = df
        .into_iter()
        .filter(|&(_, count)| count >= min_df.max(1))
        .collect();
    entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let (terms, df) = entries.into_iter().unzip();
    Ok(Vocabulary::from_parts(scheme, terms, df, docs.len()))
}

/// Sparse sample × feature matrix. Every feature occurring in a document has a
/// stored entry, even when its weight is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    pub rows: Vec<SparseVec>,
    pub labels: Vec<Polarity>,
    /// Column names.
    pub terms: Arc<Vec<String>>,
}

impl DocTermMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.terms.len()
    }

    pub fn subset(&self, rows: &[usize]) -> DocTermMatrix {
        DocTermMatrix {
            rows: rows.iter().map(|&r| self.rows[r].clone()).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            terms: Arc::clone(&self.terms),
        }
    }

    /// Writes `row col weight` triplets plus a sidecar with one feature per line.
    pub fn write_triplets(&self, path: &Path, vocab_path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for (c, w) in row.iter() {
                writeln!(out, "{r} {c} {w}").expect("write to Vec");
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))?;
        let mut sidecar = self.terms.join("\n");
        sidecar.push('\n');
        fs::write(vocab_path, sidecar).map_err(|e| Error::io(vocab_path, e))
    }
}

/// TF-IDF weights `ln(1 + tf) · ln(N / df)` with N and df taken from the vocabulary.
pub fn tfidf_matrix(docs: &[Segments], labels: &[Polarity], vocab: &Vocabulary) -> DocTermMatrix {
    assert_eq!(docs.len(), labels.len(), "one label per document");
    let rows = docs
        .iter()
        .map(|doc| {
            let mut tf: HashMap<usize, usize> = HashMap::new();
            for g in ngrams(doc, vocab.scheme) {
                if let Some(col) = vocab.get(&g) {
                    *tf.entry(col).or_default() += 1;
                }
            }
            SparseVec::from_pairs(
                tf.into_iter()
                    .map(|(col, count)| (col as u32, (1.0 + count as f64).ln() * vocab.idf(col)))
                    .collect(),
            )
        })
        .collect();
    DocTermMatrix {
        rows,
        labels: labels.to_vec(),
        terms: Arc::new(vocab.terms.clone()),
    }
}
