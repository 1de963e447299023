use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::DocTermMatrix;
use crate::corpus::Polarity;
use crate::error::{Error, Result};
use crate::sparse::SparseVec;

const C: usize = Polarity::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    ChiSquare,
    InfoGain,
}

/// Top-k feature selection, written `chi_500`, `info_100` and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SelectionSpec {
    pub method: SelectionMethod,
    pub k: usize,
}

impl SelectionSpec {
    pub fn new(method: SelectionMethod, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("selection size k must be positive".into()));
        }
        Ok(SelectionSpec { method, k })
    }
}

impl fmt::Display for SelectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.method {
            SelectionMethod::ChiSquare => "chi",
            SelectionMethod::InfoGain => "info",
        };
        write!(f, "{prefix}_{}", self.k)
    }
}

impl FromStr for SelectionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("bad selection spec {s:?}; expected chi_<k> or info_<k>"));
        let (prefix, k) = s.split_once('_').ok_or_else(bad)?;
        let method = match prefix {
            "chi" => SelectionMethod::ChiSquare,
            "info" => SelectionMethod::InfoGain,
            _ => return Err(bad()),
        };
        SelectionSpec::new(method, k.parse().map_err(|_| bad())?)
    }
}

impl Serialize for SelectionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SelectionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-column document counts of term presence by class, plus class totals.
pub fn presence_counts(matrix: &DocTermMatrix) -> (Vec<[usize; C]>, [usize; C]) {
    let mut present = vec![[0usize; C]; matrix.n_cols()];
    let mut totals = [0usize; C];
    for (row, label) in matrix.rows.iter().zip(&matrix.labels) {
        let c = label.code();
        totals[c] += 1;
        for &col in &row.indices {
            present[col as usize][c] += 1;
        }
    }
    (present, totals)
}

/// χ² of the presence/absence × class table; cells with zero expectation add nothing.
pub fn chi_square_from_counts(present: &[usize; C], totals: &[usize; C]) -> f64 {
    let n: usize = totals.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n_present: usize = present.iter().sum();
    let n = n as f64;
    let mut chi = 0.0;
    for (row_total, observed) in [
        (n_present as f64, present.map(|p| p as f64)),
        (
            n - n_present as f64,
            std::array::from_fn(|c| (totals[c] - present[c]) as f64),
        ),
    ] {
        for c in 0..C {
            let expected = row_total * totals[c] as f64 / n;
            if expected > 0.0 {
                chi += (observed[c] - expected).powi(2) / expected;
            }
        }
    }
    chi
}

fn entropy_bits(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let p = k as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

/// Information gain of term presence about the class, in bits.
pub fn info_gain_from_counts(present: &[usize; C], totals: &[usize; C]) -> f64 {
    let n: usize = totals.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let absent: [usize; C] = std::array::from_fn(|c| totals[c] - present[c]);
    let n_present: usize = present.iter().sum();
    let p_present = n_present as f64 / n as f64;
    let ig = entropy_bits(totals)
        - p_present * entropy_bits(present)
        - (1.0 - p_present) * entropy_bits(&absent);
    // Rounding can leave a tiny negative value for independent terms.
    ig.max(0.0)
}

pub fn chi_square_score(column: usize, matrix: &DocTermMatrix) -> f64 {
    let (present, totals) = column_counts(column, matrix);
    chi_square_from_counts(&present, &totals)
}

pub fn info_gain_score(column: usize, matrix: &DocTermMatrix) -> f64 {
    let (present, totals) = column_counts(column, matrix);
    info_gain_from_counts(&present, &totals)
}

fn column_counts(column: usize, matrix: &DocTermMatrix) -> ([usize; C], [usize; C]) {
    let mut present = [0; C];
    let mut totals = [0; C];
    for (row, label) in matrix.rows.iter().zip(&matrix.labels) {
        totals[label.code()] += 1;
        if row.contains(column as u32) {
            present[label.code()] += 1;
        }
    }
    (present, totals)
}

/// Columns kept by a selection, in their original order, with the scores that ranked them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub spec: SelectionSpec,
    pub columns: Vec<usize>,
    pub scores: Vec<f64>,
}

impl Selection {
    /// Projects any matrix over the same vocabulary onto the kept columns.
    pub fn apply(&self, matrix: &DocTermMatrix) -> DocTermMatrix {
        let mut remap = vec![u32::MAX; matrix.n_cols()];
        for (new, &old) in self.columns.iter().enumerate() {
            remap[old] = new as u32;
        }
        let rows = matrix
            .rows
            .iter()
            .map(|row| {
                let mut out = SparseVec::default();
                for (c, w) in row.iter() {
                    let new = remap[c as usize];
                    if new != u32::MAX {
                        out.indices.push(new);
                        out.values.push(w);
                    }
                }
                out
            })
            .collect();
        DocTermMatrix {
            rows,
            labels: matrix.labels.clone(),
            terms: Arc::new(self.columns.iter().map(|&c| matrix.terms[c].clone()).collect()),
        }
    }
}

/// Keeps the k best-scoring features of `matrix` (its rows are the training rows).
/// Ties go to the lexicographically smaller feature.
pub fn select_top_k(matrix: &DocTermMatrix, spec: SelectionSpec) -> (DocTermMatrix, Selection) {
    let (present, totals) = presence_counts(matrix);
    let score = match spec.method {
        SelectionMethod::ChiSquare => chi_square_from_counts,
        SelectionMethod::InfoGain => info_gain_from_counts,
    };
    let scores: Vec<f64> = present.iter().map(|p| score(p, &totals)).collect();
    if spec.k > matrix.n_cols() {
        log::warn!(
            "requested {} features but only {} exist; keeping all",
            spec.k,
            matrix.n_cols()
        );
    }
    // Scores are compared at 1e-9 resolution so mathematically equal scores that
    // differ only by rounding still fall to the lexicographic tie rule.
    let key = |s: f64| (s * 1e9).round() as i64;
    let mut order: Vec<usize> = (0..matrix.n_cols()).collect();
    order.sort_by(|&a, &b| {
        key(scores[b])
            .cmp(&key(scores[a]))
            .then_with(|| matrix.terms[a].cmp(&matrix.terms[b]))
    });
    order.truncate(spec.k);
    order.sort_unstable();
    let selection = Selection {
        spec,
        scores: order.iter().map(|&c| scores[c]).collect(),
        columns: order,
    };
    (selection.apply(matrix), selection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{build_vocabulary, tfidf_matrix, NGramScheme, Segments};
    use proptest::prelude::*;

    fn matrix(docs: &[(&[&str], Polarity)]) -> DocTermMatrix {
        let segs: Vec<Segments> = docs
            .iter()
            .map(|(t, _)| vec![t.iter().map(|s| s.to_string()).collect()])
            .collect();
        let labels: Vec<Polarity> = docs.iter().map(|d| d.1).collect();
        let v = build_vocabulary(&segs, NGramScheme::Uni, 1).unwrap();
        tfidf_matrix(&segs, &labels, &v)
    }

    fn balanced_30(term_in: impl Fn(Polarity, usize) -> bool) -> DocTermMatrix {
        let mut docs: Vec<(Vec<&str>, Polarity)> = Vec::new();
        for p in Polarity::ALL {
            for i in 0..10 {
                let mut toks = vec!["filler"];
                if term_in(p, i) {
                    toks.push("t");
                }
                docs.push((toks, p));
            }
        }
        let refs: Vec<(&[&str], Polarity)> = docs.iter().map(|(t, p)| (t.as_slice(), *p)).collect();
        matrix(&refs)
    }

    #[test]
    fn perfect_association_chi_is_n() {
        let m = balanced_30(|p, _| p == Polarity::Positive);
        let col = m.terms.iter().position(|t| t == "t").unwrap();
        assert!((chi_square_score(col, &m) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn ubiquitous_and_absent_terms_score_zero() {
        let m = balanced_30(|_, _| true);
        let col = m.terms.iter().position(|t| t == "t").unwrap();
        assert_eq!(chi_square_score(col, &m), 0.0);
        assert_eq!(info_gain_score(col, &m), 0.0);
        assert_eq!(chi_square_from_counts(&[0, 0, 0], &[10, 10, 10]), 0.0);
        assert_eq!(info_gain_from_counts(&[0, 0, 0], &[10, 10, 10]), 0.0);
    }

    #[test]
    fn perfect_binary_indicator_gains_one_bit() {
        assert!((info_gain_from_counts(&[10, 0, 0], &[10, 10, 0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_indicator_info_gain() {
        // {10,10,10}, present in 10 positive + 5 neutral:
        // H(C) = log2 3; both halves have H = H(2/3, 1/3); IG = 2/3 exactly.
        let m = balanced_30(|p, i| p == Polarity::Positive || (p == Polarity::Neutral && i < 5));
        let col = m.terms.iter().position(|t| t == "t").unwrap();
        assert!((info_gain_score(col, &m) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn full_k_keeps_matrix() {
        let m = matrix(&[
            (&["a", "b"], Polarity::Positive),
            (&["b", "c"], Polarity::Negative),
            (&["c"], Polarity::Neutral),
        ]);
        let (out, sel) = select_top_k(&m, SelectionSpec::new(SelectionMethod::ChiSquare, 3).unwrap());
        assert_eq!(out, m);
        assert_eq!(sel.columns, [0, 1, 2]);
        let (out, _) = select_top_k(&m, SelectionSpec::new(SelectionMethod::InfoGain, 50).unwrap());
        assert_eq!(out.n_cols(), 3);
    }

    #[test]
    fn ties_keep_lexicographically_smaller() {
        // "x" and "y" have identical class profiles; k = 1 must keep "x".
        let m = matrix(&[
            (&["y", "x"], Polarity::Positive),
            (&["z"], Polarity::Negative),
            (&["z"], Polarity::Neutral),
        ]);
        let (out, _) = select_top_k(&m, SelectionSpec::new(SelectionMethod::ChiSquare, 1).unwrap());
        assert_eq!(out.terms.as_slice(), ["x"]);
    }

    #[test]
    fn parses_spec_names() {
        let s: SelectionSpec = "chi_500".parse().unwrap();
        assert_eq!(s, SelectionSpec::new(SelectionMethod::ChiSquare, 500).unwrap());
        assert_eq!("info_100".parse::<SelectionSpec>().unwrap().to_string(), "info_100");
        assert!("chi_0".parse::<SelectionSpec>().is_err());
        assert!("gini_5".parse::<SelectionSpec>().is_err());
    }

    proptest! {
        #[test]
        fn scores_nonnegative_and_order_invariant(
            rows in prop::collection::vec((prop::collection::vec(0u32..6, 0..6), 0usize..3), 2..20),
            seed in any::<u64>(),
        ) {
            let build = |rows: &[(Vec<u32>, usize)]| DocTermMatrix {
                rows: rows.iter().map(|(c, _)| SparseVec::from_pairs(c.iter().map(|&i| (i, 1.0)).collect())).collect(),
                labels: rows.iter().map(|(_, l)| Polarity::from_code(*l).unwrap()).collect(),
                terms: Arc::new((0..6).map(|i| format!("f{i}")).collect()),
            };
            let m = build(&rows);
            let mut shuffled = rows.clone();
            let n = shuffled.len();
            for i in 0..n {
                shuffled.swap(i, (seed as usize).wrapping_add(i * 7) % n);
            }
            let s = build(&shuffled);
            for col in 0..6 {
                let (a, b) = (chi_square_score(col, &m), info_gain_score(col, &m));
                prop_assert!(a >= 0.0 && b >= 0.0);
                prop_assert!((a - chi_square_score(col, &s)).abs() < 1e-9);
                prop_assert!((b - info_gain_score(col, &s)).abs() < 1e-9);
            }
            for k in 1..8 {
                let (out, _) = select_top_k(&m, SelectionSpec::new(SelectionMethod::InfoGain, k).unwrap());
                prop_assert_eq!(out.n_cols(), k.min(6));
            }
        }
    }
}
