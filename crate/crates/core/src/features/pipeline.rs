use serde::{Deserialize, Serialize};

use super::{build_vocabulary, select_top_k, tfidf_matrix, DocTermMatrix, NGramScheme, Segments};
use super::{Selection, SelectionSpec};
use crate::corpus::Polarity;
use crate::error::Result;

/// Vocabulary, idf and selection settings for one bag-of-words run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub scheme: NGramScheme,
    #[serde(default = "default_min_df")]
    pub min_df: usize,
    #[serde(default)]
    pub selection: Option<SelectionSpec>,
}

fn default_min_df() -> usize {
    1
}

/// Train and test matrices over a vocabulary fitted on the training rows only.
#[derive(Debug, Clone)]
pub struct FoldFeatures {
    pub train: DocTermMatrix,
    pub test: DocTermMatrix,
    pub selection: Option<Selection>,
}

impl Featurizer {
    pub fn new(scheme: NGramScheme) -> Self {
        Featurizer {
            scheme,
            min_df: 1,
            selection: None,
        }
    }

    pub fn with_selection(mut self, spec: SelectionSpec) -> Self {
        self.selection = Some(spec);
        self
    }

    /// Fits vocabulary, document frequencies and selection scores on `train` and
    /// projects `test` onto the result.
    pub fn fit_transform(
        &self,
        train: &[Segments],
        train_labels: &[Polarity],
        test: &[Segments],
        test_labels: &[Polarity],
    ) -> Result<FoldFeatures> {
        let vocab = build_vocabulary(train, self.scheme, self.min_df)?;
        let train_m = tfidf_matrix(train, train_labels, &vocab);
        let test_m = tfidf_matrix(test, test_labels, &vocab);
        Ok(match self.selection {
            Some(spec) => {
                let (train_sel, selection) = select_top_k(&train_m, spec);
                FoldFeatures {
                    test: selection.apply(&test_m),
                    train: train_sel,
                    selection: Some(selection),
                }
            }
            None => FoldFeatures {
                train: train_m,
                test: test_m,
                selection: None,
            },
        })
    }

    /// Short description in the style `tri, chi_500`.
    pub fn describe(&self) -> String {
        match self.selection {
            Some(s) => format!("{}, {}", self.scheme, s),
            None => self.scheme.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SelectionMethod;

    fn doc(tokens: &[&str]) -> Segments {
        vec![tokens.iter().map(|s| s.to_string()).collect()]
    }

    #[test]
    fn test_only_terms_never_become_columns() {
        let train = [doc(&["good", "work"]), doc(&["bad", "work"])];
        let test = [doc(&["novelword", "good"])];
        let f = Featurizer::new(NGramScheme::Uni)
            .with_selection(SelectionSpec::new(SelectionMethod::ChiSquare, 10).unwrap());
        let out = f
            .fit_transform(
                &train,
                &[Polarity::Positive, Polarity::Negative],
                &test,
                &[Polarity::Positive],
            )
            .unwrap();
        assert!(!out.train.terms.contains(&"novelword".to_string()));
        assert_eq!(out.train.terms, out.test.terms);
        assert_eq!(out.test.rows[0].nnz(), 1);
        assert_eq!(f.describe(), "uni, chi_10");
    }
}
