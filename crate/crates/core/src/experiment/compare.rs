use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{two_sample_t, ExperimentReport, TTest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub model: String,
    pub parameters: String,
    pub mean_macro_f1: f64,
    /// t of the baseline against this model; `None` on the baseline row.
    pub t: Option<TTest>,
}

/// Best-mean model against every other, rows in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareTable {
    pub dataset: String,
    pub baseline: usize,
    pub rows: Vec<CompareRow>,
}

impl CompareTable {
    /// Rows other than the baseline.
    pub fn comparisons(&self) -> impl Iterator<Item = &CompareRow> {
        self.rows.iter().enumerate().filter(move |(i, _)| *i != self.baseline).map(|(_, r)| r)
    }

    /// Tab-separated table: technique, parameter string, macro-F1 in percent, t.
    /// Significant t values carry a trailing `*`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("Techniques\tParameter\tMacro-F1 (%)\tt-statistic\n");
        for r in &self.rows {
            let t = match &r.t {
                None => "-".to_string(),
                Some(t) => format!("{:.2}{}", t.t, if t.significant { "*" } else { "" }),
            };
            writeln!(out, "{}\t{}\t{:.2}\t{}", r.model, r.parameters, 100.0 * r.mean_macro_f1, t).unwrap();
        }
        out
    }
}

/// Pairwise pooled t-tests of the best-mean report against the others.
///
/// All reports must cover the same dataset under the same fold plan. Ties for the
/// best mean go to the earlier report.
pub fn compare(reports: &[ExperimentReport]) -> Result<CompareTable> {
    let first = reports
        .first()
        .filter(|_| reports.len() >= 2)
        .ok_or_else(|| Error::Invalid(format!("compare needs at least two reports, got {}", reports.len())))?;
    for r in &reports[1..] {
        if r.dataset != first.dataset {
            return Err(Error::Invalid(format!("reports cover different datasets: {} and {}", first.dataset, r.dataset)));
        }
        if r.plan != first.plan {
            return Err(Error::Invalid(format!(
                "{} and {} were evaluated under different fold plans",
                first.model, r.model
            )));
        }
    }
    let baseline = (1..reports.len()).fold(0, |b, i| {
        if reports[i].mean_macro_f1 > reports[b].mean_macro_f1 {
            i
        } else {
            b
        }
    });
    let base_scores = reports[baseline].fold_scores();
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(CompareRow {
                model: r.model.clone(),
                parameters: r.parameters.clone(),
                mean_macro_f1: r.mean_macro_f1,
                t: if i == baseline { None } else { Some(two_sample_t(&base_scores, &r.fold_scores())?) },
            })
        })
        .collect::<Result<_>>()?;
    Ok(CompareTable {
        dataset: first.dataset.clone(),
        baseline,
        rows,
    })
}
