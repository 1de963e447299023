use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::multiclass::train_multiclass;
use super::smo::SvmHyper;
use crate::eval::{macro_f1, ConfusionMatrix, FoldPlan};
use crate::features::{DocTermMatrix, FoldFeatures};
use crate::error::{Error, Result};

/// Base-2 exponent lattices for cost and (for rbf) gamma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub c_exponents: Vec<i32>,
    /// `None` searches a linear kernel.
    pub g_exponents: Option<Vec<i32>>,
    /// Re-search x−1, x, x+1 around the level-1 winner.
    #[serde(default = "yes")]
    pub refine: bool,
}

fn yes() -> bool {
    true
}

fn lattice(from: i32, to: i32, step: usize) -> Vec<i32> {
    (from..=to).step_by(step).collect()
}

impl GridSpec {
    /// c ∈ 2^{−3, −1, …, 15}.
    pub fn linear_default() -> Self {
        GridSpec {
            c_exponents: lattice(-3, 15, 2),
            g_exponents: None,
            refine: true,
        }
    }

    /// c ∈ 2^{−3, −1, …, 15}, g ∈ 2^{−15, −13, …, 3}.
    pub fn rbf_default() -> Self {
        GridSpec {
            g_exponents: Some(lattice(-15, 3, 2)),
            ..Self::linear_default()
        }
    }

    fn level_one(&self) -> Vec<(i32, Option<i32>)> {
        let mut out = Vec::new();
        for &c in &self.c_exponents {
            match &self.g_exponents {
                None => out.push((c, None)),
                Some(gs) => out.extend(gs.iter().map(|&g| (c, Some(g)))),
            }
        }
        out
    }
}

/// Exponents searched at level 2 around a level-1 winner `x`.
pub fn refinement(x: i32) -> [i32; 3] {
    [x - 1, x, x + 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub level: u8,
    pub c_exp: i32,
    pub g_exp: Option<i32>,
    pub score: f64,
}

impl GridPoint {
    pub fn c(&self) -> f64 {
        2f64.powi(self.c_exp)
    }

    pub fn gamma(&self) -> Option<f64> {
        self.g_exp.map(|g| 2f64.powi(g))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: SvmHyper,
    pub best_score: f64,
    pub trace: Vec<GridPoint>,
}

fn hyper_at(base: &SvmHyper, c_exp: i32, g_exp: Option<i32>) -> SvmHyper {
    SvmHyper {
        c: 2f64.powi(c_exp),
        kernel: match g_exp {
            None => KernelSpec::Linear,
            Some(g) => KernelSpec::Rbf { gamma: 2f64.powi(g) },
        },
        ..*base
    }
}

/// Mean macro-F1 over folds of one hyperparameter setting.
pub fn cross_validate(folds: &[FoldFeatures], hyper: &SvmHyper) -> Result<f64> {
    let mut total = 0.0;
    for f in folds {
        let model = train_multiclass(&f.train, hyper)?;
        let pred = model.predict_all(&f.test.rows);
        total += macro_f1(&ConfusionMatrix::from_predictions(&f.test.labels, &pred));
    }
    Ok(total / folds.len() as f64)
}

/// Splits a fixed matrix along a fold plan.
pub fn plan_folds(matrix: &DocTermMatrix, plan: &FoldPlan) -> Vec<FoldFeatures> {
    (0..plan.k)
        .map(|f| FoldFeatures {
            train: matrix.subset(&plan.train_rows(f)),
            test: matrix.subset(plan.test_rows(f)),
            selection: None,
        })
        .collect()
}

/// Better score wins; equal scores go to smaller C, then smaller gamma.
fn better(a: &GridPoint, b: &GridPoint) -> bool {
    a.score > b.score
        || (a.score == b.score && (a.c_exp, a.g_exp.unwrap_or(0)) < (b.c_exp, b.g_exp.unwrap_or(0)))
}

/// Two-level search maximising mean cross-validated macro-F1.
///
/// `base` supplies tolerance, iteration cap and cache size; its cost and kernel are replaced.
pub fn grid_search(folds: &[FoldFeatures], grid: &GridSpec, base: &SvmHyper) -> Result<GridResult> {
    if grid.c_exponents.is_empty() || grid.g_exponents.as_ref().is_some_and(Vec::is_empty) {
        return Err(Error::Invalid("empty grid".into()));
    }
    if folds.is_empty() {
        return Err(Error::Invalid("grid search needs at least one fold".into()));
    }
    let mut scored: BTreeMap<(i32, Option<i32>), GridPoint> = BTreeMap::new();
    let run = |level: u8, points: Vec<(i32, Option<i32>)>, scored: &mut BTreeMap<_, GridPoint>| -> Result<()> {
        let todo: Vec<_> = points.into_iter().filter(|p| !scored.contains_key(p)).collect();
        let results: Vec<Result<GridPoint>> = todo
            .par_iter()
            .map(|&(c_exp, g_exp)| {
                let score = cross_validate(folds, &hyper_at(base, c_exp, g_exp))?;
                log::debug!("level {level} c = 2^{c_exp} g = {g_exp:?}: {score:.4}");
                Ok(GridPoint { level, c_exp, g_exp, score })
            })
            .collect();
        for r in results {
            let p = r?;
            scored.insert((p.c_exp, p.g_exp), p);
        }
        Ok(())
    };
    run(1, grid.level_one(), &mut scored)?;
    let winner = |scored: &BTreeMap<_, GridPoint>| {
        *scored
            .values()
            .reduce(|best, p| if better(p, best) { p } else { best })
            .unwrap()
    };
    if grid.refine {
        let w = winner(&scored);
        let mut second = Vec::new();
        for c in refinement(w.c_exp) {
            match w.g_exp {
                None => second.push((c, None)),
                Some(g) => second.extend(refinement(g).map(|g| (c, Some(g)))),
            }
        }
        run(2, second, &mut scored)?;
    }
    let best = winner(&scored);
    let mut trace: Vec<GridPoint> = scored.into_values().collect();
    trace.sort_by_key(|p| (p.level, p.c_exp, p.g_exp));
    Ok(GridResult {
        best: hyper_at(base, best.c_exp, best.g_exp),
        best_score: best.score,
        trace,
    })
}
