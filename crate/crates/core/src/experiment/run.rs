use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Family, GridMode};
use super::presets::neural_candidates;
use crate::annotation::load_annotations;
use crate::corpus::{augment, citation_sentence_index, derive_context_less, load_dataset, Dataset, Format, Polarity};
use crate::error::{Error, Result};
use crate::eval::{make_folds, ExperimentReport, FoldPlan, FoldReport};
use crate::features::{FoldFeatures, Segments};
use crate::neural::{self, NetConfig};
use crate::preprocess::{assemble_ensemble, AnnotatedSample, StopWords, TextForm};
use crate::svm::{grid_search, train_multiclass, GridResult, KernelSpec, SvmHyper};

/// A loaded dataset with every sample preprocessed.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub name: String,
    pub samples: Vec<AnnotatedSample>,
}

impl PreparedCorpus {
    /// Text-only preprocessing of an in-memory dataset.
    pub fn from_dataset(d: &Dataset, stopwords: &StopWords) -> Self {
        PreparedCorpus {
            name: d.name.clone(),
            samples: d.samples().iter().map(|s| AnnotatedSample::text_only(s, stopwords)).collect(),
        }
    }

    pub fn labels(&self) -> Vec<Polarity> {
        self.samples.iter().map(|s| s.base.label).collect()
    }

    pub fn segments(&self, form: TextForm) -> Vec<Segments> {
        self.samples.iter().map(|s| s.feature_segments(form)).collect()
    }

    /// Ensemble streams, the network input.
    pub fn streams(&self) -> Vec<Vec<String>> {
        self.samples.iter().map(|s| s.ensemble_stream.clone()).collect()
    }
}

fn prepare_one(
    path: &Path,
    annotations: Option<&Path>,
    derive: bool,
    stopwords: &StopWords,
) -> Result<(Dataset, Vec<AnnotatedSample>)> {
    let mut d = load_dataset(path, Format::from_path(path))?;
    if derive {
        let (index, _) = citation_sentence_index(&d);
        d = derive_context_less(&d, &index)?;
    }
    let samples = match annotations {
        None => d.samples().iter().map(|s| AnnotatedSample::text_only(s, stopwords)).collect(),
        Some(a) => {
            let file = load_annotations(a)?;
            let by_id = file.by_id();
            d.samples()
                .iter()
                .map(|s| {
                    let record = by_id.get(s.id.as_str()).ok_or_else(|| {
                        Error::Invalid(format!("{}: no annotation record for sample {:?}", a.display(), s.id))
                    })?;
                    assemble_ensemble(s, record, stopwords)
                })
                .collect::<Result<_>>()?
        }
    };
    Ok((d, samples))
}

/// Loads, derives, annotates and concatenates the configured dataset files.
pub fn prepare_corpus(cfg: &ExperimentConfig) -> Result<PreparedCorpus> {
    let d = &cfg.dataset;
    let stopwords = match &d.stopwords {
        Some(p) => StopWords::from_file(p)?,
        None => StopWords::english(),
    };
    let mut parts = Vec::new();
    for (i, path) in d.paths.iter().enumerate() {
        let ann = d.annotations.get(i).map(PathBuf::as_path);
        parts.push(prepare_one(path, ann, d.derive_context_less, &stopwords)?);
    }
    let name = cfg.dataset_name();
    let samples = match parts.len() {
        1 => parts.pop().expect("one part").1,
        _ => {
            let (b, sb) = parts.pop().expect("two parts");
            let (a, sa) = parts.pop().expect("two parts");
            let merged = augment(&a, &b, &name)?;
            sa.into_iter()
                .chain(sb)
                .zip(merged.samples())
                .map(|(s, base)| AnnotatedSample { base: base.clone(), ..s })
                .collect()
        }
    };
    Ok(PreparedCorpus { name, samples })
}

/// One network configuration scored by cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralTrial {
    pub parameters: String,
    pub config: NetConfig,
    pub mean_macro_f1: f64,
}

/// Record of a hyperparameter search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tuning {
    Svm(GridResult),
    Neural { trials: Vec<NeuralTrial> },
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub tuning: Option<Tuning>,
}

fn pick<T: Clone>(xs: &[T], rows: &[usize]) -> Vec<T> {
    rows.iter().map(|&i| xs[i].clone()).collect()
}

/// Value of a power of two or a tuned real, in the compact form of result tables.
pub fn format_param(v: f64) -> String {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e15 {
        format!("{v:.0}")
    } else if v >= 1e-3 {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn svm_parameters(cfg: &ExperimentConfig, hyper: &SvmHyper, gamma_auto: bool) -> String {
    let mut s = format!("{}, c = {}", cfg.features.featurizer().describe(), format_param(hyper.c));
    match hyper.kernel {
        KernelSpec::Rbf { .. } if gamma_auto => s.push_str(", g = 1/features"),
        KernelSpec::Rbf { gamma } => s.push_str(&format!(", g = {}", format_param(gamma))),
        KernelSpec::Linear => {}
    }
    s
}

fn svm_fold_features(cfg: &ExperimentConfig, corpus: &PreparedCorpus, plan: &FoldPlan) -> Result<Vec<FoldFeatures>> {
    let segments = corpus.segments(cfg.features.text_form);
    let labels = corpus.labels();
    let featurizer = cfg.features.featurizer();
    (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let train = plan.train_rows(f);
            let test = plan.test_rows(f);
            featurizer.fit_transform(
                &pick(&segments, &train),
                &pick(&labels, &train),
                &pick(&segments, test),
                &pick(&labels, test),
            )
        })
        .collect()
}

fn run_svm(cfg: &ExperimentConfig, corpus: &PreparedCorpus, plan: &FoldPlan) -> Result<Outcome> {
    let family = cfg.model.family;
    let folds = svm_fold_features(cfg, corpus, plan)?;
    let (tuning, fixed) = match cfg.model.grid {
        GridMode::Off => (None, None),
        GridMode::Sweep | GridMode::Full => {
            let base = cfg.svm.hyper(family, 1);
            let result = grid_search(&folds, &cfg.svm.grid(family), &base)?;
            let best = result.best;
            (Some(Tuning::Svm(result)), Some(best))
        }
    };
    let gamma_auto = fixed.is_none() && family == Family::SvmRbf && cfg.svm.gamma.is_none();
    let results: Vec<(FoldReport, Vec<String>, SvmHyper)> = folds
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let hyper = fixed.unwrap_or_else(|| cfg.svm.hyper(family, f.train.n_cols()));
            let model = train_multiclass(&f.train, &hyper)?;
            let pred = model.predict_all(&f.test.rows);
            let warnings = model.warnings.iter().map(|w| format!("fold {i}: {w}")).collect();
            Ok((FoldReport::new(i, &f.test.labels, &pred), warnings, hyper))
        })
        .collect::<Result<_>>()?;
    let hyper = results[0].2;
    let mut warnings = Vec::new();
    let mut reports = Vec::new();
    for (r, w, _) in results {
        reports.push(r);
        warnings.extend(w);
    }
    let mut report = ExperimentReport::new(
        family.label(),
        &corpus.name,
        svm_parameters(cfg, &hyper, gamma_auto),
        plan.clone(),
        reports,
    );
    report.warnings = warnings;
    Ok(Outcome { report, tuning })
}

fn cross_validate_net(net: &NetConfig, docs: &[Vec<String>], labels: &[Polarity], plan: &FoldPlan) -> Result<Vec<FoldReport>> {
    (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let train = plan.train_rows(f);
            let test = plan.test_rows(f);
            let model = neural::train(net, &pick(docs, &train), &pick(labels, &train))?;
            let truth = pick(labels, test);
            let pred: Vec<Polarity> = test.iter().map(|&i| model.predict(&docs[i])).collect();
            Ok(FoldReport::new(f, &truth, &pred))
        })
        .collect()
}

fn mean_f1(folds: &[FoldReport]) -> f64 {
    folds.iter().map(|f| f.macro_f1).sum::<f64>() / folds.len() as f64
}

fn run_neural(cfg: &ExperimentConfig, corpus: &PreparedCorpus, plan: &FoldPlan) -> Result<Outcome> {
    let base = cfg.net_config().expect("neural family");
    let docs = corpus.streams();
    let labels = corpus.labels();
    let candidates: Vec<NetConfig> = match cfg.model.grid {
        GridMode::Off => vec![base],
        mode => neural_candidates(&base, mode == GridMode::Full),
    };
    let mut best: Option<(usize, Vec<FoldReport>)> = None;
    let mut trials = Vec::new();
    for (i, net) in candidates.iter().enumerate() {
        net.validate()?;
        let folds = cross_validate_net(net, &docs, &labels, plan)?;
        let score = mean_f1(&folds);
        log::info!("{} [{}]: {score:.4}", net.arch, net.describe());
        trials.push(NeuralTrial {
            parameters: net.describe(),
            config: net.clone(),
            mean_macro_f1: score,
        });
        if best.as_ref().is_none_or(|(_, b)| score > mean_f1(b)) {
            best = Some((i, folds));
        }
    }
    let (i, folds) = best.expect("at least one candidate");
    let report = ExperimentReport::new(
        cfg.model.family.label(),
        &corpus.name,
        candidates[i].describe(),
        plan.clone(),
        folds,
    );
    let tuning = (cfg.model.grid != GridMode::Off).then_some(Tuning::Neural { trials });
    Ok(Outcome { report, tuning })
}

/// Cross-validates the configured model on a prepared corpus.
pub fn evaluate(cfg: &ExperimentConfig, corpus: &PreparedCorpus) -> Result<Outcome> {
    let labels = corpus.labels();
    let plan = make_folds(&labels, cfg.folds, cfg.seed)?;
    let mut out = if cfg.model.family.is_svm() {
        run_svm(cfg, corpus, &plan)?
    } else {
        run_neural(cfg, corpus, &plan)?
    };
    if !plan.stratified {
        out.report
            .warnings
            .insert(0, format!("a class has fewer than {} samples; folds are not stratified", cfg.folds));
    }
    Ok(out)
}

/// Echo of what produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub toolkit: String,
    pub version: String,
    pub seed: u64,
    pub dataset: String,
    pub samples: usize,
    pub class_counts: BTreeMap<Polarity, usize>,
    pub config: ExperimentConfig,
}

/// Files written by [`persist`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub tuning: Option<PathBuf>,
}

/// File stem of a run's outputs.
pub fn run_stem(cfg: &ExperimentConfig) -> String {
    format!("{}__{}", cfg.dataset_name().replace(['/', '\\', '+'], "_"), cfg.model.family)
}

/// Writes report JSON and CSV, the manifest and any tuning trace into `cfg.output`.
pub fn persist(cfg: &ExperimentConfig, corpus: &PreparedCorpus, outcome: &Outcome) -> Result<RunFiles> {
    let dir = &cfg.output;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = run_stem(cfg);
    let files = RunFiles {
        json: dir.join(format!("{stem}.json")),
        csv: dir.join(format!("{stem}.csv")),
        manifest: dir.join(format!("{stem}.manifest.json")),
        tuning: outcome.tuning.as_ref().map(|_| dir.join(format!("{stem}.grid.json"))),
    };
    outcome.report.write_json(&files.json)?;
    outcome.report.write_csv(&files.csv)?;
    let labels = corpus.labels();
    let manifest = Manifest {
        toolkit: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        dataset: corpus.name.clone(),
        samples: labels.len(),
        class_counts: Polarity::ALL.into_iter().map(|p| (p, labels.iter().filter(|&&l| l == p).count())).collect(),
        config: cfg.clone(),
    };
    write_json(&files.manifest, &manifest)?;
    if let (Some(path), Some(t)) = (&files.tuning, &outcome.tuning) {
        write_json(path, t)?;
    }
    Ok(files)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Validates, runs and persists one experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let corpus = prepare_corpus(cfg)?;
    let outcome = evaluate(cfg, &corpus)?;
    let files = persist(cfg, &corpus, &outcome)?;
    log::info!("wrote {}", files.json.display());
    Ok(outcome.report)
}
