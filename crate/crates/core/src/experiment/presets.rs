//! Published hyperparameter lists and per-table run configurations.

use std::path::{Path, PathBuf};

use super::config::{DatasetConfig, ExperimentConfig, FeatureConfig, Family, GridMode, ModelConfig, SvmConfig};
use crate::error::{Error, Result};
use crate::eval::DEFAULT_SEED;
use crate::features::{NGramScheme, SelectionMethod, SelectionSpec};
use crate::neural::{Arch, NetConfig, NetConfigPatch};

fn axis<T: Clone>(values: &[T], set: impl Fn(&mut NetConfigPatch, T)) -> Vec<NetConfigPatch> {
    values
        .iter()
        .map(|v| {
            let mut p = NetConfigPatch::default();
            set(&mut p, v.clone());
            p
        })
        .collect()
}

/// The searched value lists of an architecture, one list per hyperparameter.
///
/// For the one-hot networks the DRp list is omitted: their pooled layer is the top
/// layer, whose dropout is DRt.
pub fn neural_grid_axes(arch: Arch) -> Vec<Vec<NetConfigPatch>> {
    if arch.is_wvcnn() {
        vec![
            axis(&[10, 20, 30, 50], |p, v| p.batch_size = Some(v)),
            axis(&[40, 100, 128], |p, v| p.hidden = Some(v)),
            axis(&[0.2], |p, v| p.dropout_embed = Some(v)),
            axis(&[0.3, 0.5], |p, v| p.dropout_pool = Some(v)),
            axis(&[300], |p, v| p.em_dim = Some(v)),
            axis(&[vec![3, 4]], |p, v| p.windows = Some(v)),
            axis(&[100, 150, 200, 300], |p, v| p.seq_len = Some(Some(v))),
            axis(&[10, 25, 50], |p, v| p.epochs = Some(v)),
        ]
    } else {
        vec![
            axis(&[10, 20, 30, 40, 50, 100], |p, v| p.batch_size = Some(v)),
            axis(&[200, 250, 500, 1000], |p, v| p.hidden = Some(v)),
            axis(&[0.5], |p, v| p.dropout_top = Some(v)),
            axis(&[3, 5], |p, v| p.region_size = Some(v)),
            axis(&[50, 100], |p, v| p.epochs = Some(v)),
            axis(&[0.1, 0.2, 0.3], |p, v| p.lr_decay = Some(v)),
            axis(&[0.0, 1e-2, 1e-4, 1e-6], |p, v| p.l2 = Some(v)),
        ]
    }
}

/// Candidate networks around `base`: `base` itself then each list varied alone, or
/// with `full` the cartesian product of all lists. Duplicates are dropped, order is kept.
pub fn neural_candidates(base: &NetConfig, full: bool) -> Vec<NetConfig> {
    let axes = neural_grid_axes(base.arch);
    let patches: Vec<NetConfigPatch> = if full {
        axes.iter().fold(vec![NetConfigPatch::default()], |acc, values| {
            acc.iter().flat_map(|a| values.iter().map(move |v| a.merged(v))).collect()
        })
    } else {
        std::iter::once(NetConfigPatch::default()).chain(axes.into_iter().flatten()).collect()
    };
    let mut out: Vec<NetConfig> = Vec::new();
    for p in patches {
        let cfg = p.apply(base.clone());
        if !out.contains(&cfg) {
            out.push(cfg);
        }
    }
    out
}

/// Dataset, best bag-of-words settings and reported scores of one result table.
#[derive(Debug, Clone, PartialEq)]
pub struct TablePreset {
    pub table: u8,
    pub dataset: &'static str,
    /// Source files (without extension) concatenated in order.
    pub sources: &'static [&'static str],
    pub derive: bool,
    pub scheme: NGramScheme,
    pub selection_k: usize,
    pub c: f64,
    pub gamma: f64,
    /// Reported mean macro-F1 (%) per family.
    pub reported: [(Family, f64); 5],
}

const TABLE_FAMILIES: [Family; 5] = [
    Family::SvmRbf,
    Family::WvcnnRand,
    Family::WvcnnNonstatic,
    Family::OhCnn,
    Family::OhBilstmP,
];

const fn scores(v: [f64; 5]) -> [(Family, f64); 5] {
    [
        (TABLE_FAMILIES[0], v[0]),
        (TABLE_FAMILIES[1], v[1]),
        (TABLE_FAMILIES[2], v[2]),
        (TABLE_FAMILIES[3], v[3]),
        (TABLE_FAMILIES[4], v[4]),
    ]
}

pub const TABLES: [TablePreset; 7] = [
    TablePreset {
        table: 5,
        dataset: "elsev_context_full",
        sources: &["elsev_context_full"],
        derive: false,
        scheme: NGramScheme::Tri,
        selection_k: 500,
        c: 32768.0,
        gamma: 0.625,
        reported: scores([67.74, 66.3, 61.8, 65.95, 64.7]),
    },
    TablePreset {
        table: 6,
        dataset: "athar_context_full",
        sources: &["athar_context_full"],
        derive: false,
        scheme: NGramScheme::Bi,
        selection_k: 500,
        c: 32.0,
        gamma: 0.625,
        reported: scores([77.33, 54.03, 50.76, 65.2, 66.9]),
    },
    TablePreset {
        table: 7,
        dataset: "augmented_context_less",
        sources: &["elsev_context_less", "athar_context_less"],
        derive: false,
        scheme: NGramScheme::Uni,
        selection_k: 500,
        c: 8192.0,
        gamma: 6.11e-4,
        reported: scores([63.31, 56.85, 58.05, 58.1, 59.2]),
    },
    TablePreset {
        table: 8,
        dataset: "augmented_context_full",
        sources: &["elsev_context_full", "athar_context_full"],
        derive: false,
        scheme: NGramScheme::UniBiTri,
        selection_k: 250,
        c: 8192.0,
        gamma: 6.11e-4,
        reported: scores([64.85, 55.78, 52.99, 68.0, 69.0]),
    },
    TablePreset {
        table: 9,
        dataset: "elsev_context_full_derived",
        sources: &["elsev_context_full"],
        derive: true,
        scheme: NGramScheme::UniBiTri,
        selection_k: 500,
        c: 2.0,
        gamma: 0.0039,
        reported: scores([62.16, 41.68, 33.33, 39.33, 45.92]),
    },
    TablePreset {
        table: 10,
        dataset: "athar_context_full_derived",
        sources: &["athar_context_full"],
        derive: true,
        scheme: NGramScheme::UniBiTri,
        selection_k: 500,
        c: 2.0,
        gamma: 0.0039,
        reported: scores([62.97, 46.58, 39.45, 37.05, 49.9]),
    },
    TablePreset {
        table: 11,
        dataset: "augmented_context_full_derived",
        sources: &["elsev_context_full", "athar_context_full"],
        derive: true,
        scheme: NGramScheme::UniBiTri,
        selection_k: 500,
        c: 2.0,
        gamma: 0.0039,
        reported: scores([51.59, 49.45, 41.92, 49.77, 52.98]),
    },
];

pub fn table_preset(table: u8) -> Result<&'static TablePreset> {
    TABLES
        .iter()
        .find(|t| t.table == table)
        .ok_or_else(|| Error::Config(format!("no preset for table {table}; expected 5 to 11")))
}

fn find_data(dir: &Path, stem: &str) -> Option<PathBuf> {
    ["jsonl", "tsv"]
        .into_iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
}

/// Options for [`TablePreset::configs`].
#[derive(Debug, Clone, Default)]
pub struct TableOptions {
    pub embeddings: Option<PathBuf>,
    /// Re-tune instead of using the reported winners.
    pub grid: bool,
    /// Shrink networks and epochs for a desk-scale run.
    pub quick: bool,
}

impl TablePreset {
    /// Dataset section: a ready-made `<dataset>.jsonl` in `data_dir` if present,
    /// otherwise the source files, derived as needed. Annotation files named
    /// `<stem>.annotations.jsonl` are used when present for every part.
    pub fn dataset_config(&self, data_dir: &Path) -> Result<DatasetConfig> {
        let (paths, derive, ann_stems): (Vec<PathBuf>, bool, Vec<String>) = match find_data(data_dir, self.dataset) {
            Some(p) => (vec![p], false, vec![self.dataset.to_string()]),
            None => {
                let paths = self
                    .sources
                    .iter()
                    .map(|s| {
                        find_data(data_dir, s).ok_or_else(|| {
                            Error::Config(format!("{}: neither {}.jsonl nor {s}.jsonl found", data_dir.display(), self.dataset))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let stems = self
                    .sources
                    .iter()
                    .map(|s| if self.derive { format!("{s}_derived") } else { s.to_string() })
                    .collect();
                (paths, self.derive, stems)
            }
        };
        let annotations: Vec<PathBuf> = ann_stems
            .iter()
            .map(|s| data_dir.join(format!("{s}.annotations.jsonl")))
            .collect();
        let annotations = if annotations.iter().all(|p| p.is_file()) {
            annotations
        } else {
            log::warn!("no annotation files for {}; running on text alone", self.dataset);
            Vec::new()
        };
        Ok(DatasetConfig {
            paths,
            annotations,
            name: Some(self.dataset.to_string()),
            derive_context_less: derive,
            stopwords: None,
        })
    }

    /// One run configuration per family of the table. wvCNN_non-static is left out
    /// when no embeddings file is given.
    pub fn configs(&self, data_dir: &Path, output: &Path, opts: &TableOptions) -> Result<Vec<ExperimentConfig>> {
        let dataset = self.dataset_config(data_dir)?;
        let mut out = Vec::new();
        for family in TABLE_FAMILIES {
            if family == Family::WvcnnNonstatic && opts.embeddings.is_none() {
                log::warn!("skipping {family}: no embeddings file");
                continue;
            }
            let mut net = NetConfigPatch {
                embeddings: (family == Family::WvcnnNonstatic).then(|| opts.embeddings.clone()),
                ..Default::default()
            };
            if opts.quick {
                net.epochs = Some(if family == Family::OhBilstmP || family == Family::OhCnn { 10 } else { 5 });
                net.hidden = Some(if family.arch().is_some_and(Arch::is_wvcnn) { 40 } else { 100 });
                net.seq_len = family.arch().filter(|a| a.is_wvcnn()).map(|_| Some(100));
            }
            out.push(ExperimentConfig {
                folds: 10,
                seed: DEFAULT_SEED,
                output: output.to_path_buf(),
                dataset: dataset.clone(),
                features: FeatureConfig {
                    scheme: self.scheme,
                    selection: Some(SelectionSpec::new(SelectionMethod::ChiSquare, self.selection_k)?),
                    ..FeatureConfig::default()
                },
                model: ModelConfig {
                    family,
                    grid: if opts.grid && family.is_svm() { GridMode::Sweep } else { GridMode::Off },
                },
                svm: SvmConfig {
                    c: self.c,
                    gamma: Some(self.gamma),
                    ..SvmConfig::default()
                },
                net,
            });
        }
        Ok(out)
    }

    pub fn reported(&self, family: Family) -> Option<f64> {
        self.reported.iter().find(|(f, _)| *f == family).map(|(_, v)| *v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_and_full_sizes() {
        let base = NetConfig::preset(Arch::WvcnnRand);
        assert_eq!(neural_candidates(&base, true).len(), 4 * 3 * 2 * 4 * 3);
        // 4 + 3 + 1 + 2 + 1 + 1 + 4 + 3 values; one per list reproduces the preset.
        assert_eq!(neural_candidates(&base, false).len(), 19 - 8 + 1);
        let oh = NetConfig::preset(Arch::OhCnn);
        assert_eq!(neural_candidates(&oh, true).len(), 6 * 4 * 2 * 2 * 3 * 4);
        assert_eq!(neural_candidates(&oh, false)[0], oh);
    }

    #[test]
    fn presets_echo_reported_settings() {
        let t5 = table_preset(5).unwrap();
        assert_eq!((t5.scheme, t5.selection_k, t5.c, t5.gamma), (NGramScheme::Tri, 500, 32768.0, 0.625));
        assert_eq!(t5.reported(Family::SvmRbf), Some(67.74));
        assert_eq!(table_preset(8).unwrap().selection_k, 250);
        assert!(table_preset(4).is_err());
        assert!(table_preset(12).is_err());
    }

    #[test]
    fn table_configs_prefer_ready_files() {
        let dir = tempfile::tempdir().unwrap();
        let t = table_preset(11).unwrap();
        assert!(t.dataset_config(dir.path()).is_err());
        for s in ["elsev_context_full", "athar_context_full"] {
            std::fs::write(dir.path().join(format!("{s}.jsonl")), "").unwrap();
        }
        let d = t.dataset_config(dir.path()).unwrap();
        assert_eq!(d.paths.len(), 2);
        assert!(d.derive_context_less);
        assert!(d.annotations.is_empty());
        std::fs::write(dir.path().join("augmented_context_full_derived.jsonl"), "").unwrap();
        let d = t.dataset_config(dir.path()).unwrap();
        assert_eq!(d.paths.len(), 1);
        assert!(!d.derive_context_less);
        let cfgs = t.configs(dir.path(), Path::new("out"), &TableOptions::default()).unwrap();
        assert_eq!(cfgs.len(), 4);
        assert_eq!(cfgs[0].features.featurizer().describe(), "uni_bi_tri, chi_500");
    }
}
